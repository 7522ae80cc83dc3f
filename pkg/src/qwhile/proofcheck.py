"""Checking proof scripts for the partial and total correctness proof systems.

A script is a DAG of steps. Each step concludes a judgment ``{pre} S {post}``
where ``S`` is named by its child-index path in the main program, and is
justified by one rule whose side conditions are re-verified numerically.
Axioms and structural rules are exact identities checked in max-norm at
``tol_eq``; Order uses the Löwner test at ``tol_psd`` and LoopTotal discharges
its bound-function premise with :func:`qwhile.verify.check_ranking`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from qwhile.config import DEFAULT_CONFIG, EvalConfig
from qwhile.errors import DimensionError, FormatError, ProofScriptError
from qwhile.formats import load_json, matrix_from_json, matrix_to_json
from qwhile.lang import ast
from qwhile.lang.typecheck import TypedUnit
from qwhile.linalg import (
    SpaceShape,
    conjugate_adjoint,
    embed,
    hermitian_part,
    is_hermitian,
    loewner_gap,
    max_abs,
)
from qwhile.predicates import FixpointReport, QuantumPredicate, loop_fixpoint, transform_matrix
from qwhile.semantics import init_adjoint
from qwhile.verify import check_ranking

RULES = ("AxSkip", "AxInit", "AxUnitary", "Seq", "Measure", "LoopPartial", "LoopTotal", "Order")
MODES = ("partial", "total")

OK = "ok"
VIOLATION = "violation"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Judgment:
    pre: str
    path: str
    post: str


@dataclass(frozen=True, eq=False)
class ProofStep:
    id: str
    rule: str
    conclusion: Judgment
    premises: tuple[str, ...] = ()
    params: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "rule": self.rule,
            "pre": self.conclusion.pre,
            "path": self.conclusion.path,
            "post": self.conclusion.post,
            "premises": list(self.premises),
            "params": self.params,
        }


@dataclass(eq=False)
class ProofScript:
    mode: str
    steps: list[ProofStep]
    goal: str
    # name -> inline matrix object (optionally with "register") or a file path
    predicates: dict = field(default_factory=dict)
    base_dir: Optional[Path] = None
    flagged: dict = field(default_factory=dict)  # step id -> reason; set by the skeleton generator

    def step(self, sid: str) -> ProofStep:
        for s in self.steps:
            if s.id == sid:
                return s
        raise ProofScriptError(f"no step with id {sid!r}")

    def to_json(self) -> dict:
        out = {
            "mode": self.mode,
            "predicates": self.predicates,
            "steps": [s.to_json() for s in self.steps],
            "goal": self.goal,
        }
        if self.flagged:
            out["flagged"] = dict(sorted(self.flagged.items()))
        return out

    @classmethod
    def from_json(cls, obj, base_dir=None) -> "ProofScript":
        if not isinstance(obj, dict):
            raise ProofScriptError("proof script must be a JSON object")
        mode = obj.get("mode")
        if mode not in MODES:
            raise ProofScriptError(f"mode must be one of {MODES}, got {mode!r}")
        preds = obj.get("predicates", {})
        if not isinstance(preds, dict):
            raise ProofScriptError("'predicates' must be an object")
        raw_steps = obj.get("steps")
        if not isinstance(raw_steps, list) or not raw_steps:
            raise ProofScriptError("'steps' must be a nonempty list")
        steps = []
        for i, st in enumerate(raw_steps):
            try:
                sid = str(st["id"])
                rule = st["rule"]
                judg = Judgment(str(st["pre"]), str(st.get("path", "")), str(st["post"]))
            except (KeyError, TypeError):
                raise ProofScriptError(f"step {i} needs 'id', 'rule', 'pre', 'path' and 'post'") from None
            if rule not in RULES:
                raise ProofScriptError(f"step {sid!r}: unknown rule {rule!r}")
            premises = st.get("premises", [])
            params = st.get("params", {})
            if not isinstance(premises, list) or not isinstance(params, dict):
                raise ProofScriptError(f"step {sid!r}: 'premises' must be a list and 'params' an object")
            steps.append(ProofStep(sid, rule, judg, tuple(str(p) for p in premises), params))
        if "goal" not in obj:
            raise ProofScriptError("script has no 'goal'")
        flagged = obj.get("flagged", {})
        return cls(mode, steps, str(obj["goal"]), preds,
                   Path(base_dir) if base_dir is not None else None,
                   dict(flagged) if isinstance(flagged, dict) else {})


def load_script(path) -> ProofScript:
    path = Path(path)
    try:
        obj = load_json(path)
    except (OSError, FormatError) as exc:
        raise ProofScriptError(str(exc)) from None
    return ProofScript.from_json(obj, path.parent)


# predicate resolution

class _Predicates:
    def __init__(self, script: ProofScript, shape: SpaceShape, extra: Optional[dict], cfg: EvalConfig):
        self.script = script
        self.shape = shape
        self.extra = extra or {}
        self.cfg = cfg
        self.cache: dict[str, np.ndarray] = {}

    def __call__(self, name) -> np.ndarray:
        if not isinstance(name, str):
            raise ProofScriptError(f"predicate reference must be a name, got {name!r}")
        if name in self.cache:
            return self.cache[name]
        if name in self.extra:
            value = self.extra[name]
            mat = value.matrix if isinstance(value, QuantumPredicate) else np.asarray(value, dtype=complex)
        elif name in self.script.predicates:
            mat = self._load(name, self.script.predicates[name])
        else:
            raise ProofScriptError(f"unknown predicate {name!r}")
        d = self.shape.total_dim
        if mat.shape != (d, d):
            raise ProofScriptError(f"predicate {name!r} has shape {mat.shape}, the program space has dimension {d}")
        tol = self.cfg.tol_psd
        if not is_hermitian(mat, tol):
            raise ProofScriptError(f"predicate {name!r} is not Hermitian")
        lo, _ = loewner_gap(np.zeros((d, d)), mat)
        hi, _ = loewner_gap(mat, np.eye(d))
        if lo < -tol or hi < -tol:
            raise ProofScriptError(f"predicate {name!r} is not between 0 and I (eigenvalue margins {lo:.3g}, {hi:.3g})")
        self.cache[name] = mat
        return mat

    def _load(self, name, entry) -> np.ndarray:
        try:
            if isinstance(entry, str):
                base = self.script.base_dir or Path(".")
                entry = load_json(base / entry)
            mat = matrix_from_json(entry)
            register = entry.get("register")
            if register is not None:
                mat = embed(mat, [str(r) for r in register], self.shape, self.cfg.dim_cap)
        except (OSError, FormatError, DimensionError) as exc:
            raise ProofScriptError(f"predicate {name!r}: {exc}") from None
        return mat


# single-step checking

@dataclass
class Condition:
    kind: str  # structure, mode, equal, loewner, ranking
    what: str
    ok: bool
    margin: Optional[float] = None  # max deviation for equal, least eigenvalue for loewner

    def to_json(self) -> dict:
        return {"kind": self.kind, "what": self.what, "ok": self.ok, "margin": self.margin}


@dataclass
class StepResult:
    step: ProofStep
    status: str
    conditions: list[Condition] = field(default_factory=list)

    @property
    def message(self) -> str:
        bad = [c for c in self.conditions if not c.ok]
        if not bad:
            return "ok"
        c = bad[0]
        extra = "" if c.margin is None else f" ({'max deviation' if c.kind == 'equal' else 'margin'} {c.margin:.3g})"
        return f"step {self.step.id!r} ({self.step.rule}): {c.what}{extra}"

    def to_json(self) -> dict:
        return {
            "id": self.step.id,
            "rule": self.step.rule,
            "path": self.step.conclusion.path,
            "status": self.status,
            "conditions": [c.to_json() for c in self.conditions],
        }


@dataclass
class StepContext:
    """What a step needs beyond itself: the program, resolved premises and mode."""

    unit: TypedUnit
    mode: str
    premises: list[ProofStep]
    predicate: object  # callable name -> matrix


_NODE_OF_RULE = {
    "AxSkip": ast.Skip, "AxInit": ast.Init, "AxUnitary": ast.Unitary, "Seq": ast.Seq,
    "Measure": ast.Measure, "LoopPartial": ast.While, "LoopTotal": ast.While,
}


class _Checks:
    def __init__(self, cfg: EvalConfig):
        self.cfg = cfg
        self.out: list[Condition] = []
        self.inconclusive = False

    def structure(self, what: str, ok: bool) -> bool:
        self.out.append(Condition("structure", what, bool(ok)))
        return ok

    def equal(self, what: str, a: np.ndarray, b: np.ndarray) -> bool:
        dev = max_abs(a - b)
        ok = dev <= self.cfg.tol_eq
        self.out.append(Condition("equal", what, ok, dev))
        return ok

    def leq(self, what: str, a: np.ndarray, b: np.ndarray) -> bool:
        gap, _ = loewner_gap(a, b)
        ok = gap >= -self.cfg.tol_psd
        self.out.append(Condition("loewner", what, ok, gap))
        return ok

    def premise(self, prem: ProofStep, path: str, pre: Optional[np.ndarray], post: Optional[np.ndarray],
                pred, label: str) -> bool:
        ok = self.structure(f"{label} premise {prem.id!r} concerns path {path!r}", prem.conclusion.path == path)
        if pre is not None:
            ok &= self.equal(f"{label} premise precondition", pred(prem.conclusion.pre), pre)
        if post is not None:
            ok &= self.equal(f"{label} premise postcondition", pred(prem.conclusion.post), post)
        return ok


def _init_pre(q: ast.Init, post: np.ndarray, shape: SpaceShape, kind: str) -> np.ndarray:
    """Initialisation axiom precondition written out per type via Kraus operators ``|0><n|``."""
    d = shape.dim_of(q.var)
    if kind == "bool":
        k0 = np.array([[1, 0], [0, 0]], dtype=complex)
        k1 = np.array([[0, 1], [0, 0]], dtype=complex)
        return conjugate_adjoint(k0, [q.var], post, shape) + conjugate_adjoint(k1, [q.var], post, shape)
    out = np.zeros_like(post)
    for n in range(d):
        k = np.zeros((d, d), dtype=complex)
        k[0, n] = 1.0
        out = out + conjugate_adjoint(k, [q.var], post, shape)
    return out


def _param(step: ProofStep, key: str):
    if key not in step.params:
        raise ProofScriptError(f"step {step.id!r} ({step.rule}) needs parameter {key!r}")
    return step.params[key]


def check_step(step: ProofStep, context: StepContext, cfg: EvalConfig = DEFAULT_CONFIG) -> StepResult:
    """Verify one rule application, assuming its premises are already checked."""
    unit, pred = context.unit, context.predicate
    shape = unit.shape
    c = _Checks(cfg)
    j = step.conclusion
    try:
        node = ast.subprogram(unit.main, j.path)
    except KeyError as exc:
        raise ProofScriptError(f"step {step.id!r}: {exc.args[0]}") from None
    pre, post = pred(j.pre), pred(j.post)
    prem = context.premises
    rule = step.rule

    arity = {"AxSkip": 0, "AxInit": 0, "AxUnitary": 0, "Seq": 2, "LoopPartial": 1, "LoopTotal": 1, "Order": 1}
    want = len(node.arms) if rule == "Measure" and isinstance(node, ast.Measure) else arity.get(rule)
    if want is not None and not c.structure(f"{rule} takes {want} premise(s)", len(prem) == want):
        return StepResult(step, VIOLATION, c.out)
    if rule in _NODE_OF_RULE and not c.structure(
            f"{rule} applies to {_NODE_OF_RULE[rule].__name__}, path {j.path!r} is {type(node).__name__}",
            isinstance(node, _NODE_OF_RULE[rule])):
        return StepResult(step, VIOLATION, c.out)
    if rule == "LoopPartial" and not c.structure("LoopPartial is not a rule of the total-correctness system",
                                                 context.mode == "partial"):
        return StepResult(step, VIOLATION, c.out)

    if rule == "AxSkip":
        c.equal("pre equals post", pre, post)
    elif rule == "AxInit":
        c.equal("pre equals the initialisation transform of post", pre, _init_pre(node, post, shape, unit.kind_of(node.var)))
    elif rule == "AxUnitary":
        c.equal("pre equals U† post U", pre, conjugate_adjoint(node.matrix, node.register, post, shape))
    elif rule == "Seq":
        mid = pred(_param(step, "Q"))
        c.premise(prem[0], ast.child_path(j.path, 0), pre, mid, pred, "first")
        c.premise(prem[1], ast.child_path(j.path, 1), mid, post, pred, "second")
    elif rule == "Measure":
        names = _param(step, "P")
        if isinstance(names, dict):
            names = [names.get(str(m)) for m, _ in node.arms]
        if not c.structure("one postcondition P_m per outcome", isinstance(names, list) and len(names) == len(node.arms)):
            return StepResult(step, VIOLATION, c.out)
        total = np.zeros_like(post)
        for k, ((m, _), op, name) in enumerate(zip(node.arms, node.ops, names)):
            pm = pred(name)
            c.premise(prem[k], ast.child_path(j.path, k), pm, post, pred, f"outcome {m}")
            total = total + conjugate_adjoint(op, node.register, pm, shape)
        c.equal("pre equals the sum of M_m† P_m M_m", pre, total)
    elif rule in ("LoopPartial", "LoopTotal"):
        p, q = pred(_param(step, "P")), pred(_param(step, "Q"))
        m0, m1 = node.ops
        inv = conjugate_adjoint(m0, node.register, p, shape) + conjugate_adjoint(m1, node.register, q, shape)
        c.equal("post equals params.P", post, p)
        c.equal("pre equals M0† P M0 + M1† Q M1", pre, inv)
        c.premise(prem[0], ast.child_path(j.path, 0), q, inv, pred, "body")
        if rule == "LoopTotal" and all(x.ok for x in c.out):
            bound = QuantumPredicate(hermitian_part(conjugate_adjoint(m1, node.register, q, shape)), shape)
            rep = check_ranking(node, bound, cfg)
            ok = rep.verified
            c.out.append(Condition("ranking", f"bound function for M1† Q M1: {rep.verdict} ({rep.reason})",
                                   ok, rep.max_residual))
            c.inconclusive = not ok
    elif rule == "Order":
        pp, qq = pred(_param(step, "P'")), pred(_param(step, "Q'"))
        c.leq("pre ⊑ P'", pre, pp)
        c.leq("Q' ⊑ post", qq, post)
        c.premise(prem[0], j.path, pp, qq, pred, "strengthened")

    bad = [x for x in c.out if not x.ok]
    if not bad:
        return StepResult(step, OK, c.out)
    if c.inconclusive and all(x.kind == "ranking" for x in bad):
        return StepResult(step, INCONCLUSIVE, c.out)
    return StepResult(step, VIOLATION, c.out)


# whole scripts

@dataclass
class Certificate:
    status: str  # certified, violation, inconclusive
    mode: str
    goal: ProofStep
    results: list[StepResult]
    failure: Optional[StepResult] = None

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    def goal_triple(self, unit: TypedUnit, predicates) -> tuple[np.ndarray, ast.Program, np.ndarray]:
        j = self.goal.conclusion
        return predicates(j.pre), ast.subprogram(unit.main, j.path), predicates(j.post)

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "mode": self.mode,
            "goal": {"id": self.goal.id, "pre": self.goal.conclusion.pre,
                     "path": self.goal.conclusion.path, "post": self.goal.conclusion.post},
            "steps": [r.to_json() for r in self.results],
            "failure": None if self.failure is None else {
                "id": self.failure.step.id, "status": self.failure.status, "message": self.failure.message},
        }


def _order(script: ProofScript) -> list[ProofStep]:
    """Premises-first order, ties broken by position in the script."""
    ids = [s.id for s in script.steps]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise ProofScriptError(f"duplicate step id {dup!r}")
    known = set(ids)
    if script.goal not in known:
        raise ProofScriptError(f"goal {script.goal!r} is not a step")
    for s in script.steps:
        for p in s.premises:
            if p not in known:
                raise ProofScriptError(f"step {s.id!r} cites missing premise {p!r}")
    state = {}  # 1 visiting, 2 done
    out: list[ProofStep] = []
    by_id = {s.id: s for s in script.steps}

    def visit(s: ProofStep, trail: list[str]):
        mark = state.get(s.id)
        if mark == 2:
            return
        if mark == 1:
            cyc = trail[trail.index(s.id):] + [s.id]
            raise ProofScriptError("premise cycle: " + " -> ".join(cyc))
        state[s.id] = 1
        for p in s.premises:
            visit(by_id[p], trail + [s.id])
        state[s.id] = 2
        out.append(s)

    for s in script.steps:
        visit(s, [])
    return out


def resolver(script: ProofScript, unit: TypedUnit, predicates: Optional[dict] = None,
             cfg: EvalConfig = DEFAULT_CONFIG):
    """Callable mapping predicate names of ``script`` to global matrices."""
    return _Predicates(script, unit.shape, predicates, cfg)


def check_script(script: ProofScript, unit: TypedUnit, predicates: Optional[dict] = None,
                 cfg: EvalConfig = DEFAULT_CONFIG) -> Certificate:
    """Check every step premises-first and stop at the first failure.

    ``predicates`` may supply or override named predicates (matrices on the
    whole space). Malformed scripts raise :class:`ProofScriptError`.
    """
    order = _order(script)
    pred = resolver(script, unit, predicates, cfg)
    by_id = {s.id: s for s in script.steps}
    results = []
    for st in order:
        ctx = StepContext(unit, script.mode, [by_id[p] for p in st.premises], pred)
        res = check_step(st, ctx, cfg)
        results.append(res)
        if res.status != OK:
            status = "violation" if res.status == VIOLATION else "inconclusive"
            return Certificate(status, script.mode, by_id[script.goal], results, res)
    return Certificate("certified", script.mode, by_id[script.goal], results)


# skeleton generation

class _Skeleton:
    def __init__(self, unit: TypedUnit, cfg: EvalConfig, mode: str):
        self.unit = unit
        self.shape = unit.shape
        self.cfg = cfg
        self.mode = mode
        self.liberal = mode == "partial"
        self.steps: list[ProofStep] = []
        self.preds: dict[str, dict] = {}
        self.flagged: dict[str, str] = {}

    def name(self, mat: np.ndarray) -> str:
        n = f"P{len(self.preds)}"
        self.preds[n] = matrix_to_json(hermitian_part(mat))
        return n

    def add(self, rule, pre, path, post, premises=(), params=None) -> str:
        sid = f"s{len(self.steps)}"
        self.steps.append(ProofStep(sid, rule, Judgment(pre, path, post), tuple(premises), params or {}))
        return sid

    def gen(self, s, path: str, post_name: str, post: np.ndarray) -> tuple[str, str, np.ndarray]:
        """Returns (step id, pre name, pre matrix)."""
        shape = self.shape
        if isinstance(s, ast.Skip):
            return self.add("AxSkip", post_name, path, post_name), post_name, post
        if isinstance(s, ast.Init):
            pre = init_adjoint(post, s.var, shape)
            n = self.name(pre)
            return self.add("AxInit", n, path, post_name), n, pre
        if isinstance(s, ast.Unitary):
            pre = conjugate_adjoint(s.matrix, s.register, post, shape)
            n = self.name(pre)
            return self.add("AxUnitary", n, path, post_name), n, pre
        if isinstance(s, ast.Seq):
            id2, mid_name, mid = self.gen(s.second, ast.child_path(path, 1), post_name, post)
            id1, pre_name, pre = self.gen(s.first, ast.child_path(path, 0), mid_name, mid)
            return self.add("Seq", pre_name, path, post_name, (id1, id2), {"Q": mid_name}), pre_name, pre
        if isinstance(s, ast.Measure):
            ids, names = [], []
            total = np.zeros_like(post)
            for k, ((_, arm), op) in enumerate(zip(s.arms, s.ops)):
                sid, pm_name, pm = self.gen(arm, ast.child_path(path, k), post_name, post)
                ids.append(sid)
                names.append(pm_name)
                total = total + conjugate_adjoint(op, s.register, pm, shape)
            n = self.name(total)
            return self.add("Measure", n, path, post_name, ids, {"P": names}), n, total
        if isinstance(s, ast.While):
            report = FixpointReport()
            inv, converged = loop_fixpoint(s, post, shape, self.cfg, self.liberal, report)
            inv = hermitian_part(inv)
            inv_name = self.name(inv)
            before = set(self.flagged)
            body_id, q_name, _ = self.gen(s.body, ast.child_path(path, 0), inv_name, inv)
            rule = "LoopPartial" if self.liberal else "LoopTotal"
            sid = self.add(rule, inv_name, path, post_name, (body_id,), {"P": post_name, "Q": q_name})
            if not converged or not report.converged:
                self.flagged[sid] = f"loop fixpoint did not converge within max_iter={self.cfg.max_iter}"
            elif set(self.flagged) != before:
                self.flagged[sid] = "an inner loop fixpoint did not converge"
            return sid, inv_name, inv
        raise TypeError(f"not a program node: {s!r}")


def suggest_wlp_annotations(unit: TypedUnit, post: QuantumPredicate | np.ndarray,
                            cfg: EvalConfig = DEFAULT_CONFIG, mode: str = "partial",
                            pre: QuantumPredicate | np.ndarray | None = None) -> ProofScript:
    """Proof skeleton annotating every node with its wlp (partial) or wp (total).

    One step per AST node; when ``pre`` is given an Order step on top
    strengthens the computed precondition to it. Loops whose fixpoint did not
    converge are listed in ``ProofScript.flagged``.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    post_m = post.matrix if isinstance(post, QuantumPredicate) else np.asarray(post, dtype=complex)
    sk = _Skeleton(unit, cfg, mode)
    post_name = "post"
    sk.preds[post_name] = matrix_to_json(post_m)
    goal, w_name, _ = sk.gen(unit.main, "", post_name, post_m)
    if pre is not None:
        pre_m = pre.matrix if isinstance(pre, QuantumPredicate) else np.asarray(pre, dtype=complex)
        sk.preds["pre"] = matrix_to_json(pre_m)
        goal = sk.add("Order", "pre", "", post_name, (goal,), {"P'": w_name, "Q'": post_name})
    return ProofScript(mode, sk.steps, goal, sk.preds, None, sk.flagged)


def predicate_of(script: ProofScript, unit: TypedUnit, name: str, cfg: EvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    return resolver(script, unit, None, cfg)(name)
