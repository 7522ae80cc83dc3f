"""Semantic checking of correctness formulas ``{P} S {Q}``.

A triple is decided by comparing its precondition with the weakest
(liberal) precondition in the Löwner order. When a loop fixpoint did not
converge only the sound half of the answer is reported: a wp below the true
one can still certify total correctness, a wlp above the true one can still
refute partial correctness; otherwise the verdict is ``inconclusive``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from qwhile.config import DEFAULT_CONFIG, EvalConfig
from qwhile.errors import DimensionError
from qwhile.formats import state_to_json
from qwhile.lang import ast
from qwhile.linalg import loewner_gap, projector
from qwhile.predicates import FixpointReport, QuantumPredicate, transform_matrix, wlp, wp
from qwhile.semantics import DensityOperator

ACCEPT = "accept"
REJECT = "reject"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class Triple:
    pre: QuantumPredicate
    prog: ast.Program
    post: QuantumPredicate

    def __post_init__(self):
        if self.pre.shape != self.post.shape:
            raise DimensionError("pre- and postcondition live on different spaces")

    @property
    def shape(self):
        return self.pre.shape


@dataclass(eq=False)
class Verdict:
    verdict: str
    margin: float
    mode: str
    witness: Optional[DensityOperator] = None
    report: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.verdict == ACCEPT

    def to_json(self) -> dict:
        witness = None
        if self.witness is not None:
            witness = state_to_json(self.witness.matrix, self.witness.shape)
        return {
            "verdict": self.verdict,
            "margin": self.margin,
            "witness": witness,
            "report": dict(self.report, mode=self.mode),
        }


def _decide(t: Triple, weakest: QuantumPredicate, mode: str, cfg: EvalConfig) -> Verdict:
    # margin: least eigenvalue of (weakest - pre); negative means violation
    gap, vec = loewner_gap(t.pre.matrix, weakest.matrix)
    report = {"transformer": weakest.report.to_json() if weakest.report else None,
              "min_eigenvalue": gap}
    converged = weakest.report is None or weakest.report.converged
    holds = gap >= -cfg.tol_psd
    if holds:
        # an unconverged wp is below the true wp, so acceptance stays sound
        if converged or mode == "total":
            return Verdict(ACCEPT, gap, mode, None, report)
        return Verdict(INCONCLUSIVE, gap, mode, None, report)
    if converged or mode == "partial":
        witness = DensityOperator(projector(vec), t.shape)
        return Verdict(REJECT, -gap, mode, witness, report)
    return Verdict(INCONCLUSIVE, -gap, mode, None, report)


def check_total(t: Triple, cfg: EvalConfig = DEFAULT_CONFIG) -> Verdict:
    """Decide ``⊨_tot {P} S {Q}`` as ``P ⊑ wp(S, Q)``.

    On rejection the witness is the projector onto the most negative
    eigenvector of ``wp(S, Q) - P``; the triple's inequality fails on it by
    ``margin``.
    """
    return _decide(t, wp(t.prog, t.post, cfg), "total", cfg)


def check_partial(t: Triple, cfg: EvalConfig = DEFAULT_CONFIG) -> Verdict:
    """Decide ``⊨_par {P} S {Q}`` as ``P ⊑ wlp(S, Q)``."""
    return _decide(t, wlp(t.prog, t.post, cfg), "partial", cfg)


def total_gap(t: Triple, rho: np.ndarray, denotation: np.ndarray) -> float:
    """``tr(Qρ') - tr(Pρ)``: nonnegative when the total inequality holds at ρ."""
    return float(np.trace(t.post.matrix @ denotation).real - np.trace(t.pre.matrix @ rho).real)


def partial_gap(t: Triple, rho: np.ndarray, denotation: np.ndarray) -> float:
    lost = float(np.trace(rho).real - np.trace(denotation).real)
    return total_gap(t, rho, denotation) + lost


# ranking semidecision

VERIFIED = "verified-to-tolerance"


@dataclass(eq=False)
class RankingReport:
    loop: ast.While
    predicate: QuantumPredicate
    verdict: str
    steps: Optional[int]  # N with tr(Q·T^N(ρ)) < tol_rank for all ρ, if verified
    iterations: int       # terms of the sequence examined before the verdict
    max_residual: float   # max over spanning states of tr(Q·T^N(σ)) at the last examined N
    reason: str
    fixpoint: FixpointReport = field(default_factory=FixpointReport)

    @property
    def verified(self) -> bool:
        return self.verdict == VERIFIED

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "steps": self.steps,
            "iterations": self.iterations,
            "max_residual": self.max_residual,
            "reason": self.reason,
            "inner_fixpoints_converged": self.fixpoint.converged,
        }


def _spanning_values(x: np.ndarray) -> np.ndarray:
    """``tr(X σ)`` for every ``σ`` of the Hermitian spanning family."""
    diag = np.real(np.diag(x))
    iu = np.triu_indices(x.shape[0], 1)
    avg = (diag[iu[0]] + diag[iu[1]]) / 2
    off = x[iu]
    return np.concatenate([diag, avg + off.real, avg - off.imag])


def _one_iteration_dual(loop: ast.While, x: np.ndarray, shape, cfg: EvalConfig,
                        report: FixpointReport) -> np.ndarray:
    """Adjoint of ``[|S|] ∘ E1``: ``X ↦ M1† wp(S, X) M1``."""
    from qwhile.linalg import conjugate_adjoint

    _, m1 = loop.ops
    body_pre = transform_matrix(loop.body, x, shape, cfg, liberal=False, report=report)
    return conjugate_adjoint(m1, loop.register, body_pre, shape)


def check_ranking(loop: ast.While, q: QuantumPredicate, cfg: EvalConfig = DEFAULT_CONFIG) -> RankingReport:
    """Semidecide ``lim_n tr(Q·([|S|]∘E1)^n(ρ)) = 0`` for every state ρ.

    By linearity it suffices to follow the spanning family. The values are
    obtained through the dual iterate ``X_n = (([|S|]∘E1)†)^n(Q)`` since
    ``tr(Q·T^n(σ)) = tr(X_n σ)``. Index ``N`` counts as reached once
    ``tr(X_N) < tol_rank``, which bounds ``tr(Q·T^N(ρ))`` for every density
    operator ρ. It is confirmed either by the live-mass bound
    ``‖Q‖·tr(T†^N(I)) < tol_rank``, which covers all later indices because
    ``T†^n(I)`` decreases, or by the values staying below tolerance for
    ``cfg.plateau_window`` further iterations. The answer is never "refuted".
    """
    shape = q.shape
    fp = FixpointReport()
    qnorm = float(np.max(np.abs(np.linalg.eigvalsh(q.matrix)), initial=0.0))
    x = q.matrix.copy()
    live = np.eye(shape.total_dim, dtype=complex)
    candidate = None
    n = 0
    values = _spanning_values(x)
    while True:
        values = _spanning_values(x)
        below = float(np.trace(x).real) < cfg.tol_rank
        if below:
            if candidate is None:
                candidate = n
            live_bound = qnorm * float(np.trace(live).real)
            if live_bound < cfg.tol_rank:
                return RankingReport(loop, q, VERIFIED, candidate, candidate + 1,
                                     float(values.max(initial=0.0)), "live mass bound", fp)
            if n - candidate >= cfg.plateau_window:
                return RankingReport(loop, q, VERIFIED, candidate, candidate + 1,
                                     float(values.max(initial=0.0)), "stayed below tolerance", fp)
        else:
            candidate = None
        if n >= cfg.max_iter:
            return RankingReport(loop, q, INCONCLUSIVE, None, n + 1, float(values.max(initial=0.0)),
                                 "iteration cap reached", fp)
        nxt = _one_iteration_dual(loop, x, shape, cfg, fp)
        if not below and np.max(np.abs(nxt - x), initial=0.0) < cfg.tol_fix * 1e-3:
            # the Q-mass has a nonzero fixed point: the limit cannot vanish
            return RankingReport(loop, q, INCONCLUSIVE, None, n + 2, float(values.max(initial=0.0)),
                                 "stationary nonzero mass", fp)
        live = _one_iteration_dual(loop, live, shape, cfg, fp)
        x = nxt
        n += 1
