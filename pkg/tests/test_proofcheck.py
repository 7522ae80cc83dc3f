import copy
import json

import numpy as np
import pytest

from conftest import CORPUS, load_corpus
from qwhile.config import EvalConfig
from qwhile.errors import ProofScriptError
from qwhile.formats import dump_json, matrix_to_json, predicate_to_json
from qwhile.lang import loads
from qwhile.linalg import embed
from qwhile.predicates import QuantumPredicate, wlp, wp
from qwhile.proofcheck import (
    ProofScript,
    check_script,
    load_script,
    predicate_of,
    suggest_wlp_annotations,
)
from qwhile.randprog import random_predicate, random_unit
from qwhile.verify import Triple, check_partial, check_total

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
S_GATE = np.diag([1, 1j])


def step(sid, rule, pre, path, post, premises=(), **params):
    return {"id": sid, "rule": rule, "pre": pre, "path": path, "post": post,
            "premises": list(premises), "params": params}


def script(mode, steps, goal, preds):
    return ProofScript.from_json({"mode": mode, "steps": steps, "goal": goal, "predicates": preds})


def test_single_skip_step():
    unit = loads("var q : bool; skip")
    p = predicate_to_json(np.diag([0.3, 0.8]))
    cert = check_script(script("partial", [step("a", "AxSkip", "P", "", "P")], "a", {"P": p}), unit)
    assert cert.certified
    bad = script("partial", [step("a", "AxSkip", "P", "", "Q")], "a",
                 {"P": p, "Q": predicate_to_json(np.diag([0.3, 0.7]))})
    cert = check_script(bad, unit)
    assert cert.status == "violation" and "pre equals post" in cert.failure.message


def test_seq_of_two_unitaries(rng):
    unit = loads(f"var q : bool; unitary A = {json.dumps(H.tolist())}; "
                 "unitary B = [[1, 0], [0, 1i]]; [q] *= A; [q] *= B")
    post = random_predicate(rng, 2)
    mid = S_GATE.conj().T @ post @ S_GATE
    pre = H.conj().T @ mid @ H
    preds = {n: matrix_to_json(m) for n, m in [("pre", pre), ("mid", mid), ("post", post)]}
    steps = [step("u", "AxUnitary", "pre", "0", "mid"), step("v", "AxUnitary", "mid", "1", "post"),
             step("seq", "Seq", "pre", "", "post", ["u", "v"], Q="mid")]
    for mode in ("partial", "total"):
        cert = check_script(script(mode, steps, "seq", preds), unit)
        assert cert.certified, cert.failure and cert.failure.message
        assert [r.step.id for r in cert.results] == ["u", "v", "seq"]
    # swapping the premises breaks the intermediate assertion
    swapped = copy.deepcopy(steps)
    swapped[2]["premises"] = ["v", "u"]
    assert check_script(script("total", swapped, "seq", preds), unit).status == "violation"


def test_init_axiom_bool_and_int(rng):
    for kind, d in [("bool", 2), ("int[3]", 3)]:
        unit = loads(f"var q : {kind}; q := 0")
        post = random_predicate(rng, d)
        pre = sum(post[0, 0] * np.outer(np.eye(d)[n], np.eye(d)[n]) for n in range(d))
        preds = {"pre": matrix_to_json(pre), "post": matrix_to_json(post)}
        cert = check_script(script("total", [step("i", "AxInit", "pre", "", "post")], "i", preds), unit)
        assert cert.certified


def test_stuck_loop_partial_certified():
    unit = load_corpus("stuck_loop.qw")
    cert = check_script(load_script(CORPUS / "stuck_loop_partial_proof.json"), unit)
    assert cert.certified and cert.mode == "partial"


def test_stuck_loop_loop_partial_in_total_mode():
    unit = load_corpus("stuck_loop.qw")
    obj = json.loads((CORPUS / "stuck_loop_partial_proof.json").read_text())
    obj["mode"] = "total"
    cert = check_script(ProofScript.from_json(obj, CORPUS), unit)
    assert cert.status == "violation"
    assert cert.failure.step.rule == "LoopPartial"


def test_order_step_catches_wrong_direction():
    unit = loads("var q : bool; skip")
    preds = {"I": predicate_to_json(np.eye(2)), "half": predicate_to_json(np.eye(2) / 2)}
    steps = [step("a", "AxSkip", "half", "", "half"),
             step("o", "Order", "I", "", "half", ["a"], **{"P'": "half", "Q'": "half"})]
    cert = check_script(script("partial", steps, "o", preds), unit)
    assert cert.status == "violation"
    assert "pre ⊑ P'" in cert.failure.message
    # the other way round is fine
    steps[1]["pre"] = "half"
    steps[0]["pre"] = steps[0]["post"] = "I"
    steps[1].update(post="I", params={"P'": "I", "Q'": "I"})
    steps[1]["pre"] = "half"
    assert check_script(script("partial", steps, "o", preds), unit).certified


def test_corrupted_skeleton_is_rejected(rng):
    unit = load_corpus("hadamard_reset.qw")
    sk = suggest_wlp_annotations(unit, QuantumPredicate(0.5 * np.eye(unit.shape.total_dim), unit.shape)).to_json()
    assert check_script(ProofScript.from_json(sk), unit).certified
    victim = next(n for n in sk["predicates"] if n.startswith("P"))
    m = np.array(sk["predicates"][victim]["rows"], dtype=float)[..., 0] * 0.9
    sk["predicates"][victim] = matrix_to_json(m)
    assert check_script(ProofScript.from_json(sk), unit).status == "violation"


def test_loop_total_with_unprovable_bound_is_inconclusive():
    unit = load_corpus("stuck_loop.qw")
    cert = check_script(load_script(CORPUS / "stuck_loop_total_proof.json"), unit)
    assert cert.status == "inconclusive"
    assert cert.failure.step.rule == "LoopTotal"
    assert any(c.kind == "ranking" and not c.ok for c in cert.failure.conditions)


def test_loop_total_certified_for_flip():
    unit = load_corpus("flip_loop.qw")
    post = QuantumPredicate.identity(unit.shape)
    sk = suggest_wlp_annotations(unit, post, mode="total")
    cert = check_script(sk, unit)
    assert cert.certified


@pytest.mark.parametrize("mutate,needle", [
    (lambda o: o["steps"].append(dict(o["steps"][0])), "duplicate"),
    (lambda o: o.pop("goal"), "goal"),
    (lambda o: o.update(goal="nowhere"), "goal"),
    (lambda o: o["steps"][-1]["premises"].append("ghost"), "missing premise"),
    (lambda o: o["steps"][0]["premises"].append(o["steps"][-1]["id"]), "cycle"),
    (lambda o: o["steps"][0].update(pre="nonexistent"), "unknown predicate"),
    (lambda o: o["steps"][0].update(path="9.9"), "path"),
    (lambda o: o["steps"][0].update(rule="Magic"), "unknown rule"),
    (lambda o: o["predicates"].update(post=predicate_to_json(2 * np.eye(4))), "between 0 and I"),
    (lambda o: o["predicates"].update(post=predicate_to_json(np.eye(3))), "shape"),
    (lambda o: o.update(mode="sometimes"), "mode"),
])
def test_malformed_scripts(mutate, needle):
    unit = load_corpus("hadamard_reset.qw")
    obj = json.loads((CORPUS / "hadamard_reset_proof.json").read_text())
    mutate(obj)
    with pytest.raises(ProofScriptError, match=needle):
        check_script(ProofScript.from_json(obj, CORPUS), unit)


def test_certificates_are_deterministic():
    unit = load_corpus("hadamard_reset.qw")
    outs = {dump_json(check_script(load_script(CORPUS / "hadamard_reset_proof.json"), unit).to_json()) for _ in range(3)}
    assert len(outs) == 1


def test_certified_goal_is_semantically_valid(rng):
    for _ in range(30):
        unit = random_unit(rng)
        post = QuantumPredicate(random_predicate(rng, unit.shape.total_dim), unit.shape)
        for mode, check in [("partial", check_partial), ("total", check_total)]:
            sk = suggest_wlp_annotations(unit, post, mode=mode)
            cert = check_script(sk, unit)
            if not cert.certified:
                continue
            pre, prog, q = cert.goal_triple(unit, lambda n: predicate_of(sk, unit, n))
            t = Triple(QuantumPredicate(pre, unit.shape), prog, QuantumPredicate(q, unit.shape))
            assert check(t).accepted


# skeletons

def test_skeleton_identity_post_partial():
    unit = load_corpus("measured_loop.qw")
    sk = suggest_wlp_annotations(unit, QuantumPredicate.identity(unit.shape))
    d = unit.shape.total_dim
    for name in sk.predicates:
        assert np.allclose(predicate_of(sk, unit, name), np.eye(d), atol=1e-9)
    assert check_script(sk, unit).certified


def test_skeleton_skip_only():
    unit = loads("var q : bool; skip")
    sk = suggest_wlp_annotations(unit, np.diag([0.2, 0.4]))
    assert [s.rule for s in sk.steps] == ["AxSkip"]
    assert sk.goal == "s0" and check_script(sk, unit).certified


def test_skeleton_hadamard_reset():
    unit = load_corpus("hadamard_reset.qw")
    sk = load_script(CORPUS / "hadamard_reset_proof.json")
    assert len(sk.steps) == 7
    assert [s.rule for s in sk.steps].count("Seq") == 2
    cert = check_script(sk, unit)
    assert cert.certified
    # the precondition is wp of the postcondition, in both systems (loop-free)
    post = predicate_of(sk, unit, "post")
    pre = predicate_of(sk, unit, sk.step(sk.goal).conclusion.pre)
    qp = QuantumPredicate(post, unit.shape)
    assert np.allclose(pre, wp(unit.main, qp).matrix, atol=1e-12)
    assert np.allclose(pre, wlp(unit.main, qp).matrix, atol=1e-12)


def test_skeleton_flags_unconverged_loops():
    unit = load_corpus("drift_loop.qw")
    cfg = EvalConfig(max_iter=5)
    sk = suggest_wlp_annotations(unit, QuantumPredicate.zero(unit.shape), cfg=cfg)
    assert sk.flagged and sk.goal in sk.flagged
    assert "max_iter=5" in sk.flagged[sk.goal]
    assert "flagged" in sk.to_json()
    converged = suggest_wlp_annotations(unit, QuantumPredicate.identity(unit.shape))
    assert not converged.flagged


def test_register_embedded_predicates(tmp_path):
    unit = load_corpus("stuck_loop.qw")
    proj = np.diag([1.0, 0.0])  # invariant under the loop body Z
    obj = {"mode": "partial", "goal": "a",
           "predicates": {"P": predicate_to_json(proj, ["q"]), "F": "p.json"},
           "steps": [step("a", "AxUnitary", "P", "0", "F")]}
    (tmp_path / "p.json").write_text(dump_json(predicate_to_json(proj, ["q"])))
    sc = ProofScript.from_json(obj, tmp_path)
    assert np.allclose(predicate_of(sc, unit, "P"), embed(proj, ["q"], unit.shape))
    assert check_script(sc, unit).certified
