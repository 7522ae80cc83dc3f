"""Regenerate the derived corpus files (int[32] program, states, predicates, proofs).

Run from anywhere: ``python3 corpus/build_corpus.py``. Output is deterministic.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from qwhile.formats import dump_json, predicate_to_json, state_to_json
from qwhile.lang import load
from qwhile.lang.printer import format_matrix
from qwhile.predicates import QuantumPredicate
from qwhile.proofcheck import suggest_wlp_annotations
from qwhile.semantics import DensityOperator

HERE = Path(__file__).resolve().parent
DIV_DIM = 32


def signed(k: int, d: int) -> int:
    """Integer represented by label ``k`` of ``int[d]``."""
    return k if k <= (d - 1) // 2 else k - d


def divergence_measurement(d: int = DIV_DIM) -> tuple[np.ndarray, np.ndarray]:
    m0 = np.zeros((d, d))
    m1 = np.zeros((d, d))
    for k in range(d):
        n = abs(signed(k, d))
        if n == 0:
            m1[k, k] = 1.0
        else:
            m0[k, k] = np.sqrt((n - 1) / (2 * n))
            m1[k, k] = np.sqrt((n + 1) / (2 * n))
    return m0, m1


def write_divergence_program():
    m0, m1 = divergence_measurement()
    text = "\n".join([
        f"// integer q truncated to int[{DIV_DIM}]: labels are integers mod {DIV_DIM},",
        f"// 0..{(DIV_DIM - 1) // 2} stand for themselves and the rest for negative numbers.",
        f"// generated by build_corpus.py",
        f"var q : int[{DIV_DIM}];",
        "",
        f"measurement M = {{ 0: {format_matrix(m0)}, 1: {format_matrix(m1)} }};",
        "",
        "while M[q] = 1 do { q := q + 1 }",
        "",
    ])
    (HERE / "drift_loop.qw").write_text(text, encoding="utf-8")


def local(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def main():
    write_divergence_program()
    out = {}

    walk = load(HERE / "measured_loop.qw")
    out["measured_loop_state.json"] = state_to_json(
        DensityOperator.basis(walk.shape, {"q1": 1, "q2": 4}).matrix, walk.shape)  # q2 = -1
    n1 = np.diag([0, 1, 1, 0, 0]).astype(complex)
    out["measured_loop_rank.json"] = predicate_to_json(n1, ["q2"])

    reset = load(HERE / "hadamard_reset.qw")
    rho5 = DensityOperator.basis(reset.shape).matrix
    out["hadamard_reset_state.json"] = state_to_json(rho5, reset.shape)
    out["hadamard_reset_post.json"] = predicate_to_json(rho5)
    sk5 = suggest_wlp_annotations(reset, QuantumPredicate(rho5, reset.shape))
    out["hadamard_reset_proof.json"] = sk5.to_json()

    div = load(HERE / "drift_loop.qw")
    out["drift_loop_state.json"] = state_to_json(DensityOperator.basis(div.shape).matrix, div.shape)

    stuck = load(HERE / "stuck_loop.qw")
    psi = np.array([1, 1]) / np.sqrt(2)
    out["stuck_loop_pre.json"] = predicate_to_json(local(psi), ["q"])
    out["stuck_loop_post.json"] = predicate_to_json(local([1, 0]), ["q"])
    out["identity_q.json"] = predicate_to_json(np.eye(2, dtype=complex), ["q"])
    pre6 = QuantumPredicate.on(local(psi), ["q"], stuck.shape)
    post6 = QuantumPredicate.on(local([1, 0]), ["q"], stuck.shape)
    out["stuck_loop_partial_proof.json"] = suggest_wlp_annotations(stuck, post6, pre=pre6).to_json()
    # LoopTotal with invariant I: the bound-function premise cannot be certified
    # because the mass on |1> never leaves the loop
    out["stuck_loop_total_proof.json"] = {
        "mode": "total",
        "predicates": {"post": "stuck_loop_post.json", "I": "identity_q.json"},
        "steps": [
            {"id": "body", "rule": "AxUnitary", "pre": "I", "path": "0", "post": "I",
             "premises": [], "params": {}},
            {"id": "loop", "rule": "LoopTotal", "pre": "I", "path": "", "post": "post",
             "premises": ["body"], "params": {"P": "post", "Q": "I"}},
        ],
        "goal": "loop",
    }

    # the partial skeleton for post I, restated under the total rules
    sk4 = suggest_wlp_annotations(walk, QuantumPredicate.identity(walk.shape)).to_json()
    sk4["mode"] = "total"
    for st in sk4["steps"]:
        if st["rule"] == "LoopPartial":
            st["rule"] = "LoopTotal"
    out["measured_loop_total_proof.json"] = sk4

    out["flip_rank.json"] = predicate_to_json(local([0, 1]), ["q"])
    out["flip_state.json"] = state_to_json(local([0, 1]), load(HERE / "flip_loop.qw").shape)
    out["trivial_rank.json"] = predicate_to_json(np.zeros((2, 2), dtype=complex), ["q"])

    for name, obj in sorted(out.items()):
        dump_json(obj, HERE / name)


if __name__ == "__main__":
    main()
