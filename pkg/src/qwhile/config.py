from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class EvalConfig:
    """Numeric knobs shared by every evaluator and checker.

    ``tol_psd`` is the eigenvalue tolerance of all Löwner comparisons,
    ``tol_fix`` the max-norm step size at which predicate fixpoints stop,
    ``tol_rank`` the threshold of the ranking semidecision and ``tol_loop`` the
    live-mass threshold at which loop evaluation stops. ``tol_eq`` is used for
    the exact identities demanded by proof axioms.
    """

    tol_psd: float = 1e-9
    tol_fix: float = 1e-10
    tol_rank: float = 1e-8
    tol_loop: float = 1e-9
    max_iter: int = 10000
    dim_cap: int = 4096
    oracle_cap: int = 64
    tol_eq: float = 1e-9
    plateau_window: int = 50

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if f.type in ("float", float) and not value >= 0:
                raise ValueError(f"{f.name} must be a nonnegative float, got {value!r}")
            if f.type in ("int", int) and not (isinstance(value, int) and value > 0):
                raise ValueError(f"{f.name} must be a positive integer, got {value!r}")

    def with_(self, **changes) -> "EvalConfig":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT_CONFIG = EvalConfig()
