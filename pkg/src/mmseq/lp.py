"""Thin linear-programming layer used by the exact solver.

Models are stated in natural row form (senses <=, >=, ==) with explicit
variable bounds.  Solving is delegated to scipy's HiGHS dual simplex,
which returns vertex solutions and row duals; duals are reported as
shadow prices d(objective)/d(rhs) for the problem as posed, so callers
never see the internal sign flips.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import MMSeqError

LE, GE, EQ = "<=", ">=", "=="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    objective: np.ndarray            # coefficient per variable
    a: np.ndarray                    # dense constraint matrix, rows x vars
    senses: tuple[str, ...]          # one of LE / GE / EQ per row
    rhs: np.ndarray
    lower: np.ndarray                # -inf allowed
    upper: np.ndarray                # +inf allowed
    maximize: bool = False

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        n = self.objective.shape[0]
        m = self.rhs.shape[0]
        if self.a.shape != (m, n) and not (m == 0 and self.a.size == 0):
            raise ValueError(f"matrix shape {self.a.shape} != ({m}, {n})")
        if len(self.senses) != m:
            raise ValueError("one sense per row required")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("one bound pair per variable required")
        bad = set(self.senses) - {LE, GE, EQ}
        if bad:
            raise ValueError(f"unknown senses {bad}")


@dataclass(frozen=True)
class LPResult:
    status: str
    x: np.ndarray | None
    duals: np.ndarray | None         # shadow price per original row
    objective: float | None
    slack: np.ndarray | None = None  # per-row distance to the bound


def solve_lp(lp: LinearProgram) -> LPResult:
    """Solve to optimality or report infeasible/unbounded; anything else
    (iteration limit, numerical trouble) raises.

    The slack vector reports, per original row, how far the constraint
    sits from its bound at the optimum (zero for equalities); callers
    use it to spot binding rows without recomputing products.
    """
    sign = -1.0 if lp.maximize else 1.0
    c = sign * lp.objective
    m = len(lp.senses)

    sense_arr = np.array(lp.senses)
    eq_mask = sense_arr == EQ
    ge_mask = sense_arr == GE
    ub_mask = ~eq_mask
    flips = np.where(ge_mask[ub_mask], -1.0, 1.0)

    a_eq = lp.a[eq_mask] if eq_mask.any() else None
    b_eq = lp.rhs[eq_mask] if eq_mask.any() else None
    a_ub = lp.a[ub_mask] * flips[:, None] if ub_mask.any() else None
    b_ub = lp.rhs[ub_mask] * flips if ub_mask.any() else None

    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=np.column_stack((lp.lower, lp.upper)),
        method="highs-ds",
    )
    if res.status == 2:
        return LPResult(INFEASIBLE, None, None, None)
    if res.status == 3:
        return LPResult(UNBOUNDED, None, None, None)
    if res.status != 0:
        raise MMSeqError(f"LP solve failed: {res.message}")

    duals = np.zeros(m)
    slack = np.zeros(m)
    if ub_mask.any():
        duals[ub_mask] = flips * res.ineqlin.marginals
        slack[ub_mask] = res.slack
    if eq_mask.any():
        duals[eq_mask] = res.eqlin.marginals
    if lp.maximize:
        duals = -duals
    return LPResult(OPTIMAL, np.asarray(res.x), duals, sign * float(res.fun),
                    slack)
