"""Dense two-phase simplex for small linear programs.

Problems are stated in the form::

    maximize    c @ z
    subject to  A_eq @ z == b_eq
                A_ge @ z >= b_ge
                z >= 0

The default backend is a two-phase revised simplex that returns basic
(vertex) solutions.  It refactorises the basis at every pivot and falls back
to Bland's rule on long degenerate stretches, which the occupancy-measure
programs in this package produce in abundance.  A ``"highs"`` backend delegates to SciPy's HiGHS
interface for the few programs that are too large for a dense tableau.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from mpp.errors import NumericalFailure

PIVOT_TOL = 1e-9
HARRIS_TOL = 1e-9
FEASIBILITY_TOL = 1e-9
RESIDUAL_TOL = 1e-7


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """A maximisation LP over non-negative variables.

    Attributes
    ----------
    objective : ndarray, shape (n,)
    a_eq, b_eq : equality block (may be empty)
    a_ge, b_ge : ``>=`` inequality block (may be empty)
    labels : dict
        Free-form metadata, e.g. row counts per constraint family.
    """

    objective: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ge: np.ndarray | None = None
    b_ge: np.ndarray | None = None
    labels: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        n = c.size
        blocks = {}
        for name in ("eq", "ge"):
            a = getattr(self, f"a_{name}")
            b = getattr(self, f"b_{name}")
            if a is None:
                a = np.zeros((0, n))
                b = np.zeros(0)
            a = np.asarray(a, dtype=float).reshape(-1, n) if np.size(a) else np.zeros((0, n))
            b = np.asarray(b, dtype=float).reshape(-1)
            if a.shape[0] != b.size:
                raise ValueError(f"{name} block has {a.shape[0]} rows but {b.size} right-hand sides")
            blocks[name] = (a, b)
        for arr in (c, *blocks["eq"], *blocks["ge"]):
            if not np.all(np.isfinite(arr)):
                raise ValueError("linear program coefficients must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "a_eq", blocks["eq"][0])
        object.__setattr__(self, "b_eq", blocks["eq"][1])
        object.__setattr__(self, "a_ge", blocks["ge"][0])
        object.__setattr__(self, "b_ge", blocks["ge"][1])

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @property
    def n_eq(self) -> int:
        return self.a_eq.shape[0]

    @property
    def n_ge(self) -> int:
        return self.a_ge.shape[0]

    def max_violation(self, z: np.ndarray) -> float:
        """Largest constraint violation of ``z`` (including sign constraints)."""
        parts = [0.0, float(np.clip(-z, 0, None).max(initial=0.0))]
        if self.n_eq:
            parts.append(float(np.abs(self.a_eq @ z - self.b_eq).max()))
        if self.n_ge:
            parts.append(float(np.clip(self.b_ge - self.a_ge @ z, 0, None).max()))
        return max(parts)


@dataclass(frozen=True)
class LpSolution:
    status: Status
    x: np.ndarray | None
    value: float | None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _RevisedSimplex:
    """Revised simplex on ``min cost @ z`` s.t. ``a @ z == b``, ``z >= 0``.

    The basis matrix is refactorised from scratch at every iteration, so basic
    values never accumulate round-off.  Pricing uses Dantzig's rule; after
    ``STALL_LIMIT`` consecutive degenerate pivots it switches to Bland's rule,
    which cannot cycle, until the objective moves again.
    """

    STALL_LIMIT = 200

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: np.ndarray):
        self.a = a
        self.b = b
        self.basis = basis.copy()
        self.pivots = 0

    def _factor(self):
        from scipy.linalg import lu_factor

        return lu_factor(self.a[:, self.basis], check_finite=False)

    def values(self, lu=None) -> np.ndarray:
        from scipy.linalg import lu_solve

        lu = self._factor() if lu is None else lu
        return lu_solve(lu, self.b, check_finite=False)

    def row(self, r: int, lu=None) -> np.ndarray:
        """Row ``r`` of ``B^-1 A``."""
        from scipy.linalg import lu_solve

        lu = self._factor() if lu is None else lu
        e = np.zeros(len(self.basis))
        e[r] = 1.0
        return lu_solve(lu, e, trans=1, check_finite=False) @ self.a

    def run(self, cost: np.ndarray, allowed: np.ndarray, max_pivots: int) -> bool:
        """Optimise from the current feasible basis; ``False`` if unbounded."""
        from scipy.linalg import lu_solve

        stalled = 0
        for _ in range(max_pivots):
            lu = self._factor()
            x_b = np.clip(lu_solve(lu, self.b, check_finite=False), 0.0, None)
            dual = lu_solve(lu, cost[self.basis], trans=1, check_finite=False)
            reduced = cost - dual @ self.a
            reduced[self.basis] = 0.0
            candidates = np.flatnonzero((reduced < -PIVOT_TOL) & allowed)
            if candidates.size == 0:
                return True
            if stalled >= self.STALL_LIMIT:
                col = int(candidates[0])
            else:
                col = int(candidates[np.argmin(reduced[candidates])])
            direction = lu_solve(lu, self.a[:, col], check_finite=False)
            threshold = PIVOT_TOL * max(1.0, float(np.abs(direction).max()))
            positive = direction > threshold
            if not np.any(positive):
                return False
            # Harris two-pass ratio test: relax the bounds slightly, then take
            # the largest pivot among rows whose exact ratio fits the relaxed step
            relaxed = ((x_b[positive] + HARRIS_TOL) / direction[positive]).min()
            ratios = np.full(direction.shape, np.inf)
            ratios[positive] = x_b[positive] / direction[positive]
            ties = np.flatnonzero(ratios <= relaxed)
            best = float(ratios[ties].min())
            if stalled >= self.STALL_LIMIT:
                exact = ties[ratios[ties] <= best + 1e-12 * max(1.0, best)]
                row = int(exact[np.argmin(self.basis[exact])])
            else:
                row = int(ties[np.argmax(direction[ties])])
            stalled = stalled + 1 if best <= 1e-12 else 0
            self.basis[row] = col
            self.pivots += 1
        raise NumericalFailure(f"simplex exceeded {max_pivots} pivots")


def _solve_simplex(lp: LinearProgram) -> LpSolution:
    n = lp.n_vars
    n_ge = lp.n_ge
    # standard form: [A_eq 0; A_ge -I] [z; s] = b, with slack s >= 0
    a = np.zeros((lp.n_eq + n_ge, n + n_ge))
    a[: lp.n_eq, :n] = lp.a_eq
    a[lp.n_eq :, :n] = lp.a_ge
    a[lp.n_eq :, n:] = -np.eye(n_ge)
    b = np.concatenate([lp.b_eq, lp.b_ge])
    neg = b < 0
    a[neg] *= -1
    b = np.where(neg, -b, b)
    rows, cols = a.shape
    if rows == 0:
        if np.any(lp.objective > 0):
            return LpSolution(Status.UNBOUNDED, None, None)
        return LpSolution(Status.OPTIMAL, np.zeros(n), 0.0)

    # Phase 1: minimise the sum of artificial variables
    full = np.hstack([a, np.eye(rows)])
    solver = _RevisedSimplex(full, b, np.arange(cols, cols + rows))
    cost = np.zeros(cols + rows)
    cost[cols:] = 1.0
    max_pivots = 50 * (rows + cols) + 1000
    solver.run(cost, np.ones(cols + rows, dtype=bool), max_pivots)
    phase1 = float(solver.values()[solver.basis >= cols].sum())
    if phase1 > FEASIBILITY_TOL * max(1.0, float(b.sum())):
        return LpSolution(Status.INFEASIBLE, None, None, solver.pivots)

    # Drive artificial variables out of the basis.  If basis position r holds
    # the artificial of constraint q and row r of B^-1 A vanishes on the
    # original columns, constraint q is a combination of the others: drop it.
    keep_rows = np.ones(rows, dtype=bool)
    keep_pos = np.ones(rows, dtype=bool)
    for r in range(rows):
        if solver.basis[r] < cols:
            continue
        entries = np.abs(solver.row(r)[:cols])
        j = np.flatnonzero(entries > PIVOT_TOL)
        if j.size:
            solver.basis[r] = int(j[np.argmax(entries[j])])
        else:
            keep_rows[solver.basis[r] - cols] = False
            keep_pos[r] = False
    solver = _RevisedSimplex(a[keep_rows], b[keep_rows], solver.basis[keep_pos])
    solver.pivots = 0

    # Phase 2: minimise -c
    cost2 = np.zeros(cols)
    cost2[:n] = -lp.objective
    bounded = solver.run(cost2, np.ones(cols, dtype=bool), max_pivots)
    if not bounded:
        return LpSolution(Status.UNBOUNDED, None, None, solver.pivots)
    sol = np.zeros(cols)
    sol[solver.basis] = solver.values()
    z = sol[:n]
    z = np.where(np.abs(z) < 1e-13, 0.0, z)
    z = np.clip(z, 0.0, None)
    residual = lp.max_violation(z)
    if residual > RESIDUAL_TOL:
        raise NumericalFailure(f"simplex point violates constraints by {residual:.3g}")
    return LpSolution(Status.OPTIMAL, z, float(lp.objective @ z), solver.pivots)


def _solve_highs(lp: LinearProgram) -> LpSolution:
    from scipy.optimize import linprog

    res = linprog(
        -lp.objective,
        A_ub=-lp.a_ge if lp.n_ge else None,
        b_ub=-lp.b_ge if lp.n_ge else None,
        A_eq=lp.a_eq if lp.n_eq else None,
        b_eq=lp.b_eq if lp.n_eq else None,
        bounds=(0, None),
        method="highs",
    )
    if res.status == 2:
        return LpSolution(Status.INFEASIBLE, None, None)
    if res.status == 3:
        return LpSolution(Status.UNBOUNDED, None, None)
    if res.status != 0:
        raise NumericalFailure(f"HiGHS failed: {res.message}")
    z = np.clip(res.x, 0.0, None)
    residual = lp.max_violation(z)
    if residual > RESIDUAL_TOL:
        raise NumericalFailure(f"HiGHS point violates constraints by {residual:.3g}")
    return LpSolution(Status.OPTIMAL, z, float(lp.objective @ z), int(res.nit))


def solve(lp: LinearProgram, backend: str = "simplex") -> LpSolution:
    """Solve ``lp`` and classify the outcome.

    Parameters
    ----------
    lp : LinearProgram
    backend : {"simplex", "highs"}
        ``"simplex"`` is the deterministic two-phase revised simplex;
        ``"highs"`` uses SciPy's HiGHS bindings.

    Raises
    ------
    NumericalFailure
        If a point reported feasible violates a constraint by more than 1e-7.
    """
    if backend == "simplex":
        return _solve_simplex(lp)
    if backend == "highs":
        return _solve_highs(lp)
    raise ValueError(f"unknown LP backend {backend!r}")
