"""Dense two-phase simplex for ``max c.x  s.t.  A x = b, x >= 0``.

Problems here are small (a few hundred columns at most), so a full tableau
with numpy row operations is fast enough and gives exact basic solutions.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

PIVOT_TOL = 1e-10
TIE_TOL = 1e-12
FEASIBILITY_TOL = 1e-9
# consecutive degenerate pivots before falling back to Bland's rule
DEGENERATE_STREAK = 30


class LpError(RuntimeError):
    """The solver could not reach a verdict (iteration cap or numerical trouble)."""


class LpStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    objective: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).ravel()
        a = np.asarray(self.a_eq, dtype=float)
        b = np.asarray(self.b_eq, dtype=float).ravel()
        if a.ndim != 2:
            raise ValueError("a_eq must be a matrix")
        if a.shape != (b.size, c.size):
            raise ValueError(f"inconsistent dimensions: A {a.shape}, b {b.size}, c {c.size}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("linear program has non-finite entries")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "a_eq", a)
        object.__setattr__(self, "b_eq", b)

    @classmethod
    def feasibility(cls, a_eq, b_eq) -> "LinearProgram":
        a = np.asarray(a_eq, dtype=float)
        return cls(np.zeros(a.shape[1]), a, b_eq)


@dataclass(frozen=True, eq=False)
class LpResult:
    status: LpStatus
    x: np.ndarray | None = field(default=None, repr=False)
    objective_value: float | None = None
    phase1_value: float = 0.0
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int], max_pivots: int):
        self.T = T
        self.basis = basis
        self.pivots = 0
        self.max_pivots = max_pivots

    def pivot(self, row: int, col: int):
        T = self.T
        prow = T[row] / T[row, col]
        T -= np.outer(T[:, col], prow)
        T[row] = prow
        self.basis[row] = col
        self.pivots += 1
        if self.pivots > self.max_pivots:
            raise LpError(f"simplex exceeded {self.max_pivots} pivots")

    def _entering(self, ncols: int, bland: bool) -> int:
        costs = self.T[-1, :ncols]
        candidates = np.flatnonzero(costs < -PIVOT_TOL)
        if candidates.size == 0:
            return -1
        if bland:
            return int(candidates[0])
        best = costs[candidates].min()
        return int(candidates[costs[candidates] <= best + TIE_TOL][0])

    def _leaving(self, col: int) -> tuple[int, float]:
        T = self.T
        column = T[:-1, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return -1, 0.0
        ratios = np.maximum(T[rows, -1], 0.0) / column[rows]
        best = ratios.min()
        tied = rows[ratios <= best + TIE_TOL]
        # smallest basic variable index among ties
        row = int(min(tied, key=lambda r: self.basis[r]))
        return row, float(best)

    def run(self, ncols: int) -> bool:
        """Minimize over the first ``ncols`` columns. False means unbounded."""
        streak = 0
        while True:
            col = self._entering(ncols, bland=streak >= DEGENERATE_STREAK)
            if col < 0:
                return True
            row, step = self._leaving(col)
            if row < 0:
                return False
            streak = streak + 1 if step <= TIE_TOL else 0
            self.pivot(row, col)


def solve(lp: LinearProgram, max_pivots: int | None = None) -> LpResult:
    """Two-phase simplex. Infeasible iff the phase-one optimum exceeds 1e-9."""
    a = lp.a_eq.copy()
    b = lp.b_eq.copy()
    m, n = a.shape
    neg = b < 0
    a[neg] *= -1.0
    b[neg] *= -1.0
    if max_pivots is None:
        max_pivots = 50 * (m + n) + 1000

    # phase one: artificial identity basis, minimize the sum of artificials
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = a
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -a.sum(axis=0)
    T[-1, -1] = -b.sum()
    tab = _Tableau(T, list(range(n, n + m)), max_pivots)
    tab.run(n + m)
    phase1 = float(-tab.T[-1, -1])
    if phase1 > FEASIBILITY_TOL:
        return LpResult(LpStatus.INFEASIBLE, phase1_value=phase1, pivots=tab.pivots)

    # push remaining artificials out of the basis, dropping redundant rows
    keep = []
    for i in range(m):
        if tab.basis[i] < n:
            keep.append(i)
            continue
        row = tab.T[i, :n]
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > PIVOT_TOL:
            tab.pivot(i, j)
            keep.append(i)
    T2 = np.vstack([tab.T[keep][:, list(range(n)) + [n + m]], np.zeros((1, n + 1))])
    basis = [tab.basis[i] for i in keep]
    T2[-1, :n] = -lp.objective
    for i, j in enumerate(basis):
        if T2[-1, j] != 0.0:
            T2[-1] -= T2[-1, j] * T2[i]
    tab2 = _Tableau(T2, basis, max_pivots)
    tab2.pivots = tab.pivots
    bounded = tab2.run(n)
    if not bounded:
        return LpResult(LpStatus.UNBOUNDED, phase1_value=phase1, pivots=tab2.pivots)

    x = np.zeros(n)
    for i, j in enumerate(tab2.basis):
        x[j] = tab2.T[i, -1]
    residual = float(np.max(np.abs(lp.a_eq @ x - lp.b_eq), initial=0.0))
    if residual > FEASIBILITY_TOL or x.min(initial=0.0) < -1e-12:
        raise LpError(f"optimal basis fails re-verification (residual {residual:.2e}, min x {x.min():.2e})")
    return LpResult(LpStatus.OPTIMAL, x, float(lp.objective @ x), phase1, tab2.pivots)


def max_violation(p, bell_coeffs) -> float:
    """Inner product of a Bell expression with a probability tensor."""
    arr = np.asarray(getattr(p, "p", p), dtype=float)
    coeffs = np.asarray(bell_coeffs, dtype=float)
    if arr.shape != coeffs.shape:
        raise ValueError(f"coefficient shape {coeffs.shape} does not match {arr.shape}")
    return float(np.sum(arr * coeffs))


def chsh_coefficients(flip_x: int = 0, flip_z: int = 0, flip_sign: int = 0) -> np.ndarray:
    """CHSH expression sum_xz (-1)^(xz + flip_x*x + flip_z*z + flip_sign) <A_x C_z>.

    Returned with shape ``[x][z][a][c]`` to act on a conditional table.
    """
    coeffs = np.empty((2, 2, 2, 2))
    for x in range(2):
        for z in range(2):
            sign = (-1) ** ((x * z + flip_x * x + flip_z * z + flip_sign) % 2)
            for a in range(2):
                for c in range(2):
                    coeffs[x, z, a, c] = sign * (-1) ** (a ^ c)
    return coeffs
