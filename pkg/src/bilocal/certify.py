"""Certifying locality and bilocality of tripartite correlations.

Non-bilocality is only ever certified by the quadratic inequality
``I <= 1 + E**2``. The decomposition search can prove bilocality but a
failed search is reported as unknown.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import lp
from .quantum import DIAG_MINUS, DIAG_PLUS, SZ, TwoQubitState, born_correlations, separable_mix, singlet
from .scenario import (
    DEFAULT_SCENARIO,
    NOSIGNAL_TOL,
    Correlation,
    RelabelOp,
    SignalingError,
    conditional_ac,
    mix,
    relabel_array,
    white_noise,
)
from .strategies import (
    N_TRIPLES,
    SYNTHESIS_MATRIX,
    WeightVector,
    is_bilocal_weights,
    pc_weights,
    pcbar_weights,
    product_weights,
    synthesize_array,
)

INEQUALITY_TOL = 1e-9
LOCAL_TOL = 1e-9
SEARCH_TARGET = 1e-7

# per Bell state (flip_x, flip_z, flip_sign) of the CHSH expression that the
# swapped pair violates maximally; derived from the Born rule with the
# CHSH-optimal settings
BELL_STATE_CHSH = {0: (0, 0, 0), 1: (1, 0, 0), 2: (0, 0, 1), 3: (1, 0, 1)}

_B0 = np.array([0, 0, 1, 1])
_B1 = np.array([0, 1, 0, 1])
# (-1)^(a + c + b0) over axes (a, b, c)
_E_SIGNS = (-1.0) ** ((np.arange(2)[:, None, None] + np.arange(2)[None, None, :] + _B0[None, :, None]) % 2)
_XZ = np.add.outer(np.arange(2), np.arange(2)) % 2
_MATCHED = _XZ[None, :, :] == _B1[:, None, None]  # (b, x, z): x ^ z == b1


# -- I and E -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IEValues:
    I: float
    E: float
    e_table: np.ndarray = field(repr=False)  # E_b(xz), shape (b, x, z)
    prob_b: np.ndarray = field(repr=False)


def _ie_from_array(arr: np.ndarray, tol: float = NOSIGNAL_TOL) -> IEValues:
    pb_xz = arr.sum(axis=(2, 4))  # (x, z, b)
    if np.max(np.ptp(pb_xz.reshape(-1, 4), axis=0)) > tol:
        raise SignalingError("Bob's marginal depends on (x, z); I and E are undefined")
    prob_b = pb_xz.mean(axis=(0, 1))
    # P(b) E_b(xz) is linear in the tensor
    atoms = np.einsum("abc,xzabc->bxz", _E_SIGNS, arr)
    I = float(atoms[_MATCHED].sum())
    E = float(4.0 * np.abs(atoms[~_MATCHED]).max())
    with np.errstate(invalid="ignore", divide="ignore"):
        e_table = np.where(prob_b[:, None, None] > 0, atoms / prob_b[:, None, None], 0.0)
    return IEValues(I, E, e_table, prob_b)


def compute_IE(p: Correlation) -> IEValues:
    """I = sum_b P(b) sum_{x^z=b1} E_b(xz), E = max_b max_{x^z!=b1} 4|P(b)E_b(xz)|."""
    return _ie_from_array(p.p)


def check_biloc_inequality(p: Correlation) -> tuple[bool, float]:
    """Return (satisfied, slack) with slack = 1 + E^2 - I."""
    ie = compute_IE(p)
    slack = 1.0 + ie.E ** 2 - ie.I
    return slack >= -INEQUALITY_TOL, slack


def conditional_chsh(p: Correlation) -> dict[int, float]:
    """CHSH value of each conditional P_b(ac|xz), relabeled per Bell state."""
    out = {}
    for b, flips in BELL_STATE_CHSH.items():
        cond = conditional_ac(p, b)
        out[b] = lp.max_violation(cond.table, lp.chsh_coefficients(*flips))
    return out


# -- locality ----------------------------------------------------------------

def _independent_rows(A: np.ndarray) -> np.ndarray:
    rows: list[int] = []
    for i in range(A.shape[0]):
        if np.linalg.matrix_rank(A[rows + [i]], tol=1e-9) > len(rows):
            rows.append(i)
    return np.array(rows)


_LOCAL_A = np.vstack([SYNTHESIS_MATRIX, np.ones((1, N_TRIPLES))])
_LOCAL_ROWS = _independent_rows(_LOCAL_A)


@dataclass(frozen=True, eq=False)
class LocalVerdict:
    status: str  # "Local", "NonLocal" or "Unknown"
    certificate: WeightVector | None = None
    diagnostics: str = ""

    @property
    def local(self) -> bool:
        return self.status == "Local"


def _local_lp_array(arr: np.ndarray) -> LocalVerdict:
    target = np.append(np.asarray(arr, dtype=float).ravel(), 1.0)
    # Redundant rows are dropped up front; they only matter when the target
    # lies outside the span of deterministic points, which the residual check
    # below catches.
    try:
        res = lp.solve(lp.LinearProgram.feasibility(_LOCAL_A[_LOCAL_ROWS], target[_LOCAL_ROWS]))
    except lp.LpError as exc:
        return LocalVerdict("Unknown", diagnostics=str(exc))
    if not res.optimal:
        return LocalVerdict("NonLocal", diagnostics=f"phase-one residual {res.phase1_value:.3e}")
    q = np.clip(res.x, 0.0, None)
    q /= q.sum()
    err = float(np.max(np.abs(synthesize_array(q) - np.asarray(arr).reshape(DEFAULT_SCENARIO.shape))))
    if err > LOCAL_TOL:
        return LocalVerdict("NonLocal", diagnostics=f"target outside the deterministic span ({err:.3e})")
    return LocalVerdict("Local", WeightVector(q))


def is_local(p: Correlation) -> LocalVerdict:
    """Decide membership in the local polytope by linear programming."""
    if p.scenario != DEFAULT_SCENARIO:
        raise ValueError("locality test is implemented for the default scenario")
    return _local_lp_array(p.p)


# -- bilocal decomposition search --------------------------------------------

@dataclass(frozen=True, eq=False)
class BilocalSearch:
    status: str  # "ProvenBilocal" or "Unknown"
    certificate: WeightVector | None
    l1_error: float
    restarts: int
    iterations: int


def _l1_fit(design: np.ndarray, target: np.ndarray, eq: np.ndarray, rhs: np.ndarray) -> np.ndarray | None:
    """min ||design @ y - target||_1 over y >= 0 with ``eq @ y = rhs``."""
    m, k = design.shape
    n = k + 2 * m
    A = np.zeros((m + len(eq), n))
    A[:m, :k] = design
    A[:m, k:k + m] = np.eye(m)
    A[:m, k + m:] = -np.eye(m)
    A[m:, :k] = eq
    b = np.concatenate([target, rhs])
    c = np.concatenate([np.zeros(k), -np.ones(2 * m)])
    try:
        res = lp.solve(lp.LinearProgram(c, A, b))
    except lp.LpError:
        return None
    if not res.optimal:
        return None
    return np.clip(res.x[:k], 0.0, None)


_M6 = SYNTHESIS_MATRIX.reshape(-1, 4, 4, 4)  # (row, alpha, beta, gamma)


def _joint_constraints() -> tuple[np.ndarray, np.ndarray]:
    # y[s, o, b] = q_s(s) q(b | s, o): sum over b equal for every o, total mass 1
    rows = []
    for s in range(4):
        for o in range(1, 4):
            r = np.zeros((4, 4, 4))
            r[s, o, :] = 1.0
            r[s, 0, :] -= 1.0
            rows.append(r.ravel())
    total = np.zeros((4, 4, 4))
    total[:, 0, :] = 1.0
    rows.append(total.ravel())
    rhs = np.zeros(len(rows))
    rhs[-1] = 1.0
    return np.array(rows), rhs


_JOINT_EQ, _JOINT_RHS = _joint_constraints()


def _split(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Recover (q_s, q(b | s, o)) from the joint variables y[s, o, b]."""
    y = y.reshape(4, 4, 4)
    mass = y.sum(axis=2)
    qs = mass.mean(axis=1)
    qs = qs / qs.sum()
    cond = np.full((4, 4, 4), 0.25)
    ok = mass > 1e-300
    cond[ok] = y[ok] / mass[ok][:, None]
    return qs, cond


def _fit_alpha_beta(qg, target):
    """Given q_gamma, the correlation is linear in q_alpha(a) q(b | a, g)."""
    design = np.einsum("g,rabg->ragb", qg, _M6).reshape(-1, 64)
    y = _l1_fit(design, target, _JOINT_EQ, _JOINT_RHS)
    return None if y is None else _split(y)


def _fit_gamma_beta(qa, target):
    design = np.einsum("a,rabg->rgab", qa, _M6).reshape(-1, 64)
    y = _l1_fit(design, target, _JOINT_EQ, _JOINT_RHS)
    if y is None:
        return None
    qg, cond = _split(y)
    return qg, cond.transpose(1, 0, 2)  # back to [alpha][gamma][beta]


def _product(qa, qg, qb) -> np.ndarray:
    return np.einsum("a,g,agb->abg", qa, qg, qb).ravel()


def _seeds(rng: np.random.Generator):
    """Starting points for q_gamma: uniform, the four corners, then random."""
    yield np.full(4, 0.25)
    yield from np.eye(4)
    while True:
        yield rng.dirichlet(np.ones(4))


def find_bilocal_decomposition(
    p: Correlation,
    restarts: int = 49,
    iters: int = 500,
    seed: int = 0,
    target: float = SEARCH_TARGET,
) -> BilocalSearch:
    """Alternating L1 fits over the two sources.

    With q_gamma fixed the synthesized correlation is linear in the products
    q_alpha q(beta | alpha, gamma), so fitting Alice's source together with
    Bob's response is one linear program. The same holds with the roles of
    alpha and gamma swapped. Every restart starts from a different q_gamma.
    """
    goal = np.asarray(p.p, dtype=float).ravel()
    rng = np.random.default_rng(seed)
    best_err = math.inf
    total_iters = 0
    used = 0
    for qg in itertools.islice(_seeds(rng), restarts):
        used += 1
        qa = np.full(4, 0.25)
        qb = np.full((4, 4, 4), 0.25)
        err = math.inf
        for _ in range(iters):
            total_iters += 1
            start = err
            for side in ("alpha", "gamma"):
                if side == "alpha":
                    new = _fit_alpha_beta(qg, goal)
                    if new is not None:
                        qa, qb = new
                else:
                    new = _fit_gamma_beta(qa, goal)
                    if new is not None:
                        qg, qb = new
                q = _product(qa, qg, qb)
                err = float(np.abs(SYNTHESIS_MATRIX @ q - goal).sum())
                best_err = min(best_err, err)
                if err < target:
                    cert = product_weights(qa, qg, qb)
                    return BilocalSearch("ProvenBilocal", cert, err, used, total_iters)
            if start - err < 1e-13:
                break
    return BilocalSearch("Unknown", None, best_err, used, total_iters)


# -- noise thresholds --------------------------------------------------------

class NoThresholdError(ValueError):
    """The criterion does not change along the noise family."""


def bisect_threshold(violated: Callable[[float], bool], tol: float) -> float:
    """Smallest v in [0, 1] with ``violated(v)``, assuming monotonicity."""
    if not violated(1.0):
        raise NoThresholdError("criterion is never violated along the family")
    if violated(0.0):
        raise NoThresholdError("criterion is violated across the whole family")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if violated(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def critical_visibility(p_target: Correlation, method: str = "inequality", tol: float = 1e-10) -> float:
    """Visibility at which ``mix(p, P_R, v)`` starts to violate the criterion.

    ``inequality``: slack 1 + v^2 E^2 - v I is convex in v and equals 1 at
    v = 0, so it crosses zero once if it is negative at v = 1.
    ``local_lp``: the local set is convex and contains P_R, so locality is
    lost once along the family.
    """
    noise = white_noise(p_target.scenario)
    if method == "inequality":
        def violated(v):
            return check_biloc_inequality(mix(p_target, noise, v))[1] < 0.0
    elif method in ("local_lp", "local"):
        def violated(v):
            verdict = is_local(mix(p_target, noise, v))
            if verdict.status == "Unknown":
                raise lp.LpError(f"LP failed at v={v}: {verdict.diagnostics}")
            return not verdict.local
    else:
        raise ValueError(f"unknown criterion {method!r}")
    return bisect_threshold(violated, tol)


# -- full report -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CertReport:
    ie: IEValues
    biloc_inequality_lhs_minus_rhs: float
    local: LocalVerdict
    bilocal: str  # "ProvenBilocal", "ProvenNonBilocal" or "Unknown"
    bilocal_certificate: WeightVector | None = None
    search: BilocalSearch | None = None
    chsh: dict[int, float] | None = None

    def to_dict(self) -> dict:
        return {
            "I": self.ie.I,
            "E": self.ie.E,
            "e_table": self.ie.e_table.tolist(),
            "slack": -self.biloc_inequality_lhs_minus_rhs,
            "biloc_inequality_lhs_minus_rhs": self.biloc_inequality_lhs_minus_rhs,
            "local": {
                "verdict": self.local.status,
                "certificate": None if self.local.certificate is None else self.local.certificate.q.tolist(),
                "diagnostics": self.local.diagnostics,
            },
            "bilocal": {
                "verdict": self.bilocal,
                "certificate": None if self.bilocal_certificate is None else self.bilocal_certificate.q.tolist(),
                "search_l1_error": None if self.search is None else self.search.l1_error,
            },
            "chsh": None if self.chsh is None else {str(b): v for b, v in self.chsh.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def certify(p: Correlation, restarts: int = 49, iters: int = 500, seed: int = 0) -> CertReport:
    ie = compute_IE(p)
    lhs_minus_rhs = ie.I - 1.0 - ie.E ** 2
    local = is_local(p)
    search = None
    cert = None
    if lhs_minus_rhs > INEQUALITY_TOL:
        verdict = "ProvenNonBilocal"
    else:
        search = find_bilocal_decomposition(p, restarts, iters, seed)
        verdict = search.status
        cert = search.certificate
        if cert is not None and not is_bilocal_weights(cert):
            raise AssertionError("search returned a non-product certificate")
    return CertReport(ie, lhs_minus_rhs, local, verdict, cert, search, conditional_chsh(p))


# -- two-parameter slice -----------------------------------------------------

# relabelings taking (X, Y) to (-X, -Y), (-X, Y) and (X, -Y) inside the slice
SLICE_SYMMETRIES = {
    "upper": RelabelOp(),
    "lower": RelabelOp(flip_c=True),
    "left": RelabelOp(flip_c=True, swap_z=True),
    "right": RelabelOp(swap_z=True),
}
_SLICE_SIGNS = {"upper": (1, 1), "lower": (-1, -1), "left": (-1, 1), "right": (1, -1)}


def slice_array(X: float, Y: float) -> np.ndarray:
    """X P_C + Y Pbar_C + (1 - X - Y) P_R, not necessarily a valid distribution."""
    pc = synthesize_array(pc_weights().q)
    pcbar = synthesize_array(pcbar_weights().q)
    pr = np.full(DEFAULT_SCENARIO.shape, 1 / 16)
    return X * pc + Y * pcbar + (1 - X - Y) * pr


@dataclass(frozen=True)
class SlicePoint:
    X: float
    Y: float
    I: float
    E: float
    slack: float
    local: bool
    sym_slack: float  # min slack over the four symmetric images


@dataclass(frozen=True, eq=False)
class SliceTable:
    grid: np.ndarray
    points: list[SlicePoint]
    curves: dict[str, np.ndarray]


def slice_point(X: float, Y: float) -> SlicePoint:
    arr = slice_array(X, Y)
    ie = _ie_from_array(arr)
    slack = 1.0 + ie.E ** 2 - ie.I
    sym = []
    for op in SLICE_SYMMETRIES.values():
        img = _ie_from_array(relabel_array(arr, op))
        sym.append(1.0 + img.E ** 2 - img.I)
    return SlicePoint(X, Y, ie.I, ie.E, slack, _local_lp_array(arr).local, min(sym))


def slice_curves(n: int = 201) -> dict[str, np.ndarray]:
    """Boundary polylines: the local square and the four parabola arcs."""
    tau = np.linspace(0.0, 1.0, n)
    arc = np.column_stack([tau ** 2, (1 - tau) ** 2])  # sqrt X + sqrt Y = 1
    curves = {name: arc * np.array(sign, dtype=float) for name, sign in _SLICE_SIGNS.items()}
    curves["square"] = np.array([[1, 0], [0, 1], [-1, 0], [0, -1], [1, 0]], dtype=float)
    return curves


def export_slice(grid_n: int = 201, lo: float = -1.0, hi: float = 1.0) -> SliceTable:
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    grid = np.linspace(lo, hi, grid_n)
    points = [slice_point(float(X), float(Y)) for X in grid for Y in grid]
    return SliceTable(grid, points, slice_curves())


def write_slice_csv(table: SliceTable, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["X", "Y", "I", "E", "slack", "local"])
        for pt in table.points:
            writer.writerow([repr(pt.X), repr(pt.Y), repr(pt.I), repr(pt.E), repr(pt.slack), int(pt.local)])


def write_curves_csv(curves: dict[str, np.ndarray], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["curve", "X", "Y"])
        for name, pts in curves.items():
            for X, Y in pts:
                writer.writerow([name, repr(float(X)), repr(float(Y))])


# -- separable-source demonstration ------------------------------------------

# effective outcome of the Bob+Charles party: with Charles finding c = 0 Bob's
# first qubit was measured in z and the outcome is b0 ^ b1; with c = 1 it was
# measured in x and the outcome is b0
EFFECTIVE_OUTCOME = {0: _B0 ^ _B1, 1: _B0}
# CHSH variant (flip_x, flip_c, flip_sign) maximized by the ideal setup
EFFECTIVE_CHSH = (1, 0, 1)


@dataclass(frozen=True, eq=False)
class SeparableDemo:
    s_eff: float
    non_bilocal: bool
    correlators: np.ndarray = field(repr=False)  # E(x, c)
    correlation: Correlation = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "S_eff": self.s_eff,
            "abs_S_eff": abs(self.s_eff),
            "verdict": "non-bilocal" if self.non_bilocal else "inconclusive",
            "correlators": self.correlators.tolist(),
        }


def effective_chsh(p: Correlation, z: int = 0) -> tuple[float, np.ndarray]:
    """CHSH value with Charles's outcome as the setting of a combined Bob+Charles party."""
    corr = np.zeros((2, 2))
    for x in range(2):
        for c in range(2):
            joint = p.p[x, z, :, :, c]  # (a, b)
            pc = joint.sum()
            if pc <= 0:
                continue
            signs = (-1.0) ** ((np.arange(2)[:, None] + EFFECTIVE_OUTCOME[c][None, :]) % 2)
            corr[x, c] = float((signs * joint).sum() / pc)
    fx, fc, fs = EFFECTIVE_CHSH
    s = sum(
        (-1) ** ((x * c + fx * x + fc * c + fs) % 2) * corr[x, c]
        for x in range(2) for c in range(2)
    )
    return float(s), corr


def separable_demo(s2: TwoQubitState | None = None, visibility: float = 1.0) -> SeparableDemo:
    """Singlet from S1, a separable state from S2, Charles always measuring z."""
    s2 = separable_mix() if s2 is None else s2
    p = born_correlations(singlet(), s2, [DIAG_PLUS, DIAG_MINUS], [SZ, SZ])
    if visibility != 1.0:
        p = mix(p, white_noise(), visibility)
    s_eff, corr = effective_chsh(p)
    return SeparableDemo(s_eff, abs(s_eff) > 2.0 + INEQUALITY_TOL, corr, p)


def separable_threshold(tol: float = 1e-10) -> float:
    """Visibility above which the separable-source demo exceeds the CHSH bound."""
    return bisect_threshold(lambda v: separable_demo(visibility=v).non_bilocal, tol)
