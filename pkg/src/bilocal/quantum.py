"""Born-rule correlations for two singlet-like sources and a Bell measurement.

The global Hilbert space is ordered (Alice, Bob's qubit from S1, Bob's qubit
from S2, Charles), so ``s1 (x) s2`` is already in the right order and the
Bell projectors act on the two middle factors.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .scenario import DEFAULT_SCENARIO, Correlation

SQRT2 = np.sqrt(2.0)

I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

HERMITIAN_TOL = 1e-12
PSD_FLOOR = -1e-10


@dataclass(frozen=True, eq=False)
class Observable:
    """The +/-1 observable n.sigma. Outcome bit 0 is eigenvalue +1."""

    bloch: np.ndarray

    def __post_init__(self):
        n = np.asarray(self.bloch, dtype=float).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError(f"Bloch vector must be a unit vector, |n| = {np.linalg.norm(n)!r}")
        n.setflags(write=False)
        object.__setattr__(self, "bloch", n)

    @property
    def matrix(self) -> np.ndarray:
        return sum(c * s for c, s in zip(self.bloch, PAULIS))

    def projector(self, outcome: int) -> np.ndarray:
        sign = 1.0 if outcome == 0 else -1.0
        return 0.5 * (I2 + sign * self.matrix)


def observable(x: float, y: float, z: float) -> Observable:
    return Observable(np.array([x, y, z], dtype=float))


SX = observable(1, 0, 0)
SZ = observable(0, 0, 1)
DIAG_PLUS = observable(1 / SQRT2, 0, 1 / SQRT2)    # (sx + sz)/sqrt2
DIAG_MINUS = observable(1 / SQRT2, 0, -1 / SQRT2)  # (sx - sz)/sqrt2

OPTIMAL_SETTINGS = ((DIAG_PLUS, DIAG_MINUS), (DIAG_PLUS, DIAG_MINUS))
CHSH_SETTINGS = ((SX, SZ), (DIAG_PLUS, DIAG_MINUS))


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """Density matrix in the basis |00>, |01>, |10>, |11>."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex).reshape(4, 4)
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"density matrix has trace {np.trace(rho).real!r}")
        if np.linalg.eigvalsh(rho).min() < PSD_FLOOR:
            raise ValueError("density matrix is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)

    def partial_transpose(self) -> np.ndarray:
        """Transpose on the second qubit."""
        t = self.rho.reshape(2, 2, 2, 2)
        return t.transpose(0, 3, 2, 1).reshape(4, 4)


def _ket(*amps) -> np.ndarray:
    return np.array(amps, dtype=complex)


def pure_state(psi: np.ndarray) -> TwoQubitState:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return TwoQubitState(np.outer(psi, psi.conj()))


def singlet() -> TwoQubitState:
    return pure_state(_ket(0, 1, -1, 0))


def maximally_mixed() -> TwoQubitState:
    return TwoQubitState(np.eye(4) / 4)


def separable_mix() -> TwoQubitState:
    """(|+z,+z><+z,+z| + |+x,-z><+x,-z|)/2."""
    up = _ket(1, 0)
    down = _ket(0, 1)
    plus_x = _ket(1, 1) / SQRT2
    k1 = np.kron(up, up)
    k2 = np.kron(plus_x, down)
    return TwoQubitState(0.5 * (np.outer(k1, k1.conj()) + np.outer(k2, k2.conj())))


@dataclass(frozen=True, eq=False)
class BellBasis:
    """Phi+, Psi+, Psi-, Phi- in Bob's output order b = 0..3."""

    vectors: np.ndarray = field(repr=False)

    @property
    def projectors(self) -> np.ndarray:
        return np.einsum("bi,bj->bij", self.vectors, self.vectors.conj())


def bell_basis() -> BellBasis:
    vecs = np.array([
        _ket(1, 0, 0, 1),   # Phi+
        _ket(0, 1, 1, 0),   # Psi+
        _ket(0, 1, -1, 0),  # Psi-
        _ket(1, 0, 0, -1),  # Phi-
    ]) / SQRT2
    return BellBasis(vecs)


def born_correlations(
    s1: TwoQubitState,
    s2: TwoQubitState,
    ax: Sequence[Observable],
    cz: Sequence[Observable],
) -> Correlation:
    """P(a,b,c|x,z) = Tr[(A_{a|x} (x) Pi_b (x) C_{c|z}) (s1 (x) s2)]."""
    if len(ax) != DEFAULT_SCENARIO.nx or len(cz) != DEFAULT_SCENARIO.nz:
        raise ValueError("expected two settings each for Alice and Charles")
    rho = np.kron(s1.rho, s2.rho).reshape((2,) * 8)
    bell = bell_basis().projectors.reshape(4, 2, 2, 2, 2)
    a_proj = np.array([[o.projector(a) for a in (0, 1)] for o in ax])
    c_proj = np.array([[o.projector(c) for c in (0, 1)] for o in cz])
    # rho index layout: (A, B1, B2, C, A', B1', B2', C')
    p = np.einsum("xaij,bklmn,zcop,jmnpiklo->xzabc", a_proj, bell, c_proj, rho, optimize=True)
    return Correlation(DEFAULT_SCENARIO, p.real)


def quantum_point(settings=OPTIMAL_SETTINGS) -> Correlation:
    """Singlet sources with the given (Alice, Charles) settings."""
    ax, cz = settings
    return born_correlations(singlet(), singlet(), ax, cz)
