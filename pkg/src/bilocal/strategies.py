"""Deterministic strategies and finite hidden-variable models.

A model is a weight vector over the 64 triples (alpha, beta, gamma), where
alpha = (alpha0, alpha1) are Alice's outputs for x = 0, 1, beta = (beta0,
beta1) is Bob's output b = 2*beta0 + beta1, and gamma = (gamma0, gamma1) are
Charles's outputs. Flat storage is ordered (alpha0, alpha1, beta0, beta1,
gamma0, gamma1) with alpha0 slowest, which is the same as a ``(4, 4, 4)``
array indexed by ``[alpha][beta][gamma]``.

The model is bilocal iff the alpha-gamma marginal factorizes,
q_{alpha gamma} = q_alpha q_gamma.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .scenario import (
    DEFAULT_SCENARIO,
    Correlation,
    RelabelOp,
    generated_group,
    relabel_array,
)

N_TRIPLES = 64
WEIGHT_TOL = 1e-12


def _bit(strategy: int, x: int) -> int:
    """Output of a two-input deterministic strategy ``s = 2*s0 + s1`` on input x."""
    return (strategy >> (1 - x)) & 1


def _synthesis_matrix() -> np.ndarray:
    # rows: correlation entries in [x][z][a][b][c] order; columns: triples
    M = np.zeros(DEFAULT_SCENARIO.shape + (4, 4, 4))
    for al in range(4):
        for be in range(4):
            for ga in range(4):
                for x in range(2):
                    for z in range(2):
                        M[x, z, _bit(al, x), be, _bit(ga, z), al, be, ga] = 1.0
    M = M.reshape(DEFAULT_SCENARIO.size, N_TRIPLES)
    M.setflags(write=False)
    return M


SYNTHESIS_MATRIX = _synthesis_matrix()


@dataclass(frozen=True, eq=False)
class WeightVector:
    q: np.ndarray = field(repr=False)

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(N_TRIPLES)
        if not np.all(np.isfinite(q)):
            raise ValueError("weights contain non-finite entries")
        if q.min() < -WEIGHT_TOL:
            raise ValueError(f"negative weight {q.min():.3e}")
        if abs(q.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {q.sum()!r}")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def tensor(self) -> np.ndarray:
        """Weights as ``[alpha][beta][gamma]``."""
        return self.q.reshape(4, 4, 4)

    @property
    def bits(self) -> np.ndarray:
        """Weights as ``[a0][a1][b0][b1][g0][g1]``."""
        return self.q.reshape((2,) * 6)

    def to_json(self) -> str:
        return json.dumps([float(f"{v:.17g}") for v in self.q])

    @classmethod
    def from_json(cls, text: str) -> "WeightVector":
        data = json.loads(text)
        if len(data) != N_TRIPLES:
            raise ValueError(f"expected {N_TRIPLES} weights, got {len(data)}")
        return cls(np.asarray(data, dtype=float))


def point_mass(alpha: int, beta: int, gamma: int) -> WeightVector:
    q = np.zeros((4, 4, 4))
    q[alpha, beta, gamma] = 1.0
    return WeightVector(q)


def uniform_weights() -> WeightVector:
    return WeightVector(np.full(N_TRIPLES, 1.0 / N_TRIPLES))


def product_weights(q_alpha, q_gamma, q_beta_given) -> WeightVector:
    """Bilocal model q_alpha * q_gamma * q_{beta|alpha gamma}.

    ``q_beta_given`` has shape ``(4, 4, 4)`` indexed ``[alpha][gamma][beta]``.
    """
    qa = np.asarray(q_alpha, dtype=float)
    qg = np.asarray(q_gamma, dtype=float)
    qb = np.asarray(q_beta_given, dtype=float).reshape(4, 4, 4)
    return WeightVector(np.einsum("a,g,agb->abg", qa, qg, qb))


def random_bilocal_weights(rng: np.random.Generator) -> WeightVector:
    """Uniform on the simplex for q_alpha, q_gamma and each q_{beta|alpha gamma}."""
    ones = np.ones(4)
    return product_weights(rng.dirichlet(ones), rng.dirichlet(ones), rng.dirichlet(ones, size=(4, 4)))


def synthesize_array(q: np.ndarray) -> np.ndarray:
    return (SYNTHESIS_MATRIX @ np.asarray(q, dtype=float).reshape(N_TRIPLES)).reshape(DEFAULT_SCENARIO.shape)


def synthesize(w: WeightVector) -> Correlation:
    """P(abc|xz) = sum q_{abg} [a = alpha_x][b = beta][c = gamma_z]."""
    return Correlation(DEFAULT_SCENARIO, synthesize_array(w.q))


def marginals(w: WeightVector) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (q_alpha, q_gamma, q_alphagamma) with q_alphagamma of shape (4, 4)."""
    t = w.tensor
    q_ag = t.sum(axis=1)
    return q_ag.sum(axis=1), q_ag.sum(axis=0), q_ag


def bilocality_gap(w: WeightVector) -> float:
    qa, qg, qag = marginals(w)
    return float(np.max(np.abs(qag - np.outer(qa, qg))))


def is_bilocal_weights(w: WeightVector, tol: float = 1e-9) -> bool:
    return bilocality_gap(w) <= tol


def _depolarize_bits(q: np.ndarray) -> np.ndarray:
    # axes: a0 a1 b0 b1 g0 g1
    q1 = (
        q
        + np.flip(q, axis=(2, 4, 5))
        + np.flip(q, axis=(0, 1, 2))
        + np.flip(q, axis=(0, 1, 4, 5))
    ) / 4.0
    swap_g = (0, 1, 2, 3, 5, 4)
    swap_a = (1, 0, 2, 3, 4, 5)
    swap_ag = (1, 0, 2, 3, 5, 4)
    return (
        q1
        + np.flip(q1, axis=3).transpose(swap_g)
        + np.flip(q1, axis=3).transpose(swap_a)
        + q1.transpose(swap_ag)
    ) / 4.0


def depolarize(w: WeightVector) -> WeightVector:
    """Average the weights over the relabelings that leave I invariant.

    First stage: flip all of alpha (or all of gamma) together with beta0.
    Second stage: swap gamma0 <-> gamma1 (or alpha0 <-> alpha1) together
    with flipping beta1.
    """
    return WeightVector(_depolarize_bits(w.bits).ravel())


# Correlation-level counterpart of the weight averaging above.
DEPOLARIZING_GENERATORS = (
    RelabelOp(flip_a=True, flip_b0=True),
    RelabelOp(flip_c=True, flip_b0=True),
    RelabelOp(swap_x=True, flip_b1=True),
    RelabelOp(swap_z=True, flip_b1=True),
)
DEPOLARIZING_GROUP = tuple(generated_group(DEPOLARIZING_GENERATORS))


def symmetrize_array(arr: np.ndarray) -> np.ndarray:
    return sum(relabel_array(arr, g) for g in DEPOLARIZING_GROUP) / len(DEPOLARIZING_GROUP)


def symmetrize(p: Correlation) -> Correlation:
    return Correlation(p.scenario, symmetrize_array(p.p))


@dataclass(frozen=True)
class SymmetricParams:
    """The four-parameter family of depolarized bilocal models.

    ``undefined`` names parameters whose conditioning event has zero weight;
    they are reported as 1/2.
    """

    r: float
    s: float
    t: float
    u: float
    undefined: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("r", "s", "t", "u"):
            value = getattr(self, name)
            if not (0.0 - 1e-12 <= value <= 1.0 + 1e-12):
                raise ValueError(f"{name} = {value!r} outside [0, 1]")

    @property
    def X(self) -> float:
        return self.r * self.s * (2 * self.t - 1)

    @property
    def Y(self) -> float:
        return (1 - self.r) * (1 - self.s) * (2 * self.u - 1)


_ZERO_WEIGHT = 1e-14


def extract_symmetric_params(w: WeightVector, tol: float = 1e-10) -> SymmetricParams:
    """Read (r, s, t, u) off a depolarized bilocal weight vector."""
    if np.max(np.abs(depolarize(w).q - w.q)) > tol:
        raise ValueError("weights are not invariant under depolarization")
    gap = bilocality_gap(w)
    if gap > tol:
        raise ValueError(f"weights are not bilocal (gap {gap:.2e})")
    qa, qg, _ = marginals(w)
    t3 = w.tensor
    r = float(qa[0] + qa[3])
    s = float(qg[0] + qg[3])
    undefined = []

    den_t = t3[0, :, 0].sum()
    if den_t <= _ZERO_WEIGHT:
        t = 0.5
        undefined.append("t")
    else:
        t = float(t3[0, 0:2, 0].sum() / den_t)  # beta0 = 0
    den_u = t3[1, :, 1].sum()
    if den_u <= _ZERO_WEIGHT:
        u = 0.5
        undefined.append("u")
    else:
        u = float((t3[1, 0, 1] + t3[1, 3, 1]) / den_u)  # beta0 = beta1
    r, s, t, u = (min(1.0, max(0.0, v)) for v in (r, s, t, u))
    return SymmetricParams(r, s, t, u, tuple(undefined))


def build_symmetric_weights(params: SymmetricParams) -> WeightVector:
    r, s, t, u = params.r, params.s, params.t, params.u
    q_alpha = np.array([r / 2, (1 - r) / 2, (1 - r) / 2, r / 2])
    q_gamma = np.array([s / 2, (1 - s) / 2, (1 - s) / 2, s / 2])
    q_beta = np.full((4, 4, 4), 0.25)
    for al in range(4):
        a0, a1 = al >> 1, al & 1
        for ga in range(4):
            g0, g1 = ga >> 1, ga & 1
            for be in range(4):
                b0, b1 = be >> 1, be & 1
                if a0 == a1 and g0 == g1:
                    q_beta[al, ga, be] = t / 2 if (a0 ^ g0) == b0 else (1 - t) / 2
                elif a0 != a1 and g0 != g1:
                    q_beta[al, ga, be] = u / 2 if (a0 ^ g0) == (b0 ^ b1) else (1 - u) / 2
    return product_weights(q_alpha, q_gamma, q_beta)


def _strategy(bit0: int, bit1: int) -> int:
    return 2 * bit0 + bit1


def pc_weights() -> WeightVector:
    """P_C: Alice outputs a constant alpha, Charles the constant alpha ^ beta0."""
    q = np.zeros((4, 4, 4))
    for al in range(2):
        for b0 in range(2):
            for b1 in range(2):
                g = al ^ b0
                q[_strategy(al, al), _strategy(b0, b1), _strategy(g, g)] += 1 / 8
    return WeightVector(q)


def pcbar_weights() -> WeightVector:
    """The companion of P_C whose deterministic outputs flip with the input."""
    q = np.zeros((4, 4, 4))
    for al in range(2):
        for b0 in range(2):
            for b1 in range(2):
                a = al ^ b1
                g = al ^ b0
                q[_strategy(a, a ^ 1), _strategy(b0, b1), _strategy(g, g ^ 1)] += 1 / 8
    return WeightVector(q)
