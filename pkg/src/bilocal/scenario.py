"""Measurement scenario and the correlation tensor P(a,b,c|x,z).

Tensors are stored with axis order ``[x][z][a][b][c]``. Bob has a single
fixed measurement with four outcomes; ``b = 2*b0 + b1`` so that
``b = 0, 1, 2, 3`` correspond to the bit strings 00, 01, 10, 11.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

CONSTRUCT_TOL = 1e-12
NOSIGNAL_TOL = 1e-9


class SignalingError(ValueError):
    """A marginal depends on a remote party's input."""


@dataclass(frozen=True)
class Scenario:
    nx: int = 2
    nz: int = 2
    na: int = 2
    nc: int = 2
    nb: int = 4

    def __post_init__(self):
        for name in ("nx", "nz", "na", "nc", "nb"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def shape(self) -> tuple[int, int, int, int, int]:
        return (self.nx, self.nz, self.na, self.nb, self.nc)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def to_dict(self) -> dict:
        return {"nx": self.nx, "nz": self.nz, "na": self.na, "nc": self.nc, "nb": self.nb}


DEFAULT_SCENARIO = Scenario()


def bob_bits(b: int) -> tuple[int, int]:
    """Decode Bob's output index into ``(b0, b1)``."""
    if not 0 <= b < 4:
        raise ValueError(f"Bob output must be in 0..3, got {b}")
    return b >> 1, b & 1


@dataclass(frozen=True, eq=False)
class Correlation:
    """A conditional distribution P(a,b,c|x,z).

    Entries must be nonnegative and every (x, z) slice must sum to one, both
    to within ``1e-12``. No-signaling is not required; see
    :func:`check_nosignaling`.
    """

    scenario: Scenario
    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.p, dtype=float).reshape(self.scenario.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("correlation contains non-finite entries")
        if arr.min() < -CONSTRUCT_TOL:
            raise ValueError(f"negative probability {arr.min():.3e}")
        sums = arr.sum(axis=(2, 3, 4))
        if np.max(np.abs(sums - 1.0)) > CONSTRUCT_TOL:
            raise ValueError(f"(x, z) slices not normalized: max deviation {np.max(np.abs(sums - 1)):.3e}")
        arr.setflags(write=False)
        object.__setattr__(self, "p", arr)

    def allclose(self, other: "Correlation", atol: float = 1e-12) -> bool:
        return self.scenario == other.scenario and bool(np.allclose(self.p, other.p, rtol=0.0, atol=atol))

    def to_json(self) -> str:
        flat = [float(f"{v:.17g}") for v in self.p.ravel()]
        return json.dumps({"scenario": self.scenario.to_dict(), "p": flat})

    @classmethod
    def from_json(cls, text: str) -> "Correlation":
        data = json.loads(text)
        try:
            scenario = Scenario(**data["scenario"])
            flat = data["p"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed correlation JSON: {exc}") from exc
        if len(flat) != scenario.size:
            raise ValueError(f"expected {scenario.size} entries, got {len(flat)}")
        return cls(scenario, np.asarray(flat, dtype=float))


def white_noise(scenario: Scenario = DEFAULT_SCENARIO) -> Correlation:
    """Uniformly random outcomes for every input pair."""
    n_out = scenario.na * scenario.nb * scenario.nc
    return Correlation(scenario, np.full(scenario.shape, 1.0 / n_out))


def mix(p: Correlation, q: Correlation, v: float) -> Correlation:
    """Return ``v*p + (1-v)*q``."""
    if p.scenario != q.scenario:
        raise ValueError("cannot mix correlations from different scenarios")
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"visibility must lie in [0, 1], got {v}")
    return Correlation(p.scenario, v * p.p + (1.0 - v) * q.p)


@dataclass(frozen=True)
class RelabelOp:
    """Relabeling of outputs and inputs. Every flag is an involution."""

    flip_a: bool = False
    flip_c: bool = False
    flip_b0: bool = False
    flip_b1: bool = False
    swap_x: bool = False
    swap_z: bool = False

    def __mul__(self, other: "RelabelOp") -> "RelabelOp":
        return RelabelOp(
            self.flip_a ^ other.flip_a,
            self.flip_c ^ other.flip_c,
            self.flip_b0 ^ other.flip_b0,
            self.flip_b1 ^ other.flip_b1,
            self.swap_x ^ other.swap_x,
            self.swap_z ^ other.swap_z,
        )

    @property
    def is_identity(self) -> bool:
        return not any((self.flip_a, self.flip_c, self.flip_b0, self.flip_b1, self.swap_x, self.swap_z))


def generated_group(generators: Iterable[RelabelOp]) -> list[RelabelOp]:
    """All products of subsets of commuting involutions, identity first."""
    group = [RelabelOp()]
    for g in generators:
        if g in group:
            continue
        group = group + [h * g for h in group]
    return group


def relabel_array(arr: np.ndarray, op: RelabelOp) -> np.ndarray:
    """Apply ``op`` to a raw ``[x][z][a][b][c]`` tensor in the default scenario."""
    if arr.shape != DEFAULT_SCENARIO.shape:
        raise ValueError("relabeling is defined for the default scenario only")
    bits = np.arange(2)
    b = np.arange(4)
    ix = bits ^ op.swap_x
    iz = bits ^ op.swap_z
    ia = bits ^ op.flip_a
    ic = bits ^ op.flip_c
    ib = b ^ (2 * op.flip_b0 + op.flip_b1)
    return arr[np.ix_(ix, iz, ia, ib, ic)]


def relabel(p: Correlation, op: RelabelOp) -> Correlation:
    if p.scenario != DEFAULT_SCENARIO:
        raise ValueError("relabeling is defined for the default scenario only")
    return Correlation(p.scenario, relabel_array(p.p, op))


def bob_marginal(p: Correlation) -> np.ndarray:
    """P(b|x,z) with shape ``(nx, nz, nb)``."""
    return p.p.sum(axis=(2, 4))


@dataclass(frozen=True, eq=False)
class Conditional:
    prob_b: float
    table: np.ndarray  # P_b(a, c | x, z), shape (nx, nz, na, nc)
    degenerate: bool = False


def conditional_ac(p: Correlation, b: int, tol: float = NOSIGNAL_TOL) -> Conditional:
    """Alice-Charles correlations conditioned on Bob's output ``b``.

    Raises :class:`SignalingError` if P(b) depends on (x, z). A zero-probability
    outcome yields a uniform table with ``degenerate=True``.
    """
    sc = p.scenario
    if not 0 <= b < sc.nb:
        raise ValueError(f"Bob output {b} out of range")
    pb = bob_marginal(p)[:, :, b]
    if np.ptp(pb) > tol:
        raise SignalingError(f"P(b={b}) varies with (x, z) by {np.ptp(pb):.3e}")
    prob = float(pb.mean())
    joint = p.p[:, :, :, b, :]
    if prob <= CONSTRUCT_TOL:
        table = np.full((sc.nx, sc.nz, sc.na, sc.nc), 1.0 / (sc.na * sc.nc))
        return Conditional(prob, table, True)
    return Conditional(prob, joint / pb[:, :, None, None])


def _nosignaling_array(arr: np.ndarray, tol: float) -> bool:
    # Alice-side marginals must not depend on z, Charles-side ones not on x,
    # Bob's marginal on neither.
    p_ab = arr.sum(axis=4)
    p_bc = arr.sum(axis=2)
    p_a = p_ab.sum(axis=3)
    p_c = p_bc.sum(axis=2)
    p_b = p_ab.sum(axis=2)
    checks = (
        np.ptp(p_ab, axis=1),
        np.ptp(p_a, axis=1),
        np.ptp(p_bc, axis=0),
        np.ptp(p_c, axis=0),
        np.ptp(p_b.reshape(-1, arr.shape[3]), axis=0),
    )
    return all(float(c.max(initial=0.0)) <= tol for c in checks)


def check_nosignaling(p: Correlation, tol: float = NOSIGNAL_TOL) -> bool:
    return _nosignaling_array(p.p, tol)
