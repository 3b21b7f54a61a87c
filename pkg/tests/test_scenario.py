import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bilocal.certify import compute_IE
from bilocal.scenario import (
    DEFAULT_SCENARIO,
    Correlation,
    RelabelOp,
    Scenario,
    SignalingError,
    bob_bits,
    check_nosignaling,
    conditional_ac,
    generated_group,
    mix,
    relabel,
    white_noise,
)
from bilocal.strategies import random_bilocal_weights, synthesize

from conftest import closed_form_quantum_point

relabel_ops = st.builds(RelabelOp, *(st.booleans() for _ in range(6)))


def random_correlation(rng) -> Correlation:
    p = rng.random(DEFAULT_SCENARIO.shape)
    p /= p.sum(axis=(2, 3, 4), keepdims=True)
    return Correlation(DEFAULT_SCENARIO, p)


def test_default_scenario():
    assert DEFAULT_SCENARIO.shape == (2, 2, 2, 4, 2)
    assert DEFAULT_SCENARIO.size == 64


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_scenario_rejects_bad_cardinality(bad):
    with pytest.raises(ValueError):
        Scenario(nx=bad)


def test_bob_bits_decoding():
    assert [bob_bits(b) for b in range(4)] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    with pytest.raises(ValueError):
        bob_bits(4)


def test_correlation_validation():
    good = np.full(DEFAULT_SCENARIO.shape, 1 / 16)
    Correlation(DEFAULT_SCENARIO, good)
    bad = good.copy()
    bad[0, 0, 0, 0, 0] += 0.01
    with pytest.raises(ValueError):
        Correlation(DEFAULT_SCENARIO, bad)
    neg = good.copy()
    neg[0, 0, 0, 0, 0] = -0.01
    neg[0, 0, 0, 0, 1] += 0.01 + 1 / 16
    neg[0, 0, 0, 1, 0] -= 1 / 16
    with pytest.raises(ValueError):
        Correlation(DEFAULT_SCENARIO, neg)


def test_correlation_is_immutable(pr):
    with pytest.raises(ValueError):
        pr.p[0, 0, 0, 0, 0] = 1.0


def test_white_noise(pr):
    assert np.all(pr.p == 1 / 16)
    ie = compute_IE(pr)
    assert ie.I == 0.0 and ie.E == 0.0
    small = white_noise(Scenario(1, 1, 2, 2, 2))
    assert np.allclose(small.p, 1 / 8)


def test_mix_endpoints(pq, pr):
    assert mix(pq, pr, 0.0).allclose(pr, atol=0)
    assert mix(pq, pr, 1.0).allclose(pq, atol=0)
    half = compute_IE(mix(pq, pr, 0.5))
    assert half.I == pytest.approx(1.0, abs=1e-12)
    assert half.E == pytest.approx(0.0, abs=1e-12)


def test_mix_quarter_entries(pq, pr):
    # oracle: 0.25 * closed form + 0.75/16, entrywise
    expected = 0.25 * closed_form_quantum_point() + 0.75 / 16
    got = mix(pq, pr, 0.25).p
    assert np.max(np.abs(got - expected)) < 1e-15
    assert set(np.round(got.ravel() * 64, 12)) == {3.0, 4.0, 5.0}


def test_mix_errors(pq):
    with pytest.raises(ValueError):
        mix(pq, pq, 1.5)
    other = white_noise(Scenario(1, 1, 2, 2, 2))
    with pytest.raises(ValueError):
        mix(pq, other, 0.5)


@settings(max_examples=50, deadline=None)
@given(v=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_mix_is_affine(v, seed):
    rng = np.random.default_rng(seed)
    p, q = random_correlation(rng), random_correlation(rng)
    assert np.allclose(mix(p, q, v).p, v * p.p + (1 - v) * q.p, atol=0, rtol=0)


def test_relabel_identity_and_involution(pq):
    assert relabel(pq, RelabelOp()).allclose(pq, atol=0)
    fa = RelabelOp(flip_a=True)
    assert relabel(relabel(pq, fa), fa).allclose(pq, atol=0)


def test_relabel_preserves_quantum_point(pq):
    # a -> a^1 with b0 -> b0^1 keeps a^c = b0 structure of the closed form
    oracle = closed_form_quantum_point()
    assert np.array_equal(oracle[:, :, ::-1][:, :, :, [2, 3, 0, 1]], oracle)
    op = RelabelOp(flip_a=True, flip_b0=True)
    assert relabel(pq, op).allclose(pq, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(op=relabel_ops, g=relabel_ops, seed=st.integers(0, 2**32 - 1))
def test_relabel_properties(op, g, seed):
    p = random_correlation(np.random.default_rng(seed))
    once = relabel(p, op)
    assert np.allclose(once.p.sum(axis=(2, 3, 4)), 1.0, atol=1e-12)
    assert once.p.min() >= 0
    assert relabel(once, op).allclose(p, atol=0)
    assert relabel(once, g).allclose(relabel(p, op * g), atol=0)
    assert (op * g) * g == op


def test_generated_group_size():
    gens = [RelabelOp(flip_a=True), RelabelOp(flip_c=True), RelabelOp(flip_a=True, flip_c=True)]
    group = generated_group(gens)
    assert len(group) == 4
    assert group[0].is_identity


def test_conditional_ac_quantum_point(pq):
    for b in range(4):
        cond = conditional_ac(pq, b)
        assert cond.prob_b == pytest.approx(0.25, abs=1e-12)
        assert not cond.degenerate
    t = conditional_ac(pq, 0).table[0, 0]
    assert np.allclose(t, [[0.5, 0.0], [0.0, 0.5]], atol=1e-12)


def test_conditional_ac_noise(pr):
    for b in range(4):
        cond = conditional_ac(pr, b)
        assert cond.prob_b == pytest.approx(0.25)
        assert np.allclose(cond.table, 0.25)


def test_conditional_ac_degenerate():
    p = synthesize(random_bilocal_weights(np.random.default_rng(0))).p.copy()
    # move all of b=3 onto b=0 for every (x, z)
    p[:, :, :, 0, :] += p[:, :, :, 3, :]
    p[:, :, :, 3, :] = 0
    cond = conditional_ac(Correlation(DEFAULT_SCENARIO, p), 3)
    assert cond.degenerate and cond.prob_b == 0.0
    assert np.allclose(cond.table, 0.25)


def test_conditional_ac_reconstruction(rng):
    p = synthesize(random_bilocal_weights(rng))
    rebuilt = np.zeros_like(p.p)
    for b in range(4):
        cond = conditional_ac(p, b)
        rebuilt[:, :, :, b, :] = cond.prob_b * cond.table
    assert np.max(np.abs(rebuilt - p.p)) < 1e-12


def signaling_tensor() -> Correlation:
    p = np.zeros(DEFAULT_SCENARIO.shape)
    # Alice's output a = z: her marginal depends on Charles's input
    for x in range(2):
        for z in range(2):
            p[x, z, z, 0, 0] = 1.0
    return Correlation(DEFAULT_SCENARIO, p)


def test_check_nosignaling(pq, pr):
    assert check_nosignaling(pq)
    assert check_nosignaling(pr)
    assert not check_nosignaling(signaling_tensor())


def test_bob_signaling_raises():
    p = np.zeros(DEFAULT_SCENARIO.shape)
    for x in range(2):
        for z in range(2):
            p[x, z, 0, x, 0] = 1.0
    corr = Correlation(DEFAULT_SCENARIO, p)
    assert not check_nosignaling(corr)
    with pytest.raises(SignalingError):
        conditional_ac(corr, 0)


def test_json_round_trip(pq):
    text = pq.to_json()
    data = json.loads(text)
    assert data["scenario"] == {"nx": 2, "nz": 2, "na": 2, "nc": 2, "nb": 4}
    assert len(data["p"]) == 64
    # x slowest: first 16 entries are x=0, z=0
    assert np.allclose(data["p"][:16], pq.p[0, 0].ravel())
    back = Correlation.from_json(text)
    assert np.max(np.abs(back.p - pq.p)) <= 1e-15


@pytest.mark.parametrize("text", ['{"p": []}', '{"scenario": {"nx": 2, "nz": 2, "na": 2, "nc": 2, "nb": 4}, "p": [0.1]}'])
def test_json_malformed(text):
    with pytest.raises(ValueError):
        Correlation.from_json(text)
