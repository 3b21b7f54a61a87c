import numpy as np
import pytest

from bilocal.lp import chsh_coefficients, max_violation
from bilocal.quantum import (
    CHSH_SETTINGS,
    DIAG_MINUS,
    DIAG_PLUS,
    PAULIS,
    SX,
    SZ,
    Observable,
    TwoQubitState,
    bell_basis,
    born_correlations,
    maximally_mixed,
    observable,
    separable_mix,
    singlet,
)
from bilocal.scenario import check_nosignaling, conditional_ac

from conftest import closed_form_quantum_point


def random_state(rng) -> TwoQubitState:
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    return TwoQubitState(rho / np.trace(rho))


def random_observable(rng) -> Observable:
    n = rng.normal(size=3)
    return Observable(n / np.linalg.norm(n))


def random_rotation(rng):
    """A random SU(2) element and its SO(3) image."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    U = q[0] * np.eye(2) - 1j * sum(qi * s for qi, s in zip(q[1:], PAULIS))
    R = np.array([[0.5 * np.trace(PAULIS[i] @ U @ PAULIS[j] @ U.conj().T).real for j in range(3)] for i in range(3)])
    return U, R


def test_observable_validation():
    with pytest.raises(ValueError):
        observable(1, 1, 0)
    assert np.allclose(SX.projector(0) + SX.projector(1), np.eye(2))
    assert np.allclose(SZ.projector(0), [[1, 0], [0, 0]])


def test_singlet_entries():
    rho = singlet().rho
    assert np.linalg.matrix_rank(rho) == 1
    assert rho[1, 1] == pytest.approx(0.5) and rho[2, 2] == pytest.approx(0.5)
    assert rho[1, 2] == pytest.approx(-0.5) and rho[2, 1] == pytest.approx(-0.5)
    assert singlet().purity == pytest.approx(1.0, abs=1e-12)


def test_separable_mix_is_separable():
    st = separable_mix()
    assert np.trace(st.rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.eigvalsh(st.rho).min() >= -1e-12
    assert np.linalg.eigvalsh(st.partial_transpose()).min() >= -1e-12
    # purity: (1 + |<+z,+z|+x,-z>|^2)/2 with that overlap zero
    k1 = np.kron([1, 0], [1, 0])
    k2 = np.kron(np.array([1, 1]) / np.sqrt(2), [0, 1])
    overlap = abs(np.vdot(k1, k2)) ** 2
    assert st.purity == pytest.approx(0.5 * (1 + overlap), abs=1e-12)
    assert np.linalg.eigvalsh(singlet().partial_transpose()).min() == pytest.approx(-0.5)


def test_state_validation():
    with pytest.raises(ValueError):
        TwoQubitState(np.diag([1.5, -0.5, 0, 0]))
    with pytest.raises(ValueError):
        TwoQubitState(np.eye(4) / 2)
    bad = np.eye(4) / 4 + 0j
    bad[0, 1] = 0.1j
    with pytest.raises(ValueError):
        TwoQubitState(bad)


def test_bell_basis_orthonormal():
    vecs = bell_basis().vectors
    assert np.allclose(vecs @ vecs.conj().T, np.eye(4), atol=1e-12)
    assert np.allclose(bell_basis().projectors.sum(axis=0), np.eye(4), atol=1e-12)


def test_optimal_settings_reproduce_closed_form(pq):
    assert np.max(np.abs(pq.p - closed_form_quantum_point())) < 1e-12


def test_chsh_settings_each_conditional_is_maximal(pq_chsh):
    # oracle: best of the 8 CHSH variants on every conditional table
    for b in range(4):
        table = conditional_ac(pq_chsh, b).table
        best = max(
            max_violation(table, chsh_coefficients(fx, fz, fs))
            for fx in range(2) for fz in range(2) for fs in range(2)
        )
        assert best == pytest.approx(2 * np.sqrt(2), abs=1e-12)


def test_maximally_mixed_second_source_factorizes():
    p = born_correlations(singlet(), maximally_mixed(), [DIAG_PLUS, DIAG_MINUS], [SX, SZ])
    for b in range(4):
        cond = conditional_ac(p, b)
        assert cond.prob_b == pytest.approx(0.25, abs=1e-12)
        alice = cond.table.sum(axis=3)  # P_b(a | x, z)
        assert np.allclose(cond.table, alice[..., None] * 0.5, atol=1e-12)


def test_random_inputs_are_normalized_and_nosignaling(rng):
    for _ in range(100):
        s1, s2 = random_state(rng), random_state(rng)
        ax = [random_observable(rng) for _ in range(2)]
        cz = [random_observable(rng) for _ in range(2)]
        p = born_correlations(s1, s2, ax, cz)
        assert np.max(np.abs(p.p.sum(axis=(2, 3, 4)) - 1)) < 1e-12
        assert check_nosignaling(p, tol=1e-12)


def test_local_unitary_covariance(rng):
    for _ in range(20):
        s1, s2 = random_state(rng), random_state(rng)
        ax = [random_observable(rng) for _ in range(2)]
        cz = [random_observable(rng) for _ in range(2)]
        U, R = random_rotation(rng)
        UA = np.kron(U, np.eye(2))
        s1_rot = TwoQubitState(UA @ s1.rho @ UA.conj().T)
        ax_rot = [Observable(R @ o.bloch) for o in ax]
        p = born_correlations(s1, s2, ax, cz)
        q = born_correlations(s1_rot, s2, ax_rot, cz)
        assert np.max(np.abs(p.p - q.p)) < 1e-10


def test_born_rejects_wrong_setting_count():
    with pytest.raises(ValueError):
        born_correlations(singlet(), singlet(), [SX], [SX, SZ])


def test_chsh_settings_preset_matches_text():
    (a0, a1), (c0, c1) = CHSH_SETTINGS
    assert np.allclose(a0.bloch, [1, 0, 0]) and np.allclose(a1.bloch, [0, 0, 1])
    assert np.allclose(c0.bloch, np.array([1, 0, 1]) / np.sqrt(2))
    assert np.allclose(c1.bloch, np.array([1, 0, -1]) / np.sqrt(2))
