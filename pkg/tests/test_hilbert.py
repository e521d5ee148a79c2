import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from bellcat import hilbert as hs


def expm_displacement(alpha, n, pad=120):
    a = hs.destroy(n + pad)
    d = expm(alpha * a.conj().T - np.conj(alpha) * a)
    return d[:n, :n]


@pytest.mark.parametrize("alpha", [0.3, 1.0 + 0.5j, -1.7j, 2.5 * np.exp(0.7j)])
def test_displacement_matches_matrix_exponential(alpha):
    n = 30
    np.testing.assert_allclose(hs.displacement_op(alpha, n), expm_displacement(alpha, n),
                               atol=1e-10)


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.2 - 0.4j, math.sqrt(3)])
def test_coherent_state_is_displaced_vacuum(beta):
    c = hs.coherent_state(beta, 40)
    d = hs.displacement_op(beta, 40)[:, 0]
    assert abs(np.vdot(c, d)) ** 2 == pytest.approx(1, abs=1e-12)


def test_coherent_state_leakage_raises():
    with pytest.raises(hs.TruncationError):
        hs.coherent_state(4.0, 20)


def test_coherent_overlap_closed_form():
    b = 0.9 + 0.3j
    ov = np.vdot(hs.coherent_state(b, 40), hs.coherent_state(-b, 40))
    assert ov.real == pytest.approx(math.exp(-2 * abs(b) ** 2), abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.4, -1.1 + 0.8j, 2.9j])
def test_displaced_parity_against_expm(alpha):
    n = 25
    d = expm_displacement(alpha, n + 60, pad=120)
    p = np.diag((-1.0) ** np.arange(n + 60))
    ref = (d @ p @ d.conj().T)[:n, :n]
    np.testing.assert_allclose(hs.displaced_parity(alpha, n), ref, atol=1e-10)


def test_vacuum_wigner_is_gaussian():
    alphas = np.array([0, 0.5, 1j, 1 - 1j])
    vac = np.zeros((10, 10), dtype=complex)
    vac[0, 0] = 1
    vals = hs.parity_expectations(vac, alphas).real
    np.testing.assert_allclose(vals, np.exp(-2 * abs(alphas) ** 2), atol=1e-12)


def test_parity_expectations_batch_matches_single():
    rng = np.random.default_rng(0)
    ops = rng.normal(size=(3, 12, 12)) + 1j * rng.normal(size=(3, 12, 12))
    alphas = rng.uniform(-2, 2, 7) + 1j * rng.uniform(-2, 2, 7)
    batch = hs.parity_expectations(ops, alphas, chunk=3)
    for k in range(3):
        for j, a in enumerate(alphas):
            ref = np.trace(ops[k] @ hs.displaced_parity(a, 12))
            assert batch[k, j] == pytest.approx(ref, abs=1e-10)


@given(theta=st.floats(-2 * math.pi, 2 * math.pi), phi=st.floats(-math.pi, math.pi))
def test_qubit_rotation_is_unitary(theta, phi):
    u = hs.qubit_rotation(theta, phi)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-12)


def test_rotation_conventions():
    g = np.array([1, 0], dtype=complex)
    plus = hs.qubit_rotation(math.pi / 2, hs.Y_AXIS) @ g
    np.testing.assert_allclose(plus, np.array([1, 1]) / math.sqrt(2), atol=1e-12)
    assert (np.vdot(g, hs.SZ @ g)).real == 1


def test_pauli_components_round_trip():
    rng = np.random.default_rng(3)
    m = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    rho = hs.normalize(m @ m.conj().T)
    np.testing.assert_allclose(hs.from_pauli_components(hs.pauli_components(rho)), rho,
                               atol=1e-12)


def test_partial_traces_of_product():
    q = np.array([0.6, 0.8j])
    c = hs.coherent_state(0.7, 20)
    psi = hs.joint_state(q, c)
    np.testing.assert_allclose(hs.partial_trace(psi, "cavity"), np.outer(q, q.conj()),
                               atol=1e-9)
    assert hs.purity(hs.partial_trace(psi, "qubit")) == pytest.approx(1, abs=1e-9)
    with pytest.raises(ValueError):
        hs.partial_trace(psi, "both")


def test_fidelity_pure_and_mixed_agree():
    rng = np.random.default_rng(5)
    a = rng.normal(size=8) + 1j * rng.normal(size=8)
    b = rng.normal(size=8) + 1j * rng.normal(size=8)
    a, b = a / np.linalg.norm(a), b / np.linalg.norm(b)
    pure = hs.fidelity(a, b)
    assert hs.fidelity(np.outer(a, a.conj()), np.outer(b, b.conj())) == pytest.approx(pure,
                                                                                      abs=1e-9)
    assert hs.fidelity(a, np.outer(b, b.conj())) == pytest.approx(pure, abs=1e-12)


def test_check_density_rejects_bad_input():
    with pytest.raises(ValueError):
        hs.check_density(np.diag([1.2, -0.2]))
    hs.check_density(np.diag([0.3, 0.7]))
