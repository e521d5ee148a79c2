import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellcat import hilbert as hs
from bellcat import noise as nz
from bellcat.noise import NoiseModel


def cat(beta, n):
    v = hs.coherent_state(beta, n) + hs.coherent_state(-beta, n)
    return v / np.linalg.norm(v)


def test_defaults_and_validation():
    m = NoiseModel()
    assert m.f_q == pytest.approx(0.98)
    assert m.p_c_resolved == pytest.approx(1 - math.exp(-0.074))
    assert NoiseModel(p_c=0.06).p_c_resolved == 0.06
    for bad in ({"t1": 0}, {"f_c": 0.4}, {"p_c": 1.5}, {"t2": 30e-6}):
        with pytest.raises(ValueError):
            NoiseModel(**bad)


def test_only_disables_other_channels():
    m = NoiseModel().only("readout")
    assert m.readout_enabled and not m.cavity_loss_enabled
    assert m.eff_p_c == 0 and m.eff_f_c == 0.955
    with pytest.raises(ValueError):
        NoiseModel().only("gravity")


@pytest.mark.parametrize("t", [0.5e-6, 5e-6, 40e-6])
def test_kraus_set_is_complete(t):
    ops = nz.damping_kraus(25, t, 55e-6)
    np.testing.assert_allclose(sum(k.T @ k for k in ops), np.eye(25), atol=1e-12)


def test_zero_time_is_identity():
    rho = hs.to_density(hs.joint_state([1, 1j], hs.coherent_state(1, 20)) / math.sqrt(2))
    np.testing.assert_array_equal(nz.cavity_damping(rho, 0, 55e-6), rho)


@pytest.mark.parametrize("beta", [0.8, 1.5 + 0.5j])
def test_coherent_state_decays_to_coherent_state(beta):
    t, tau = 12e-6, 55e-6
    c = hs.coherent_state(beta, 40)
    out = nz.cavity_damping(np.outer(c, c.conj()), t, tau, joint=False)
    target = hs.coherent_state(beta * math.exp(-t / (2 * tau)), 40)
    assert hs.fidelity(target, out) >= 1 - 1e-8


@pytest.mark.parametrize("t", [0.5e-6, 2e-6, 5.5e-6])
def test_cat_coherence_factor(t):
    b, tau = 1.3, 55e-6
    v = cat(b, 40)
    out = nz.cavity_damping(np.outer(v, v.conj()), t, tau, joint=False)
    bt = b * math.exp(-t / (2 * tau))
    p, m = hs.coherent_state(bt, 40), hs.coherent_state(-bt, 40)
    a_pp = np.vdot(p, out @ p).real
    a_pm = np.vdot(p, out @ m).real
    ov = math.exp(-2 * bt ** 2)
    # rho = N (|b'><b'| + c |b'><-b'| + h.c. + |-b'><-b'|) with c the coherence factor
    n_fac = 1 / (2 * (1 + math.exp(-2 * b ** 2)))
    expected_c = math.exp(-2 * b ** 2 * (1 - math.exp(-t / tau)))
    pred_pp = n_fac * (1 + 2 * expected_c * ov + ov ** 2)
    pred_pm = n_fac * (2 * ov + expected_c * (1 + ov ** 2))
    assert a_pp == pytest.approx(pred_pp, abs=1e-6)
    assert a_pm == pytest.approx(pred_pm, abs=1e-6)


def random_joint_density(rng, n):
    m = rng.normal(size=(2 * n, 2 * n)) + 1j * rng.normal(size=(2 * n, 2 * n))
    return hs.normalize(m @ m.conj().T)


@given(seed=st.integers(0, 2 ** 32 - 1), t=st.floats(1e-8, 1e-4), p=st.floats(0, 1),
       f=st.floats(0, 1))
def test_channels_are_cptp(seed, t, p, f):
    rho = random_joint_density(np.random.default_rng(seed), 8)
    for out in (nz.cavity_damping(rho, t, 55e-6), nz.qubit_decay(rho, p),
                nz.qubit_dephasing(rho, f)):
        assert abs(np.trace(out).real - 1) < 1e-9
        assert np.linalg.eigvalsh((out + out.conj().T) / 2).min() > -1e-9


def test_qubit_decay_examples():
    e = hs.to_density(hs.joint_state([0, 1], hs.fock(4, 0)))
    g = hs.to_density(hs.joint_state([1, 0], hs.fock(4, 0)))
    np.testing.assert_allclose(nz.qubit_decay(e, 1.0), g, atol=1e-15)
    plus = hs.to_density(hs.joint_state(np.array([1, 1]) / math.sqrt(2), hs.fock(4, 0)))
    out = nz.qubit_decay(plus, 0.3)
    assert out[4, 4].real == pytest.approx(0.35)
    np.testing.assert_array_equal(nz.qubit_decay(plus, 0.0), plus)


def test_detector_flip_rate():
    rng = np.random.default_rng(11)
    m = NoiseModel(p_gg=0.98, p_ee=0.98)
    n = 100_000
    flips = sum(nz.detector_flip(1, "qubit", m, rng) == -1 for _ in range(n))
    assert abs(flips / n - 0.02) < 3 * math.sqrt(0.02 * 0.98 / n)
    ideal = NoiseModel.ideal()
    assert all(nz.detector_flip(s, w, ideal, rng) == s for s in (1, -1)
               for w in ("qubit", "cavity"))
    with pytest.raises(ValueError):
        nz.detector_flip(1, "both", m, rng)


def test_analytic_corrections():
    assert nz.crosstalk_adjust(0.7, 0.2, 0) == 0.7
    assert nz.crosstalk_adjust(0.7, 0.0, 0.06) == pytest.approx(0.94 * 0.7)
    assert nz.crosstalk_adjust(1, 1, 0.06) == pytest.approx(0.88)
    assert nz.visibility_estimate(0.98, 0.955) == pytest.approx(0.8736, abs=1e-12)
    assert nz.visibility_estimate(1, 1) == 1
    assert nz.visibility_predicted(0.98, 0.955, 0.06) == pytest.approx(0.821, abs=1e-3)


def test_rotation_error_model():
    ang = nz.rotation_error_model(0)
    assert ang["-Z"] == pytest.approx(math.pi)
    assert nz.rotation_error_model(0.042)["-Z"] == pytest.approx(math.pi * 0.958)
    assert nz.infer_delta_theta(1, 0, 0) == 0


def test_decay_phase_average_matches_sampling():
    chi, tau, t1 = 2 * math.pi * 1.43e6, 740e-9, 10e-6
    avg = nz.decay_phase_average(6, chi, tau, t1)
    rng = np.random.default_rng(2)
    ts = np.array([nz.sample_decay_time(rng, tau, t1) for _ in range(20000)])
    assert ts.max() <= tau
    mc = np.exp(1j * chi * ts[:, None] * 3).mean(axis=0)[0]
    assert abs(avg[3, 0] - mc) < 0.02
    np.testing.assert_allclose(np.diag(avg), 1)
