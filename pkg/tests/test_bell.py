import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellcat import bell
from bellcat import hilbert as hs
from bellcat.noise import NoiseModel
from conftest import SQRT3

TSIRELSON = 2 * math.sqrt(2)


def bisect(f, lo, hi, tol=1e-12):
    f_lo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (f_lo > 0):
            lo, f_lo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("corr, expected", [
    ((1, 1, -1, 1), 4),
    ((1, 1, 1, 1), 2),
    ((0, 0, 0, 0), 0),
    ((1 / math.sqrt(2),) * 2 + (-1 / math.sqrt(2),) + (1 / math.sqrt(2),), TSIRELSON),
])
def test_chsh(corr, expected):
    assert bell.chsh(*corr) == pytest.approx(expected)


def test_qubit_observables_reference_angles():
    a, b = bell.qubit_observables_test1(0)
    np.testing.assert_allclose(a, hs.SZ)
    np.testing.assert_allclose(b, hs.SX)
    a, b = bell.qubit_observables_test1(-math.pi / 4)
    np.testing.assert_allclose(a, (hs.SZ + hs.SX) / math.sqrt(2))
    np.testing.assert_allclose(b, (hs.SX - hs.SZ) / math.sqrt(2))


@given(st.floats(-math.pi, math.pi))
def test_qubit_observables_square_to_identity(theta):
    for op in bell.qubit_observables_test1(theta):
        np.testing.assert_allclose(op @ op, np.eye(2), atol=1e-12)


def test_two_qubit_bell_state_reaches_tsirelson():
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    a, b = bell.qubit_observables_test1(-math.pi / 4)
    corr = [hs.expectation(psi, np.kron(q, c)).real for q in (a, b) for c in (hs.SZ, hs.SX)]
    assert bell.chsh(*corr) == pytest.approx(TSIRELSON)


def test_cavity_observables_test2_at_zero_displacement():
    x, y = bell.cavity_observables_test2(0.0, SQRT3, 30)
    np.testing.assert_allclose(x, hs.displaced_parity(0, 30))
    np.testing.assert_allclose(y, hs.displaced_parity(-1j * math.pi / (8 * SQRT3), 30))


@pytest.mark.parametrize("alpha", [0.02, 0.05, 0.08])
def test_displacement_rotates_logical_basis(alpha):
    n = 40
    plus, minus = hs.coherent_state(SQRT3, n), hs.coherent_state(-SQRT3, n)
    x_state = (plus + minus) / np.linalg.norm(plus + minus)
    y_state = (plus + 1j * minus) / np.linalg.norm(plus + 1j * minus)
    xc, _ = bell.cavity_observables_test2(alpha, SQRT3, n)
    angle = math.atan2(hs.expectation(y_state, xc).real, hs.expectation(x_state, xc).real)
    assert angle == pytest.approx(4 * alpha * SQRT3, rel=0.05)


@pytest.mark.parametrize("beta", [0.3, 0.7, 1.0, SQRT3, 2.5, 4.0])
def test_optimal_displacement_matches_bisection(beta):
    f = lambda a: (beta - a) / (beta + a) - math.tan(4 * a * beta)
    ref = bisect(f, 0, min(math.pi / (16 * beta), beta))
    a0 = bell.optimal_displacement(beta)
    assert a0 == pytest.approx(ref, abs=1e-9)
    assert abs(f(a0)) < 1e-9


@pytest.mark.parametrize("beta", [2.5, 3.0, 5.0, 8.0])
def test_optimal_displacement_large_beta(beta):
    # the relative correction to pi/(16 beta) falls off as about 1/(4 beta^2)
    rel = bell.optimal_displacement(beta) / (math.pi / (16 * beta)) - 1
    assert -0.3 / beta ** 2 < rel < 0


def test_optimal_displacement_references():
    assert bell.optimal_displacement(3.0) == pytest.approx(math.pi / 48, rel=0.03)
    assert abs(bell.optimal_displacement(1.0) - 0.15) < 0.01


@pytest.mark.parametrize("beta", [0.0, -1.0])
def test_optimal_displacement_rejects_nonpositive(beta):
    with pytest.raises(ValueError):
        bell.optimal_displacement(beta)


def test_model_curves_test1_limits():
    c = bell.model_curves_test1(np.array([0.0, 5.0]), 1.0, 0.0)
    np.testing.assert_allclose(c["O_ideal"], [math.sqrt(2), TSIRELSON])
    np.testing.assert_allclose(c["O_loss"], c["O_ideal"])
    np.testing.assert_allclose(c["O_pred"], c["O_ideal"])
    assert bell.model_curves_test1(1.0, 0.85, 1.24 / 55)["O_pred"] == pytest.approx(2.3508, abs=1e-3)


def test_model_curve_test1_has_one_interior_maximum():
    betas = np.linspace(0, 4, 801)
    pred = bell.model_curves_test1(betas, 0.85, 1.24 / 55)["O_pred"]
    k = int(np.argmax(pred))
    assert 0 < k < len(betas) - 1
    assert np.all(np.diff(pred[:k + 1]) > 0) and np.all(np.diff(pred[k:]) < 0)


def test_model_curves_test2_limits():
    c = bell.model_curves_test2(np.array([0.0, 6.0]), 1.0, 0.0)
    assert c["alpha0"][0] == 0 and c["O_ideal"][0] == 2
    assert c["O_ideal"][1] == pytest.approx(TSIRELSON * math.exp(-2 * c["alpha0"][1] ** 2),
                                            abs=1e-4)
    assert bell.model_curves_test2(1.0, 0.0, 0.0)["O_pred"] == 0
    assert 2.1 < bell.model_curves_test2(1.0, 0.85, 1.24 / 55)["O_pred"] < 2.2


@pytest.mark.parametrize("test_id, param", [(1, -math.pi / 4), (2, None)])
def test_expected_ideal_matches_closed_form(test_id, param):
    beta = 1.0
    if test_id == 1:
        ref = bell.model_curves_test1(beta, 1, 0)["O_ideal"]
    else:
        param = bell.optimal_displacement(beta)
        ref = bell.model_curves_test2(beta, 1, 0)["O_ideal"]
    assert bell.bell_expected(test_id, beta, param).value == pytest.approx(ref, abs=1e-9)


def test_unknown_test_id():
    with pytest.raises(ValueError):
        bell.bell_expected(3, 1.0, 0.0)


def test_noiseless_sweep_matches_ideal():
    res, = bell.bell_sweep(1, [1.5], shots=100_000, seed=3)
    ideal = bell.model_curves_test1(1.5, 1, 0)["O_ideal"]
    assert abs(res.value - ideal) < 3 * res.sigma


def test_no_violation_without_cat():
    res, = bell.bell_sweep(1, [0.0], shots=20_000, seed=4)
    assert res.value < 2
    assert bell.bell_expected(1, 0.0, -math.pi / 4).value <= 2


def test_sweep_respects_tsirelson_and_is_deterministic():
    noise = NoiseModel()
    betas = bell.DEFAULT_BETAS[::2]
    a = bell.bell_sweep(1, betas, shots=2000, noise=noise, seed=7)
    b = bell.bell_sweep(1, betas, shots=2000, noise=noise, seed=7)
    for r, s in zip(a, b):
        assert r.correlations == s.correlations
        assert abs(r.value) <= TSIRELSON + 4 * r.sigma


@pytest.mark.parametrize("noise", [None, NoiseModel()], ids=["ideal", "noisy"])
def test_sub_results_agree_with_pooled(noise):
    res, = bell.bell_sweep(1, [1.0], shots=4000, noise=noise, seed=11)
    assert [s.setting for s in res.sub_results] == ["q+r+", "q+r-", "q-r+", "q-r-"]
    assert np.mean([s.value for s in res.sub_results]) == pytest.approx(res.value)
    for sub in res.sub_results:
        assert abs(sub.value - res.value) < 3 * math.hypot(sub.sigma, res.sigma)


def test_first_cell_offsets_streams():
    a = bell.bell_sweep(1, [1.0, 1.2], shots=500, seed=1)
    b = bell.bell_sweep(1, [1.2], shots=500, seed=1, first_cell=1)
    assert a[1].correlations == b[0].correlations
