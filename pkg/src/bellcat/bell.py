"""CHSH tests between the qubit and the cat-encoded cavity qubit.

Test 1 rotates the qubit measurement basis by ``theta`` and measures the
cavity in the fixed logical basis ``(Z_c, X_c)``. Test 2 keeps the qubit in
``(X, Y)`` and rotates the cavity basis by displacing the ``X_c`` parity
point along the imaginary axis by ``-/+ i alpha``.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import brentq

from . import hilbert as hs
from . import protocol as pr
from .logical import LogicalFrame
from .tomography import ParityPoints

TERMS = ("AA", "AB", "BA", "BB")
DEFAULT_BETAS = np.arange(0, 2.0 + 1e-9, 0.125)


def chsh(aa, ab, ba, bb):
    """``O = <A A_c> + <A B_c> - <B A_c> + <B B_c>``; local models obey ``|O| <= 2``."""
    return aa + ab - ba + bb


def qubit_observables_test1(theta):
    """``Z(theta) = Z cos(theta) - X sin(theta)`` and ``X(theta) = X cos(theta) + Z sin(theta)``."""
    c, s = math.cos(theta), math.sin(theta)
    return c * hs.SZ - s * hs.SX, c * hs.SX + s * hs.SZ


def cavity_points_test1(beta):
    pts = LogicalFrame(beta).points() if abs(beta) >= 0.05 else {
        "Z": ParityPoints(((complex(beta), 1.0), (-complex(beta), -1.0))),
        "X": ParityPoints(((0j, 1.0),)),
    }
    return pts["Z"], pts["X"]


def cavity_observables_test1(beta, n_cav=40):
    """Logical ``(Z_c, X_c)`` as Fock-basis matrices."""
    return tuple(p.matrix(n_cav) for p in cavity_points_test1(beta))


def cavity_points_test2(alpha):
    """Parity points of ``X_c(alpha)`` and ``X_c(-alpha)``."""
    return (ParityPoints(((-1j * alpha, 1.0),)), ParityPoints(((1j * alpha, 1.0),)))


def cavity_observables_test2(alpha, beta, n_cav=40):
    """``(X_c(alpha), Y_c(alpha))``: the logical X/Y pair rotated by about ``4 alpha beta``.

    ``X_c(alpha) = P_{-i alpha}`` and ``Y_c(alpha) = P_{-i(alpha + pi/(8 beta))}``.
    """
    y0 = LogicalFrame(beta).y_point
    return (hs.displaced_parity(-1j * alpha, n_cav),
            hs.displaced_parity(y0 - 1j * alpha, n_cav))


def _stationarity(alpha, beta):
    return (beta - alpha) / (beta + alpha) - math.tan(4 * alpha * beta)


def optimal_displacement(beta, xtol=1e-13):
    """Displacement maximizing the test-2 violation.

    Solves ``(beta - a) / (beta + a) = tan(4 a beta)``. The left side is
    below 1 for ``a > 0``, so the root lies where ``tan(4 a beta) < 1``, i.e.
    in ``(0, min(pi / (16 beta), beta))``, away from the pole of the tangent.
    """
    if not beta > 0:
        raise ValueError("beta must be positive")
    hi = min(math.pi / (16 * beta), beta)
    lo, f_lo, f_hi = 0.0, _stationarity(0.0, beta), _stationarity(hi, beta)
    if f_lo * f_hi > 0:
        raise ArithmeticError(f"no sign change of the stationarity condition for beta={beta}")
    return brentq(_stationarity, lo, hi, args=(beta,), xtol=xtol, rtol=4 * np.finfo(float).eps)


def model_curves_test1(beta, visibility, gamma):
    """Analytic test-1 maxima (theta = -pi/4).

    The loss curve replaces the ``exp(-8 beta^2)`` cat overlap with damping of
    the ``X_c`` interference term, ``exp(-2 gamma beta^2)``.
    """
    b2 = np.asarray(beta, dtype=float) ** 2
    ideal = math.sqrt(2) * (2 - np.exp(-8 * b2))
    loss = math.sqrt(2) * (1 - np.exp(-8 * b2) + np.exp(-2 * gamma * b2))
    return {"O_ideal": ideal, "O_vis": visibility * ideal,
            "O_loss": loss, "O_pred": visibility * loss}


def _test2_ideal(beta):
    if beta == 0:
        return 0.0, 2.0
    a0 = optimal_displacement(beta)
    return a0, 2 * (math.cos(4 * a0 * beta) + math.sin(4 * a0 * beta)) * math.exp(-2 * a0 ** 2)


def model_curves_test2(beta, visibility, gamma):
    """Analytic test-2 maxima at the optimal displacement."""
    betas = np.atleast_1d(np.asarray(beta, dtype=float))
    res = np.array([_test2_ideal(b) for b in betas])
    alpha0, ideal = res[:, 0], res[:, 1]
    pred = visibility * np.exp(-2 * gamma * betas ** 2) * ideal
    if np.ndim(beta) == 0:
        alpha0, ideal, pred = alpha0[0], ideal[0], pred[0]
    return {"alpha0": alpha0, "O_ideal": ideal, "O_pred": pred}


# ---------------------------------------------------------------------------
# Monte-Carlo sweeps

@dataclass
class BellResult:
    """One CHSH measurement.

    ``setting`` is ``"pooled"`` for the balanced combination of the four
    detector permutations, or ``"q+r-"``-style labels for single ones.
    """

    test_id: int
    beta: float
    param: float
    correlations: dict
    sigma: float
    shots: int
    setting: str = "pooled"
    sub_results: list = field(default_factory=list, repr=False)

    @property
    def value(self):
        c = self.correlations
        return chsh(c["AA"], c["AB"], c["BA"], c["BB"])

    @property
    def violation_sigmas(self):
        return (abs(self.value) - 2) / self.sigma if self.sigma > 0 else math.inf


def _terms(test_id, beta, param):
    # term -> (qubit axis, cavity parity points)
    if test_id == 1:
        a, b = param, param - math.pi / 2
        a_c, b_c = cavity_points_test1(beta)
    elif test_id == 2:
        a, b = "X", "Y"
        a_c, b_c = cavity_points_test2(param)
    else:
        raise ValueError(f"unknown Bell test {test_id}")
    return {"AA": (a, a_c), "AB": (a, b_c), "BA": (b, a_c), "BB": (b, b_c)}


PERMS = [(qs, rs) for qs in (1, -1) for rs in (1, -1)]


def _perm_label(qs, rs):
    return f"q{'+' if qs > 0 else '-'}r{'+' if rs > 0 else '-'}"


def _cell_distributions(state, terms, noise, chi):
    keys, settings = [], []
    for t in TERMS:
        axis, pts = terms[t]
        for k, (alpha, coef) in enumerate(pts.terms):
            for j, (qs, rs) in enumerate(PERMS):
                keys.append((t, k, j, coef))
                settings.append(pr.DetectorSetting(axis, qs, rs, alpha))
    return keys, settings, pr.reading_distributions(state, settings, noise, chi)


def _detection_state(beta, noise, n_cav, chi):
    if noise is None:
        return pr.prepare_bell_cat(beta, n_cav, chi=chi)
    rho = pr.prepare_bell_cat(beta, n_cav, noise=noise, chi=chi)
    return pr.idle_until_detection(rho, noise, chi)


def bell_expected(test_id, beta, param, noise=None, n_cav=40, chi=pr.CHI_DEFAULT):
    """Infinite-shot CHSH result of the simulated experiment."""
    state = _detection_state(beta, noise, n_cav, chi)
    terms = _terms(test_id, beta, param)
    keys, settings, p = _cell_distributions(state, terms, noise, chi)
    corr = dict.fromkeys(TERMS, 0.0)
    for (t, _, _, coef), s, d in zip(keys, settings, p):
        corr[t] += coef * float(pr.correlation_from_distribution(d, s)) / len(PERMS)
    return BellResult(test_id, float(beta), float(param), corr, 0.0, 0)


def bell_sweep(test_id, betas=None, params=(-math.pi / 4,), shots=4000, noise=None, seed=0,
               n_cav=40, chi=pr.CHI_DEFAULT, first_cell=0):
    """Monte-Carlo CHSH values over a grid of cat sizes and detector parameters.

    Every parity point of every term is measured ``shots`` times in each of
    the four detector permutations. Cell ``c``, term ``t``, point ``k`` and
    permutation ``j`` draw from the stream ``(seed, c, t, k, j)``. Each
    pooled result carries the four single-permutation results in
    ``sub_results``; ``sigma`` is the empirical standard error. Cells are
    numbered from ``first_cell`` in sweep order.
    """
    betas = DEFAULT_BETAS if betas is None else betas
    out = []
    cell = first_cell
    for beta in betas:
        state = _detection_state(beta, noise, n_cav, chi)
        for param in params:
            terms = _terms(test_id, beta, param)
            keys, settings, p = _cell_distributions(state, terms, noise, chi)
            sub_corr = [dict.fromkeys(TERMS, 0.0) for _ in PERMS]
            sub_var = [0.0 for _ in PERMS]
            pooled_corr = dict.fromkeys(TERMS, 0.0)
            pooled_var = 0.0
            for (t, k, j, coef), s, d in zip(keys, settings, p):
                rng = pr.shot_rng(seed, cell, TERMS.index(t), k, j)
                q, r = pr.sample_readings(d, shots, rng)
                x = s.qubit_sign * s.ramsey_sign * q.astype(np.int64) * r
                m, v = x.mean(), x.var(ddof=1) / shots
                sub_corr[j][t] += coef * m
                sub_var[j] += coef ** 2 * v
                pooled_corr[t] += coef * m / len(PERMS)
                pooled_var += coef ** 2 * v / len(PERMS) ** 2
            subs = [BellResult(test_id, float(beta), float(param),
                               {t: float(v) for t, v in sub_corr[j].items()},
                               math.sqrt(sub_var[j]), shots, _perm_label(*PERMS[j]))
                    for j in range(len(PERMS))]
            out.append(BellResult(test_id, float(beta), float(param),
                                  {t: float(v) for t, v in pooled_corr.items()},
                                  math.sqrt(pooled_var), shots * len(PERMS), "pooled", subs))
            cell += 1
    return out
