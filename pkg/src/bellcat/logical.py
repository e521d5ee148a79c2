"""The cat-code qubit: logical observables as parity points and derived figures of merit.

The code space is spanned by the coherent states ``|beta>`` and ``|-beta>``.
Logical Pauli operators are displaced parities at a few phase-space points:

* ``I_c = P_beta + P_-beta`` and ``Z_c = P_beta - P_-beta``
* ``X_c = P_0``
* ``Y_c = P_{-i pi / 8 beta}``

With ``D_alpha = exp(alpha a^dag - alpha^* a)`` one finds
``<beta|P_{iy}|-beta> = exp(4 i y beta - 2 y^2)``, so the point
``-i pi / (8 beta)`` is the one for which the Bell-cat
``(|g, beta> + |e, -beta>)/sqrt(2)`` has ``<Y Y_c> = -1`` (up to the
``exp(-2 y^2)`` contrast), matching the Bell-state correlations
``(II, XX, YY, ZZ) = (1, 1, -1, 1)``.
"""
from dataclasses import dataclass
import math

import numpy as np

from . import hilbert as hs
from . import protocol as pr
from .tomography import ParityPoints, observable_from_wigner

MIN_BETA = 0.05
LABELS = "IXYZ"


@dataclass(frozen=True)
class LogicalFrame:
    """Parity-point map of the code with amplitude ``beta``."""

    beta: complex

    def __post_init__(self):
        if abs(self.beta) < MIN_BETA:
            raise ValueError(f"|beta| must be >= {MIN_BETA} to define the code")

    @property
    def orthogonality(self):
        """``|<beta|-beta>|^2 = exp(-4 |beta|^2)``."""
        return math.exp(-4 * abs(self.beta) ** 2)

    @property
    def y_point(self):
        return -1j * math.pi / (8 * self.beta)

    def points(self):
        b = complex(self.beta)
        return {
            "I": ParityPoints(((b, 1.0), (-b, 1.0))),
            "X": ParityPoints(((0j, 1.0),)),
            "Y": ParityPoints(((self.y_point, 1.0),)),
            "Z": ParityPoints(((b, 1.0), (-b, -1.0))),
        }


def logical_observables(beta, n_cav=40):
    """Cavity operators ``{I_c, X_c, Y_c, Z_c}`` on ``n_cav`` Fock levels."""
    frame = LogicalFrame(beta)
    return {k: p.matrix(n_cav) for k, p in frame.points().items()}


def logical_projector(beta, n_cav=40):
    """``M = |beta><beta| + |-beta><-beta|`` (not idempotent: the states overlap)."""
    LogicalFrame(beta)
    p = hs.coherent_state(beta, n_cav)
    m = hs.coherent_state(-beta, n_cav)
    return np.outer(p, p.conj()) + np.outer(m, m.conj())


def dfe(corr):
    """Direct fidelity estimate ``(II + XX - YY + ZZ) / 4`` to the Bell-cat."""
    return 0.25 * (corr["II"] + corr["XX"] - corr["YY"] + corr["ZZ"])


WITNESS_SIGNS = {
    "text": {"II": 1, "XX": -1, "YY": 1, "ZZ": -1},
    "figure": {"II": 1, "ZZ": -1, "XX": -1, "YY": 1},
}


def witness(corr, convention="text"):
    """Entanglement witness; a negative value detects entanglement with the Bell-cat.

    Two orderings of the same four terms circulate (``"text"`` and
    ``"figure"``); they are equal term by term and are both accepted.
    """
    try:
        signs = WITNESS_SIGNS[convention]
    except KeyError:
        raise ValueError(f"unknown witness convention {convention!r}") from None
    return sum(s * corr[k] for k, s in signs.items())


def pauli_set_16(source, beta, route="projector", n_cav=None):
    """All sixteen correlations ``<sigma_i (x) sigma^c_j>`` keyed ``"ij"``.

    ``route="projector"`` evaluates ``<sigma_i (x) M O_j M>`` on a state or
    density matrix; ``route="wigner"`` takes a normalized
    :class:`~bellcat.tomography.WignerGrid` and uses overlap integrals, which
    for parity-point observables reduce to interpolated channel values.
    """
    frame = LogicalFrame(beta)
    out = {}
    if route == "wigner":
        for cj, pts in frame.points().items():
            for qi in LABELS:
                out[qi + cj] = observable_from_wigner(source, hs.PAULIS[qi], pts)
        return out
    if route != "projector":
        raise ValueError(f"unknown route {route!r}")
    n = n_cav or hs.n_cav_of(source)
    m = logical_projector(beta, n)
    for cj, op in logical_observables(beta, n).items():
        cav = m @ op @ m
        for qi in LABELS:
            out[qi + cj] = hs.expectation(source, np.kron(hs.PAULIS[qi], cav)).real
    return out


def measured_correlations(state, beta, noise=None, labels=("II", "XX", "YY", "ZZ"),
                          chi=pr.CHI_DEFAULT):
    """Expected raw correlations recorded by the sequential detector.

    Each term averages the four detector-setting permutations; the qubit
    label ``I`` uses the parity reading alone. No contrast correction is
    applied, so detector imperfections show up as reduced magnitudes.
    """
    frame = LogicalFrame(beta)
    pts = frame.points()
    out = {}
    for lab in labels:
        qi, cj = lab[0], lab[1]
        axis = "Z" if qi == "I" else qi
        total = pts[cj].identity * (1.0 if qi == "I" else 0.0)
        for alpha, coef in pts[cj].terms:
            settings = pr.permutations(axis, alpha)
            p = pr.reading_distributions(state, settings, noise, chi)
            if qi == "I":
                vals = [pr.cavity_mean_from_distribution(d, s) for s, d in zip(settings, p)]
            else:
                vals = [pr.correlation_from_distribution(d, s) for s, d in zip(settings, p)]
            total += coef * float(np.mean(vals))
        out[lab] = total
    return out


def two_qubit_density(paulis):
    """Logical two-qubit density matrix ``1/4 sum c_ij sigma_i (x) sigma_j``."""
    rho = np.zeros((4, 4), dtype=complex)
    for qi in LABELS:
        for cj in LABELS:
            rho += paulis[qi + cj] * np.kron(hs.PAULIS[qi], hs.PAULIS[cj])
    return rho / 4


def encoded_entropy(beta):
    """Maximum von Neumann entropy (bits) of the code space at amplitude ``beta``.

    The eigenvalues of the equal mixture of ``|beta>`` and ``|-beta>`` are
    ``(1 +/- exp(-2 |beta|^2)) / 2``.
    """
    ov = math.exp(-2 * abs(beta) ** 2)
    s = 0.0
    for eta in (0.5 * (1 + ov), 0.5 * (1 - ov)):
        if eta > 0:
            s -= eta * math.log2(eta)
    return s


def preparation_gamma(chi=pr.CHI_DEFAULT, t1=10e-6):
    """Qubit-decay exponent accumulated during the entangling wait, ``pi / (chi T1)``."""
    return math.pi / (chi * t1)


def preparation_error_predictions(gamma, delta_theta):
    """First-order offsets of the diagonal logical correlations.

    Qubit decay during preparation unbalances the logical populations,
    ``<II> = <ZZ> = (1 + e^-gamma)/2`` and ``<ZI> = <IZ> = (1 - e^-gamma)/2``;
    a pi-pulse amplitude error adds ``(pi/4) delta_theta`` to the single-sided terms.
    """
    keep = 0.5 * (1 + math.exp(-gamma))
    shift = 0.5 * (1 - math.exp(-gamma)) + (math.pi / 4) * delta_theta
    return {"II": keep, "ZI": shift, "IZ": shift, "ZZ": keep}
