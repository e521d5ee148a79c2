"""Decoherence channels and detector-imperfection models.

Channels act on density matrices (cavity-only or joint qubit-cavity) and are
applied in discrete slots between ideal gates. Detector imperfections are
available both as sampled processes (``detector_flip``) and as the analytic
corrections used to interpret averaged data.
"""
from dataclasses import dataclass, replace
import math

import numpy as np
from scipy.special import gammaln

from .hilbert import n_cav_of


@dataclass(frozen=True)
class NoiseModel:
    """Physical imperfections of the experiment (SI units).

    Each ``*_enabled`` switch turns one channel off entirely; the ``effective``
    properties return the ideal value for a disabled channel so downstream
    code never has to branch on the switches.

    ``p_c`` is the probability that the qubit decays between the first
    measurement and the feedback pulse. ``None`` derives it from
    ``1 - exp(-tau_wait / t1)``.
    """

    tau_s: float = 55e-6
    t1: float = 10e-6
    t2: float = 10e-6
    p_gg: float = 0.985
    p_ee: float = 0.975
    f_c: float = 0.955
    tau_wait: float = 740e-9
    p_c: float | None = None
    t_eff: float = 1.24e-6
    init_success: float = 0.99
    rotation_error: float = 0.042
    cavity_loss_enabled: bool = True
    qubit_decay_enabled: bool = True
    readout_enabled: bool = True
    feedback_enabled: bool = True
    init_enabled: bool = True
    rotation_error_enabled: bool = True
    dephasing_enabled: bool = False
    ramsey_decay_enabled: bool = False

    def __post_init__(self):
        for name in ("tau_s", "t1", "t2", "tau_wait", "t_eff"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("p_gg", "p_ee", "f_c"):
            if not 0.5 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0.5, 1]")
        if self.p_c is not None and not 0 <= self.p_c <= 1:
            raise ValueError("p_c must lie in [0, 1]")
        if not 0 <= self.init_success <= 1:
            raise ValueError("init_success must lie in [0, 1]")
        if self.t2 > 2 * self.t1:
            raise ValueError("t2 cannot exceed 2 * t1")

    @classmethod
    def ideal(cls):
        return cls(
            cavity_loss_enabled=False, qubit_decay_enabled=False, readout_enabled=False,
            feedback_enabled=False, init_enabled=False, rotation_error_enabled=False,
            dephasing_enabled=False, ramsey_decay_enabled=False,
        )

    @classmethod
    def paper(cls):
        return cls()

    def only(self, *channels):
        """Copy with every channel disabled except the named ones."""
        names = {"cavity_loss", "qubit_decay", "readout", "feedback", "init",
                 "rotation_error", "dephasing", "ramsey_decay"}
        unknown = set(channels) - names
        if unknown:
            raise ValueError(f"unknown channels {sorted(unknown)}")
        return replace(self, **{f"{n}_enabled": n in channels for n in names})

    @property
    def f_q(self):
        return (self.p_gg + self.p_ee) / 2

    @property
    def p_c_resolved(self):
        if self.p_c is not None:
            return self.p_c
        return 1.0 - math.exp(-self.tau_wait / self.t1)

    # effective values used by the simulation
    @property
    def eff_p_gg(self):
        return self.p_gg if self.readout_enabled else 1.0

    @property
    def eff_p_ee(self):
        return self.p_ee if self.readout_enabled else 1.0

    @property
    def eff_f_c(self):
        return self.f_c if self.readout_enabled else 1.0

    @property
    def eff_p_c(self):
        return self.p_c_resolved if (self.feedback_enabled and self.qubit_decay_enabled) else 0.0

    @property
    def eff_init_success(self):
        return self.init_success if self.init_enabled else 1.0

    @property
    def eff_rotation_error(self):
        return self.rotation_error if self.rotation_error_enabled else 0.0

    @property
    def t_phi(self):
        """Pure-dephasing time implied by T1 and T2 (inf when T2 = 2 T1)."""
        rate = 1 / self.t2 - 1 / (2 * self.t1)
        return math.inf if rate <= 0 else 1 / rate


def damping_kraus(n_cav, t, tau):
    """Kraus operators of photon loss over time ``t`` with lifetime ``tau``.

    ``K_k = sum_n sqrt(C(n, k) eta^(n-k) (1-eta)^k) |n-k><n|`` with
    ``eta = exp(-t/tau)``; the set is complete on the truncated space.
    """
    eta = math.exp(-t / tau)
    ops = []
    n = np.arange(n_cav)
    for k in range(n_cav):
        m = n[k:]
        if eta == 1.0:
            if k:
                break
            amp = np.ones(n_cav)
        else:
            log_amp = 0.5 * (gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1)
                             + (m - k) * math.log(eta) + (k * math.log1p(-eta) if k else 0.0))
            amp = np.exp(log_amp)
        kop = np.zeros((n_cav, n_cav))
        kop[m - k, m] = amp
        ops.append(kop)
    return ops


def _apply_cavity_kraus(rho, ops, joint):
    if joint:
        ops = [np.kron(np.eye(2), k) for k in ops]
    return sum(k @ rho @ k.T for k in ops)


def cavity_damping(rho, t, tau_s, joint=True):
    """Amplitude-damping (photon loss) channel on the cavity for a time ``t``.

    ``rho`` is a joint qubit-cavity density matrix, or a cavity-only one when
    ``joint=False``. Coherent states map to ``|beta exp(-t / 2 tau_s)>``.
    """
    rho = np.asarray(rho, dtype=complex)
    if t == 0:
        return rho.copy()
    n = n_cav_of(rho) if joint else rho.shape[0]
    return _apply_cavity_kraus(rho, damping_kraus(n, t, tau_s), joint)


def qubit_decay(rho, p):
    """Qubit amplitude damping ``|e> -> |g>`` with probability ``p`` on a joint state."""
    rho = np.asarray(rho, dtype=complex)
    n = n_cav_of(rho)
    b = rho.reshape(2, n, 2, n).copy()
    out = np.zeros_like(b)
    s = math.sqrt(1 - p)
    out[0, :, 0, :] = b[0, :, 0, :] + p * b[1, :, 1, :]
    out[1, :, 1, :] = (1 - p) * b[1, :, 1, :]
    out[0, :, 1, :] = s * b[0, :, 1, :]
    out[1, :, 0, :] = s * b[1, :, 0, :]
    return out.reshape(2 * n, 2 * n)


def qubit_dephasing(rho, factor):
    """Multiply the qubit coherences of a joint state by ``factor``."""
    rho = np.asarray(rho, dtype=complex)
    n = n_cav_of(rho)
    out = rho.copy()
    out[:n, n:] *= factor
    out[n:, :n] *= factor
    return out


def detector_flip(true_outcome, which, model, rng):
    """Pass an ideal +/-1 outcome through the qubit or cavity detector.

    The qubit detector is asymmetric: ``+1`` (ground) survives with
    probability ``P(g|g)``, ``-1`` with ``P(e|e)``. The parity detector
    flips symmetrically with probability ``1 - F_c``.
    """
    if which == "qubit":
        keep = model.eff_p_gg if true_outcome == 1 else model.eff_p_ee
    elif which == "cavity":
        keep = model.eff_f_c
    else:
        raise ValueError(f"unknown detector {which!r}")
    return true_outcome if rng.random() < keep else -true_outcome


def crosstalk_adjust(ab, b, p_c):
    """Correlation seen through the reset cross-talk: ``(1 - p_c) <AB> - p_c <B>``."""
    return (1 - p_c) * ab - p_c * b


def visibility_estimate(f_q, f_c):
    """Correlation contrast allowed by the two detectors: ``(2F_q - 1)(2F_c - 1)``."""
    return (2 * f_q - 1) * (2 * f_c - 1)


def visibility_predicted(f_q, f_c, p_c):
    return (1 - p_c) * visibility_estimate(f_q, f_c)


def rotation_error_model(delta_theta):
    """Pre-rotation angles actually applied for a fractional amplitude error.

    Only the pi pulse (the ``-Z`` setting) is affected. Returns the rotation
    angle per detector-setting label.
    """
    nominal = {"+Z": 0.0, "-Z": math.pi, "+X": -math.pi / 2, "-X": math.pi / 2,
               "+Y": math.pi / 2, "-Y": -math.pi / 2}
    out = dict(nominal)
    out["-Z"] = math.pi * (1 - delta_theta)
    return out


def infer_delta_theta(zz, zx, zy):
    """Invert ``<ZZ_c> tan(theta) = sqrt(<ZX_c>^2 + <ZY_c>^2)`` for the error fraction.

    The correlations must come from the under-rotated setting alone; the
    miss angle is ``pi * delta_theta``.
    """
    return math.atan2(math.hypot(zx, zy), abs(zz)) / math.pi


def decay_phase_average(n_cav, chi, tau, t1):
    """Average of ``exp(i chi t (n - m))`` over decay times ``t`` in ``[0, tau]``.

    Decay times follow the truncated exponential law of a qubit with
    lifetime ``t1``. Returns the ``n_cav x n_cav`` matrix of factors that
    multiply the cavity density matrix elementwise.
    """
    d = np.subtract.outer(np.arange(n_cav), np.arange(n_cav)).astype(float)
    rate = 1 / t1
    norm = 1 - math.exp(-rate * tau)
    z = -rate + 1j * chi * d
    return rate * (np.exp(z * tau) - 1) / z / norm


def sample_decay_time(rng, tau, t1):
    """Draw a decay time in ``[0, tau]`` from the truncated exponential law."""
    u = rng.random()
    return -t1 * math.log1p(-u * (1 - math.exp(-tau / t1)))
