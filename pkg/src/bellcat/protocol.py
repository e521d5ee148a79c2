"""Experiment circuits: Bell-cat preparation, parity mapping, sequential detection.

Everything runs in the rotating frame of both modes, where the only
interaction left is the dispersive term: ``|e, n>`` picks up ``exp(+i chi n t)``
so that waiting ``pi / chi`` maps ``|e, beta>`` to ``|e, -beta>``.

Detector readings are reported as raw +/-1 values (+1 = qubit found in
``|g>``). The observable value of a reading is the reading times the sign of
the detector setting, following the four-permutation scheme of the
experiment (qubit pre-rotation sign x Ramsey sign).
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import hilbert as hs
from .hilbert import SX, SY, SZ, X_AXIS, Y_AXIS
from .noise import (NoiseModel, cavity_damping, decay_phase_average,
                    qubit_dephasing, sample_decay_time)

CHI_DEFAULT = 2 * math.pi * 1.43e6


def entangling_time(chi=CHI_DEFAULT):
    return math.pi / chi


def dispersive_evolve(state, t, chi=CHI_DEFAULT):
    """Evolve under the dispersive interaction for ``t`` seconds."""
    state = np.asarray(state, dtype=complex)
    n = hs.n_cav_of(state)
    phase = np.concatenate([np.ones(n), np.exp(1j * chi * t * np.arange(n))])
    if state.ndim == 1:
        return phase * state
    return phase[:, None] * state * phase.conj()[None, :]


def bell_cat_target(beta, n_cav=40):
    """The ideal Bell-cat ``(|g, beta> + |e, -beta>) / sqrt(2)`` built from exact amplitudes."""
    g = hs.coherent_state(beta, n_cav, check=False)
    e = hs.coherent_state(-beta, n_cav, check=False)
    return np.concatenate([g, e]) / math.sqrt(2)


def prepare_bell_cat(beta, n_cav=40, noise=None, chi=CHI_DEFAULT, prep_rotation_error=0.0):
    """Run the preparation circuit ``D_beta``, ``R_y(pi/2)``, wait ``pi/chi``.

    Without ``noise`` the pure joint state vector is returned. With a
    :class:`NoiseModel` the result is a density matrix including failed
    qubit initialization, qubit decay (and optional dephasing) during the
    entangling wait, and photon loss over the same interval.
    """
    hs.coherent_state(beta, n_cav)  # truncation check
    cav = hs.displacement_op(beta, n_cav)[:, 0]
    rot = hs.qubit_rotation(math.pi / 2 * (1 - prep_rotation_error), Y_AXIS)
    t = entangling_time(chi)
    if noise is None:
        psi = hs.joint_state(rot[:, 0], cav)
        return dispersive_evolve(psi, t, chi)

    rho = np.zeros((2 * n_cav, 2 * n_cav), dtype=complex)
    p_init = noise.eff_init_success
    for q0, weight in ((0, p_init), (1, 1 - p_init)):
        if weight == 0:
            continue
        a, b = rot[:, q0]
        rho += weight * _noisy_entangling_wait(a, b, cav, t, chi, noise)
    if noise.cavity_loss_enabled:
        rho = cavity_damping(rho, t, noise.tau_s)
    return rho


def _noisy_entangling_wait(a, b, cav, t, chi, noise):
    # qubit a|g> + b|e> times cavity state, dispersive wait with qubit T1 jumps
    n = cav.size
    rotated = np.exp(1j * chi * t * np.arange(n)) * cav
    if noise.qubit_decay_enabled:
        survive = math.exp(-t / noise.t1)
    else:
        survive = 1.0
    psi = np.concatenate([a * cav, b * math.sqrt(survive) * rotated])
    rho = np.outer(psi, psi.conj())
    if noise.dephasing_enabled and math.isfinite(noise.t_phi):
        rho = qubit_dephasing(rho, math.exp(-t / noise.t_phi))
    if noise.qubit_decay_enabled and survive < 1:
        # jump at time s leaves |g, beta exp(i chi s)>
        avg = decay_phase_average(n, chi, t, noise.t1)
        rho[:n, :n] += abs(b) ** 2 * (1 - survive) * np.outer(cav, cav.conj()) * avg
    return rho


def idle_until_detection(state, noise, chi=CHI_DEFAULT):
    """Photon loss for the rest of the lumped create-and-measure interval ``t_eff``."""
    rho = hs.to_density(state)
    if noise is None or not noise.cavity_loss_enabled:
        return rho
    remaining = max(0.0, noise.t_eff - entangling_time(chi))
    return cavity_damping(rho, remaining, noise.tau_s)


def prepare_fock_entangled(beta, m, n_cav=40):
    """``C_m |e, m> + sum_{n != m} C_n |g, n>`` with ``C_n = <n|beta>``, normalized."""
    c = hs.coherent_state(beta, n_cav, check=False)
    if abs(c[m]) == 0:
        raise ValueError(f"Fock level {m} is not populated for beta={beta}")
    g = c.copy()
    g[m] = 0
    e = np.zeros(n_cav, dtype=complex)
    e[m] = c[m]
    return hs.normalize(np.concatenate([g, e]))


# ---------------------------------------------------------------------------
# detector settings

# label -> (axis, sign, pre-rotation in the experiment's sign convention).
# With R = exp(-i theta n.sigma / 2) as used here every listed angle is
# negated; only the measured observable matters.
SETTING_TABLE = {
    "+Z": ("Z", 1, "1"),
    "-Z": ("Z", -1, "R_y(pi)"),
    "+X": ("X", 1, "R_y(pi/2)"),
    "-X": ("X", -1, "R_y(-pi/2)"),
    "+Y": ("Y", 1, "R_x(-pi/2)"),
    "-Y": ("Y", -1, "R_x(pi/2)"),
}


@dataclass(frozen=True)
class DetectorSetting:
    """One detector configuration of the sequential measurement.

    ``axis`` is ``"X"``, ``"Y"``, ``"Z"`` or an angle ``a`` selecting the
    qubit observable ``cos(a) Z - sin(a) X``. ``qubit_sign`` chooses between
    the two pre-rotations that map the observable's eigenstates to opposite
    detector values, ``ramsey_sign`` does the same for the parity mapping.
    """

    axis: object = "Z"
    qubit_sign: int = 1
    ramsey_sign: int = 1
    alpha: complex = 0j

    def __post_init__(self):
        if self.qubit_sign not in (1, -1) or self.ramsey_sign not in (1, -1):
            raise ValueError("detector signs must be +1 or -1")
        if isinstance(self.axis, str) and self.axis not in ("X", "Y", "Z"):
            raise ValueError(f"measurement axis must be X, Y or Z, got {self.axis!r}")

    @classmethod
    def from_table(cls, label, ramsey_sign=1, alpha=0j):
        axis, sign, _ = SETTING_TABLE[label]
        return cls(axis, sign, ramsey_sign, alpha)

    @property
    def label(self):
        s = "+" if self.qubit_sign > 0 else "-"
        r = "+" if self.ramsey_sign > 0 else "-"
        ax = self.axis if isinstance(self.axis, str) else f"{self.axis:.6g}"
        return f"{s}{ax},{r}P({complex(self.alpha):.6g})"

    def observable(self):
        """Qubit observable estimated by ``qubit_sign * reading``."""
        if isinstance(self.axis, str):
            return {"X": SX, "Y": SY, "Z": SZ}[self.axis]
        return math.cos(self.axis) * SZ - math.sin(self.axis) * SX

    def prerotation(self, delta_theta=0.0):
        """Unitary applied before the Z readout; ``delta_theta`` under-rotates pi pulses."""
        flip = hs.qubit_rotation(math.pi * (1 - delta_theta), Y_AXIS)
        if self.axis == "Z":
            return flip if self.qubit_sign < 0 else hs.I2.copy()
        if self.axis == "X":
            return hs.qubit_rotation(-self.qubit_sign * math.pi / 2, Y_AXIS)
        if self.axis == "Y":
            return hs.qubit_rotation(self.qubit_sign * math.pi / 2, X_AXIS)
        base = hs.qubit_rotation(self.axis, Y_AXIS)
        return flip @ base if self.qubit_sign < 0 else base


def permutations(axis, alpha):
    """The four balanced detector settings for one joint observable."""
    return [DetectorSetting(axis, qs, rs, alpha) for qs in (1, -1) for rs in (1, -1)]


@dataclass(frozen=True)
class ShotRecord:
    setting: DetectorSetting
    outcome_qubit: int
    outcome_cavity: int
    rng_stream: int = 0

    @property
    def value_qubit(self):
        return self.setting.qubit_sign * self.outcome_qubit

    @property
    def value_cavity(self):
        return self.setting.ramsey_sign * self.outcome_cavity

    @property
    def correlation(self):
        return self.value_qubit * self.value_cavity


# ---------------------------------------------------------------------------
# ideal parity mapping

@dataclass
class ParityMapResult:
    """Outcome of one Ramsey parity mapping.

    ``p_reading`` is the probability of a +1 (ground) detector reading,
    ``p_parity`` maps the parity eigenvalue (+1/-1) to its probability and
    ``post`` maps it to the normalized joint state after the measurement,
    displaced back to the original frame with the qubit reset to ``|g>``.
    """

    p_reading: float
    p_parity: dict
    post: dict = field(repr=False)
    improper: bool = False


def parity_map_circuit(state, alpha, ramsey_sign=1, chi=CHI_DEFAULT, strict=True, tol=1e-9):
    """Simulate ``D_-alpha, R_y(pi/2), wait pi/chi, R_y(-+pi/2), measure Z``.

    With ``ramsey_sign=+1`` a ground reading signals even displaced parity,
    so ``P(reading=-1) = (1 - <P_alpha>)/2``; ``-1`` swaps the labels.
    The qubit must start in ``|g>``; any excited population is an improper
    initialization, an error when ``strict`` and otherwise simulated as is
    (the outcome is then anti-correlated with the parity).
    """
    rho = hs.to_density(state)
    n = hs.n_cav_of(rho)
    blocks = hs.qubit_blocks(rho)
    p_exc = float(np.trace(blocks[1, 1]).real)
    improper = p_exc > tol
    if improper and strict:
        raise ValueError(f"qubit not initialized in |g> (excited population {p_exc:.3g})")

    n_work = hs.work_dimension(n, abs(alpha))
    pad = np.zeros((2, n_work, 2, n_work), dtype=complex)
    pad[:, :n, :, :n] = blocks.transpose(0, 2, 1, 3)
    big = pad.reshape(2 * n_work, 2 * n_work)
    d = hs.displacement_op(-alpha, n_work, n_work=n_work + 40) if alpha != 0 else np.eye(n_work)
    steps = [
        np.kron(hs.I2, d),
        np.kron(hs.qubit_rotation(math.pi / 2, Y_AXIS), np.eye(n_work)),
        np.diag(np.concatenate([np.ones(n_work), (-1.0) ** np.arange(n_work)])),
        np.kron(hs.qubit_rotation(-ramsey_sign * math.pi / 2, Y_AXIS), np.eye(n_work)),
    ]
    for u in steps:
        big = u @ big @ u.conj().T
    fin = big.reshape(2, n_work, 2, n_work)
    p_g = float(np.trace(fin[0, :, 0, :]).real)
    p_reading = min(1.0, max(0.0, p_g))
    d_back = d.conj().T
    post = {}
    p_parity = {}
    for q, reading in ((0, 1), (1, -1)):
        parity = ramsey_sign * reading
        prob = p_reading if reading == 1 else 1 - p_reading
        p_parity[parity] = prob
        if prob <= tol:
            continue
        cav = d_back @ fin[q, :, q, :] @ d_back.conj().T
        cav = cav[:n, :n]
        joint = np.zeros((2 * n, 2 * n), dtype=complex)
        joint[:n, :n] = cav / np.trace(cav).real
        post[parity] = joint
    return ParityMapResult(p_reading, p_parity, post, improper)


# ---------------------------------------------------------------------------
# back-action

QUBIT_PROJECTORS = {
    ("X", 1): 0.5 * np.array([[1, 1], [1, 1]], dtype=complex),
    ("X", -1): 0.5 * np.array([[1, -1], [-1, 1]], dtype=complex),
    ("Y", 1): 0.5 * np.array([[1, -1j], [1j, 1]], dtype=complex),
    ("Y", -1): 0.5 * np.array([[1, 1j], [-1j, 1]], dtype=complex),
    ("Z", 1): np.array([[1, 0], [0, 0]], dtype=complex),
    ("Z", -1): np.array([[0, 0], [0, 1]], dtype=complex),
}


def project_qubit(state, axis, outcome):
    """Ideal projective qubit measurement; returns ``(probability, post_state)``.

    Pure inputs give pure post states, mixed inputs give density matrices.
    """
    proj = QUBIT_PROJECTORS[(axis, outcome)]
    state = np.asarray(state, dtype=complex)
    n = hs.n_cav_of(state)
    m = np.kron(proj, np.eye(n))
    if state.ndim == 1:
        v = m @ state
        p = float(np.vdot(v, v).real)
        return p, (v / math.sqrt(p) if p > 0 else v)
    r = m @ state @ m
    p = float(np.trace(r).real)
    return p, (r / p if p > 0 else r)


def cavity_part(post, axis, outcome):
    """Cavity vector of a pure product post-measurement state."""
    n = hs.n_cav_of(post)
    q = {("Z", 1): [1, 0], ("Z", -1): [0, 1], ("X", 1): [1, 1], ("X", -1): [1, -1],
         ("Y", 1): [1, 1j], ("Y", -1): [1, -1j]}[(axis, outcome)]
    q = np.array(q, dtype=complex) / np.linalg.norm(q)
    return np.einsum("a,aj->j", q.conj(), post.reshape(2, n))


# ---------------------------------------------------------------------------
# noisy sequential detection

@dataclass
class _Leaf:
    reading: int        # first (qubit) detector reading
    proper: int         # +1 if the qubit is |g> when the parity mapping starts
    phase: float        # feedback rotation applied to the tomography displacement
    op: np.ndarray      # unnormalized conditional cavity state


def _leaves(state, setting, noise, chi):
    # all branches between the qubit measurement and the parity mapping
    rho = hs.to_density(state)
    n = hs.n_cav_of(rho)
    u = np.kron(setting.prerotation(noise.eff_rotation_error), np.eye(n))
    rho = u @ rho @ u.conj().T
    c_g = rho[:n, :n]
    c_e = rho[n:, n:]
    p_gg, p_ee = noise.eff_p_gg, noise.eff_p_ee
    if not noise.feedback_enabled:
        return [_Leaf(1, 1, 0.0, p_gg * c_g + (1 - p_ee) * c_e),
                _Leaf(-1, 1, 0.0, (1 - p_gg) * c_g + p_ee * c_e)]
    tau = noise.tau_wait
    p_c = noise.eff_p_c
    d = np.subtract.outer(np.arange(n), np.arange(n))
    waited = c_e * np.exp(1j * chi * tau * d)
    decayed = c_e * decay_phase_average(n, chi, tau, noise.t1) if p_c > 0 else 0 * c_e
    corr = chi * tau
    return [
        _Leaf(1, 1, 0.0, p_gg * c_g),
        _Leaf(-1, -1, corr, (1 - p_gg) * c_g),
        _Leaf(-1, 1, corr, p_ee * (1 - p_c) * waited),
        _Leaf(-1, -1, corr, p_ee * p_c * decayed),
        _Leaf(1, -1, 0.0, (1 - p_ee) * (1 - p_c) * waited),
        _Leaf(1, 1, 0.0, (1 - p_ee) * p_c * decayed),
    ]


def _ramsey_contrast(noise, chi):
    c = 2 * noise.eff_f_c - 1
    if noise.ramsey_decay_enabled:
        t = entangling_time(chi)
        c *= math.exp(-t / noise.t2) if noise.dephasing_enabled else math.exp(-t / (2 * noise.t1))
    return c


def reading_distributions(state, settings, noise=None, chi=CHI_DEFAULT, alphas=None):
    """Exact joint probabilities of the two detector readings for many settings.

    Returns ``p[k, ..., i, j]`` for setting ``k``, where ``i``/``j`` index
    the qubit and cavity readings (0 for +1, 1 for -1). Without ``alphas``
    every setting is evaluated at its own displacement; with ``alphas`` the
    displacement of each setting is replaced by every entry and the middle
    axes follow ``alphas.shape``. Settings sharing a qubit pre-rotation
    share one branch computation.
    """
    noise = noise or NoiseModel.ideal()
    rho = hs.to_density(state)
    settings = list(settings)
    own = alphas is None
    pts = (np.array([complex(s.alpha) for s in settings]) if own
           else np.asarray(alphas, dtype=complex))
    keys = list(dict.fromkeys((s.axis, s.qubit_sign) for s in settings))
    leaves = {k: _leaves(rho, DetectorSetting(*k), noise, chi) for k in keys}
    flat = [(k, i, lf) for k in keys for i, lf in enumerate(leaves[k])]
    vals = {}
    for phase in sorted({lf.phase for _, _, lf in flat}):
        sel = [(k, i, lf) for k, i, lf in flat if lf.phase == phase]
        ops = np.stack([lf.op for _, _, lf in sel])
        res = hs.parity_expectations(ops, pts * np.exp(1j * phase)).real
        for (k, i, _), v in zip(sel, res):
            vals[(k, i)] = v
    contrast = _ramsey_contrast(noise, chi)
    out = np.zeros((len(settings),) + (() if own else pts.shape) + (2, 2))
    for j, s in enumerate(settings):
        key = (s.axis, s.qubit_sign)
        for i, lf in enumerate(leaves[key]):
            v = vals[(key, i)][j] if own else vals[(key, i)]
            w = np.trace(lf.op).real
            p_plus = 0.5 * (w + contrast * s.ramsey_sign * lf.proper * v)
            qi = 0 if lf.reading == 1 else 1
            out[j, ..., qi, 0] += p_plus
            out[j, ..., qi, 1] += w - p_plus
    return np.clip(out, 0.0, None)


def reading_distribution(state, setting, noise=None, chi=CHI_DEFAULT, alphas=None):
    """Exact joint reading probabilities ``p[..., i, j]`` of one setting.

    See :func:`reading_distributions`; ``alphas`` optionally replaces the
    displacement of ``setting``.
    """
    return reading_distributions(state, [setting], noise, chi, alphas)[0]


def correlation_from_distribution(p, setting):
    """Expected value of ``qubit_sign * ramsey_sign * r_q * r_c``."""
    prod = p[..., 0, 0] + p[..., 1, 1] - p[..., 0, 1] - p[..., 1, 0]
    return setting.qubit_sign * setting.ramsey_sign * prod


def cavity_mean_from_distribution(p, setting):
    return setting.ramsey_sign * (p[..., :, 0].sum(-1) - p[..., :, 1].sum(-1))


def shot_rng(seed, *stream):
    """Generator for one independent stream keyed by ``(seed, *stream)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed)] + [int(s) for s in stream]))


def sample_readings(p, shots, rng):
    """Draw ``shots`` reading pairs from joint probabilities ``p[2, 2]``.

    Shot ``i`` consumes uniforms ``2i`` and ``2i+1`` of ``rng``: the first is
    compared with ``P(r_q = +1)``, the second with ``P(r_c = +1 | r_q)``.
    Returns two int8 arrays of +/-1.
    """
    u = rng.random((shots, 2))
    return _readings_from_uniforms(np.asarray(p), u)


def _readings_from_uniforms(p, u):
    # p: (..., 2, 2) probabilities, u: (..., shots, 2) uniforms
    p = p[..., None, :, :]
    rows = p.sum(-1)
    p_q = rows[..., 0] / rows.sum(-1)
    q = np.where(u[..., 0] < p_q, 1, -1)
    cond = p[..., 0] / np.maximum(rows, 1e-300)
    p_c = np.where(q == 1, cond[..., 0], cond[..., 1])
    c = np.where(u[..., 1] < p_c, 1, -1)
    return q.astype(np.int8), c.astype(np.int8)


def sample_shots(state, setting, noise, shots, seed, stream=(), chi=CHI_DEFAULT):
    """Vectorized equivalent of ``shots`` calls to :func:`sequential_run`.

    Uses the exact reading distribution; every shot draws from the stream
    ``(seed, *stream)`` at a position fixed by its index.
    """
    p = reading_distribution(state, setting, noise, chi)
    q, c = sample_readings(p, shots, shot_rng(seed, *stream))
    return q, c


def sequential_run(state, setting, noise=None, rng=None, chi=CHI_DEFAULT, stream=0):
    """Simulate a single shot of the sequential two-measurement protocol.

    Each imperfection is sampled in the order it happens: the qubit
    projection, its readout error, decay while waiting for feedback (with
    its random time), the conditional reset and phase correction, the
    parity measurement and the parity readout error.
    """
    noise = noise or NoiseModel.ideal()
    rng = rng if rng is not None else np.random.default_rng()
    rho = hs.to_density(state)
    n = hs.n_cav_of(rho)
    u = np.kron(setting.prerotation(noise.eff_rotation_error), np.eye(n))
    rho = u @ rho @ u.conj().T
    blocks = {1: rho[:n, :n], -1: rho[n:, n:]}
    p_g = float(np.trace(blocks[1]).real)
    true_q = 1 if rng.random() < p_g else -1
    cav = blocks[true_q] / np.trace(blocks[true_q]).real
    keep = noise.eff_p_gg if true_q == 1 else noise.eff_p_ee
    reading = true_q if rng.random() < keep else -true_q

    alpha = complex(setting.alpha)
    qubit_excited = true_q == -1
    if noise.feedback_enabled:
        if qubit_excited:
            t_exc = noise.tau_wait
            if rng.random() < noise.eff_p_c:
                t_exc = sample_decay_time(rng, noise.tau_wait, noise.t1)
                qubit_excited = False
            ph = np.exp(1j * chi * t_exc * np.arange(n))
            cav = ph[:, None] * cav * ph.conj()[None, :]
        if reading == -1:
            qubit_excited = not qubit_excited
            alpha *= np.exp(1j * chi * noise.tau_wait)
    else:
        qubit_excited = False

    par = hs.parity_expectations(cav, np.array([alpha]))[0].real
    proper = -1 if qubit_excited else 1
    p_plus = 0.5 * (1 + _ramsey_contrast(noise, chi) * setting.ramsey_sign * proper * par)
    reading_c = 1 if rng.random() < p_plus else -1
    return ShotRecord(setting, reading, reading_c, stream)
