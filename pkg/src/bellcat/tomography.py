"""Joint Wigner tomography: grids, overlap functionals and state reconstruction.

The four channels of a joint Wigner function are
``W_i(alpha) = (2/pi) Tr[(sigma_i (x) P_alpha) rho]`` for ``i`` in I, X, Y, Z.
With ``rho = 1/2 sum_i sigma_i (x) rho_i`` and the standard Pauli trace
``Tr[sigma_i sigma_j] = 2 delta_ij`` the overlap identities used below hold
without extra factors:

* ``Tr[rho sigma] = (pi/2) sum_i int W_i^rho W_i^sigma``
* ``int W_I = Tr[rho]``
* ``<A (x) P_beta> = (pi/2) sum_i Tr[A sigma_i] W_i(beta) / 2``
"""
from dataclasses import dataclass, field, replace
import math
import warnings

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import hilbert as hs
from . import protocol as pr

CHANNELS = ("I", "X", "Y", "Z")


@dataclass(frozen=True)
class GridSpec:
    """Square phase-space lattice ``[-alpha_max, alpha_max]^2`` with spacing ``step``."""

    alpha_max: float = 3.4
    step: float = 0.085

    def __post_init__(self):
        if not (self.alpha_max > 0 and self.step > 0):
            raise ValueError("grid extent and step must be positive")
        ratio = 2 * self.alpha_max / self.step
        if abs(ratio - round(ratio)) > 1e-6:
            raise ValueError("grid extent must be a whole number of steps")

    @property
    def size(self):
        return int(round(2 * self.alpha_max / self.step)) + 1

    @property
    def axis(self):
        return np.linspace(-self.alpha_max, self.alpha_max, self.size)

    @property
    def area(self):
        return self.step ** 2

    def alphas(self):
        """Complex lattice; ``[i, j]`` is ``axis[j] + 1j * axis[i]``."""
        x = self.axis
        return x[None, :] + 1j * x[:, None]


@dataclass
class WignerGrid:
    """Four joint Wigner channels on a lattice.

    ``values[c]`` holds channel ``CHANNELS[c]`` with rows along Im(alpha).
    ``shots`` is the number of shots per point and per channel (0 = exact);
    ``stderr`` carries the per-point standard errors of sampled grids.
    """

    spec: GridSpec
    values: np.ndarray
    shots: int = 0
    stderr: np.ndarray = field(default=None, repr=False)

    def channel(self, name):
        return self.values[CHANNELS.index(name)]

    @property
    def visibility(self):
        return visibility_from_wigner(self)

    def normalized(self):
        """Copy divided by its visibility, as required by the overlap functionals."""
        v = self.visibility
        if not v > 0:
            raise ValueError("grid has non-positive visibility")
        err = None if self.stderr is None else self.stderr / v
        return replace(self, values=self.values / v, stderr=err)

    def interpolate(self, alphas):
        """Cubic-spline values of all four channels at arbitrary points."""
        alphas = np.asarray(alphas, dtype=complex)
        x = self.spec.axis
        out = np.empty((4,) + alphas.shape)
        for c in range(4):
            spline = RectBivariateSpline(x, x, self.values[c], kx=3, ky=3)
            out[c] = spline.ev(alphas.imag, alphas.real)
        return out


def _check_support(grid):
    mass = visibility_from_wigner(grid)
    if abs(1 - mass) > 0.01:
        warnings.warn(f"Wigner mass on the grid is {mass:.4f}; state not contained in "
                      f"+/-{grid.spec.alpha_max}", RuntimeWarning, stacklevel=3)


def joint_wigner_exact(state, spec=None, warn=True):
    """Ideal joint Wigner function from operator expectations."""
    spec = spec or GridSpec()
    comps = hs.pauli_components(state)
    vals = (2 / math.pi) * hs.parity_expectations(comps, spec.alphas()).real
    grid = WignerGrid(spec, vals)
    if warn:
        _check_support(grid)
    return grid


def _grid_settings():
    # 3 measurement axes x 4 sign permutations; alpha is supplied per point
    return [pr.DetectorSetting(ax, qs, rs) for ax in "XYZ" for qs in (1, -1) for rs in (1, -1)]


def _setting_distributions(state, spec, noise, chi):
    settings = _grid_settings()
    p = pr.reading_distributions(state, settings, noise, chi, alphas=spec.alphas())
    return settings, p


def joint_wigner_expected(state, spec=None, noise=None, chi=pr.CHI_DEFAULT):
    """Infinite-shot limit of the measured (unnormalized) grid under ``noise``.

    ``W_X, W_Y, W_Z`` are the permutation-averaged correlations of each
    measurement axis, ``W_I`` the permutation-averaged parity values of the
    ``Z`` runs with the qubit reading ignored.
    """
    spec = spec or GridSpec()
    settings, p = _setting_distributions(state, spec, noise, chi)
    vals = np.zeros((4,) + p.shape[1:-2])
    for s, dist in zip(settings, p):
        c = 1 + "XYZ".index(s.axis)
        vals[c] += pr.correlation_from_distribution(dist, s) / 4
        if s.axis == "Z":
            vals[0] += pr.cavity_mean_from_distribution(dist, s) / 4
    return WignerGrid(spec, (2 / math.pi) * vals)


def joint_wigner_sampled(state, spec=None, shots_per_point=4000, noise=None, seed=0,
                         chi=pr.CHI_DEFAULT, chunk=512):
    """Monte-Carlo joint Wigner grid with ``shots_per_point`` shots per channel.

    The shots of every point are split evenly over the four detector-setting
    permutations. Each setting owns the random stream ``(seed, setting)``,
    in which point ``k`` and shot ``s`` use a fixed pair of uniforms, so the
    result is independent of chunking and evaluation order.
    """
    spec = spec or GridSpec()
    if shots_per_point < 4 or shots_per_point % 4:
        raise ValueError("shots_per_point must be a positive multiple of 4")
    per = shots_per_point // 4
    settings, p = _setting_distributions(state, spec, noise, chi)
    npts = spec.size ** 2
    sums = np.zeros((4, npts))
    for k, (s, dist) in enumerate(zip(settings, p)):
        dist = dist.reshape(npts, 2, 2)
        rng = pr.shot_rng(seed, k)
        c = 1 + "XYZ".index(s.axis)
        for start in range(0, npts, chunk):
            stop = min(npts, start + chunk)
            u = rng.random((stop - start, per, 2))
            q, r = pr._readings_from_uniforms(dist[start:stop], u)
            vq = s.qubit_sign * q.astype(np.int32)
            vc = s.ramsey_sign * r.astype(np.int32)
            corr = (vq * vc).sum(axis=1)
            sums[c, start:stop] += corr
            if s.axis == "Z":
                vcs = vc.sum(axis=1)
                sums[0, start:stop] += vcs
    mean = sums / shots_per_point
    # +/-1 samples: variance of the mean is (1 - mean^2) / N
    err = np.sqrt(np.clip(1 - mean ** 2, 0, None) / shots_per_point)
    shape = (4, spec.size, spec.size)
    return WignerGrid(spec, (2 / math.pi) * mean.reshape(shape), shots_per_point,
                      (2 / math.pi) * err.reshape(shape))


def visibility_from_wigner(grid):
    """``int W_I d^2 alpha`` of an unnormalized grid (Riemann sum)."""
    return float(grid.values[0].sum() * grid.spec.area)


def overlap(grid_a, grid_b):
    """``(pi/2) sum_i int W_i^a W_i^b d^2 alpha``."""
    if grid_a.spec != grid_b.spec:
        raise ValueError("grids are on different lattices")
    return float((math.pi / 2) * np.sum(grid_a.values * grid_b.values) * grid_a.spec.area)


def fidelity_from_wigner(grid, target):
    """Overlap fidelity of a (normalized) measured grid with a pure target state."""
    target_grid = target if isinstance(target, WignerGrid) else joint_wigner_exact(
        target, grid.spec, warn=False)
    return overlap(grid, target_grid)


@dataclass(frozen=True)
class ParityPoints:
    """Cavity observable ``c_id * 1 + sum_k c_k P_{alpha_k}``.

    Displaced parities have singular phase-space kernels, so their overlap
    with a grid reduces to point evaluations of the Wigner channels.
    """

    terms: tuple = ()
    identity: float = 0.0

    def matrix(self, n_cav):
        out = self.identity * np.eye(n_cav, dtype=complex)
        for alpha, coef in self.terms:
            out = out + coef * hs.displaced_parity(alpha, n_cav)
        return out


def observable_from_wigner(grid, qubit_op, cavity_op):
    """``<A (x) B>`` from the overlap ``sum_i int Tr[A sigma_i] Tr[B P_alpha] W_i``.

    ``cavity_op`` is ``None`` for the identity, a :class:`ParityPoints`, or a
    bounded Fock-basis matrix whose kernel ``Tr[B P_alpha]`` decays inside
    the grid.
    """
    a = np.asarray(qubit_op, dtype=complex)
    coef = np.array([np.trace(a @ hs.PAULIS[k]) for k in CHANNELS])
    if cavity_op is None:
        cavity_op = ParityPoints(identity=1.0)
    if isinstance(cavity_op, ParityPoints):
        # Tr[1 P_alpha] = 1/2 and Tr[P_b P_alpha] = (pi/4) delta^2(alpha - b)
        total = coef[0] * cavity_op.identity * 0.5 * visibility_from_wigner(grid)
        if cavity_op.terms:
            pts = np.array([t[0] for t in cavity_op.terms], dtype=complex)
            w = grid.interpolate(pts)
            for k, (_, c) in enumerate(cavity_op.terms):
                total += (math.pi / 4) * c * np.dot(coef, w[:, k])
        return float(np.real(total))
    b = np.asarray(cavity_op, dtype=complex)
    kern = hs.parity_expectations(b, grid.spec.alphas())
    return float(np.real(np.sum(coef[:, None, None] * kern[None] * grid.values)
                         * grid.spec.area))


# ---------------------------------------------------------------------------
# reconstruction

@dataclass
class ReconstructionResult:
    """Least-squares density matrix fitted to a joint Wigner grid.

    ``rho`` is normalized to unit trace; ``scale`` is the fitted trace before
    normalization (the grid visibility). ``residuals`` are in correlation
    units, ``(pi/2) (W_measured - W_fit)``, per channel and point.
    """

    rho: np.ndarray
    scale: float
    residuals: np.ndarray
    iterations: int
    converged: bool
    cost: float
    fidelity: float = None
    ci: tuple = None

    @property
    def residual_sigma(self):
        return float(np.std(self.residuals))

    @property
    def residual_mean(self):
        return float(np.mean(self.residuals))


class _GridModel:
    # linear map rho -> predicted channels on the lattice
    def __init__(self, spec, n_max):
        self.spec = spec
        self.n = n_max
        par = hs.displaced_parities(spec.alphas().ravel(), n_max)
        # Tr[r P] = sum_jl r[j, l] P[l, j]
        self.kern = np.transpose(par, (0, 2, 1)).reshape(-1, n_max * n_max)
        s = np.linalg.norm(self.kern, 2)
        self.lipschitz = 2 * (2 / math.pi) ** 2 * s ** 2 * 2

    def predict(self, rho):
        comps = hs.pauli_components(rho).reshape(4, -1)
        return (2 / math.pi) * (comps @ self.kern.T).real

    def gradient(self, resid):
        # adjoint of predict applied to 2 * resid
        # kern.conj() rows are P_alpha flattened, since P_alpha is Hermitian
        g = 2 * (2 / math.pi) * (resid @ self.kern.conj()).reshape(4, self.n, self.n)
        return sum(np.kron(hs.PAULIS[k], gi) for k, gi in zip(CHANNELS, g))


def _project_psd(m, unit_trace):
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    if unit_trace:
        # Euclidean projection of the spectrum onto the probability simplex
        u = np.sort(w)[::-1]
        css = np.cumsum(u) - 1
        k = np.nonzero(u - css / np.arange(1, u.size + 1) > 0)[0][-1]
        w = np.clip(w - css[k] / (k + 1), 0, None)
    else:
        w = np.clip(w, 0, None)
    return (v * w) @ v.conj().T


def mle_reconstruct(grid, n_max=12, fit_visibility=True, max_iter=5000, tol=1e-10,
                    target=None, rho0=None, _model=None):
    """Fit a positive density matrix to a joint Wigner grid by constrained least squares.

    Minimizes ``sum (W_fit - W)^2`` over positive semidefinite ``rho`` on
    ``2 n_max`` dimensions using accelerated projected gradient steps. With
    ``fit_visibility`` the trace is a free parameter that absorbs the
    detector contrast of unnormalized data; the returned ``rho`` is always
    trace-normalized. ``converged`` is False when the iteration cap is hit.
    """
    model = _model or _GridModel(grid.spec, n_max)
    meas = grid.values.reshape(4, -1)
    dim = 2 * n_max
    step = 1 / model.lipschitz
    if rho0 is None:
        vis = max(visibility_from_wigner(grid), 1e-3) if fit_visibility else 1.0
        x = vis * np.eye(dim, dtype=complex) / dim
    else:
        x = np.asarray(rho0, dtype=complex)
    y, t = x, 1.0
    cost_prev = np.inf
    converged = False
    for it in range(1, max_iter + 1):
        resid = model.predict(y) - meas
        x_new = _project_psd(y - step * model.gradient(resid), not fit_visibility)
        t_new = 0.5 * (1 + math.sqrt(1 + 4 * t * t))
        y = x_new + ((t - 1) / t_new) * (x_new - x)
        x, t = x_new, t_new
        if it % 10 == 0:
            cost = float(np.sum((model.predict(x) - meas) ** 2))
            if cost > cost_prev:
                y, t = x, 1.0  # restart momentum
            if abs(cost_prev - cost) <= tol * max(cost, 1e-12) + 1e-14:
                converged = True
                break
            cost_prev = cost
    resid = meas - model.predict(x)
    scale = float(np.trace(x).real)
    rho = x / scale
    res = ReconstructionResult(
        rho=rho, scale=scale, residuals=(math.pi / 2) * resid.reshape(grid.values.shape),
        iterations=it, converged=converged, cost=float(np.sum(resid ** 2)))
    if target is not None:
        res.fidelity = hs.fidelity(_truncate(target, n_max), rho)
    return res


def _truncate(state, n_max):
    state = np.asarray(state, dtype=complex)
    n = hs.n_cav_of(state)
    if n == n_max:
        return state
    if n < n_max:
        raise ValueError("target truncation smaller than reconstruction space")
    if state.ndim == 1:
        v = state.reshape(2, n)[:, :n_max].ravel()
        return v / np.linalg.norm(v)
    b = state.reshape(2, n, 2, n)[:, :n_max, :, :n_max].reshape(2 * n_max, 2 * n_max)
    return b / np.trace(b).real


def bootstrap_ci(grid, target, n_resamples=20, seed=0, level=0.95, n_max=12,
                 fit_visibility=True, max_iter=2000, method="basic"):
    """Residual-bootstrap interval of the reconstruction fidelity.

    Residuals of the fit are resampled with replacement, added back to the
    fitted grid and re-reconstructed. Noise pulls the fidelity of a PSD fit
    down, so the resampled fits sit below the original one by about as much
    as the original sits below the noiseless value. ``method="basic"``
    reflects the quantiles about the estimate to correct for that shift;
    ``"percentile"`` returns the raw quantiles. Returns
    ``(fit, (low, high), samples)``.
    """
    if method not in ("basic", "percentile"):
        raise ValueError(f"unknown interval method {method!r}")
    model = _GridModel(grid.spec, n_max)
    fit = mle_reconstruct(grid, n_max, fit_visibility, max_iter=max_iter, target=target,
                          _model=model)
    resid = grid.values.reshape(4, -1) - model.predict(fit.rho * fit.scale)
    base = grid.values.reshape(4, -1) - resid
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xB007]))
    flat = resid.ravel()
    fids = []
    for _ in range(n_resamples):
        draw = rng.choice(flat, size=flat.size, replace=True).reshape(resid.shape)
        g = replace(grid, values=(base + draw).reshape(grid.values.shape))
        r = mle_reconstruct(g, n_max, fit_visibility, max_iter=max_iter, target=target,
                            rho0=fit.rho * fit.scale, _model=model)
        fids.append(r.fidelity)
    fids = np.array(fids)
    lo, hi = np.percentile(fids, [50 * (1 - level), 50 * (1 + level)])
    if method == "basic":
        lo, hi = 2 * fit.fidelity - hi, 2 * fit.fidelity - lo
    fit.ci = (float(lo), float(hi))
    return fit, fit.ci, fids
