"""Truncated Fock-space linear algebra for a qubit coupled to one cavity mode.

Joint states live on ``C^2 (x) C^n_cav`` with basis index ``q * n_cav + n``
where ``q = 0`` is ``|g>`` and ``q = 1`` is ``|e>``. Pure states are 1-D
arrays, mixed states are square 2-D arrays; the cavity truncation is
inferred from the array shape.

The qubit convention is ``sigma_z |g> = +|g>``, so a Z outcome of +1 means
the qubit was found in the ground state.

Displacement-type operators are built in a larger workspace of dimension
``work_dimension(n_cav, |alpha|)`` and projected back onto the physical
block; the truncated exponential is only trusted far from its edge.
"""
from functools import lru_cache
import math

import numpy as np

LEAKAGE_TOL = 1e-8
MIN_WORK_DIM = 60

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": SX, "Y": SY, "Z": SZ}

# rotation axis angles for qubit_rotation(theta, phi)
X_AXIS = 0.0
Y_AXIS = np.pi / 2


class TruncationError(ValueError):
    """A state or operator does not fit inside the requested truncation."""


def destroy(n):
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def number(n):
    return np.diag(np.arange(n, dtype=float)).astype(complex)


def fock(n_cav, k):
    if not 0 <= k < n_cav:
        raise TruncationError(f"Fock level {k} outside truncation {n_cav}")
    v = np.zeros(n_cav, dtype=complex)
    v[k] = 1.0
    return v


def coherent_amplitudes(beta, n_cav):
    """Return the first ``n_cav`` Fock amplitudes of ``|beta>`` (unnormalized)."""
    c = np.empty(n_cav, dtype=complex)
    c[0] = np.exp(-abs(beta) ** 2 / 2)
    for n in range(1, n_cav):
        c[n] = c[n - 1] * beta / np.sqrt(n)
    return c


def truncation_leakage(vec):
    """Probability weight missing from a truncated cavity vector: ``1 - ||v||^2``."""
    return max(0.0, 1.0 - float(np.vdot(vec, vec).real))


def coherent_state(beta, n_cav, tol=LEAKAGE_TOL, check=True):
    """Coherent state ``|beta>`` truncated to photon numbers ``0..n_cav-1``.

    The amplitudes are the exact Poissonian ones, so the returned vector
    carries a norm slightly below one when the tail is cut. With
    ``check=True`` a :class:`TruncationError` is raised if that missing
    weight exceeds ``tol``.
    """
    if n_cav < 1:
        raise ValueError("n_cav must be >= 1")
    c = coherent_amplitudes(beta, n_cav)
    if check:
        leak = truncation_leakage(c)
        if leak > tol:
            raise TruncationError(
                f"coherent state beta={beta} leaks {leak:.3g} beyond n_cav={n_cav}"
            )
    return c


def work_dimension(n_cav, alpha_max=0.0):
    """Workspace size used to build displacements acting on ``n_cav`` levels.

    Chosen so that every Fock state below ``n_cav`` displaced by up to
    ``alpha_max`` stays well inside the workspace.
    """
    reach = math.sqrt(n_cav) + abs(alpha_max)
    return max(MIN_WORK_DIM, int(math.ceil(reach ** 2 + 8 * reach + 16)))


@lru_cache(maxsize=16)
def _generator_eigensystem(n_work):
    # i (a^dag - a) is Hermitian; its eigensystem gives exp(r (a^dag - a)) for any real r.
    a = destroy(n_work)
    h = 1j * (a.conj().T - a)
    lam, vec = np.linalg.eigh(h)
    lam.setflags(write=False)
    vec.setflags(write=False)
    return lam, vec


def _real_displacements(radii, n_work):
    """Stack of ``exp(r (a^dag - a))`` for real ``r``; each is real orthogonal."""
    lam, vec = _generator_eigensystem(n_work)
    phase = np.exp(-1j * np.outer(radii, lam))
    out = np.einsum("ij,rj,kj->rik", vec, phase, vec.conj(), optimize=True)
    return out.real


def displacement_op(alpha, n_cav, n_work=None, support=None, tol=1e-6):
    """Displacement ``D(alpha) = exp(alpha a^dag - alpha^* a)`` on ``n_cav`` levels.

    Built in a padded workspace and cut back to the physical block. If
    ``support`` is given, columns ``0..support-1`` must keep at least
    ``1 - tol`` of their norm inside the block, otherwise
    :class:`TruncationError` is raised.
    """
    if alpha == 0:
        return np.eye(n_cav, dtype=complex)
    if n_work is None:
        n_work = work_dimension(n_cav, abs(alpha))
    r, phi = abs(alpha), np.angle(alpha)
    e = _real_displacements(np.array([r]), n_work)[0]
    rot = np.exp(1j * phi * np.arange(n_work))
    d = (rot[:, None] * e * rot.conj()[None, :])[:n_cav, :n_cav]
    if support is not None:
        leak = non_unitarity(d, support)
        if leak > tol:
            raise TruncationError(
                f"displacement by {alpha} not unitary on the lowest {support} levels "
                f"(leak {leak:.3g}); raise n_cav"
            )
    return d


def non_unitarity(op, support):
    """Largest norm loss of the first ``support`` columns of a truncated operator."""
    cols = op[:, :support]
    return float(np.max(np.abs(1.0 - np.sum(np.abs(cols) ** 2, axis=0))))


def parity_op(n_cav):
    return np.diag((-1.0) ** np.arange(n_cav)).astype(complex)


def _parity_kernels(radii, n_cav, n_work):
    # block of E_r P E_r^T for each radius, E_r = exp(r (a^dag - a)) real
    e = _real_displacements(radii, n_work)[:, :n_cav, :]
    sign = (-1.0) ** np.arange(n_work)
    return np.einsum("rnw,w,rmw->rnm", e, sign, e, optimize=True)


def _radius_groups(alphas):
    flat = np.asarray(alphas, dtype=complex).ravel()
    radii = np.round(np.abs(flat), 12)
    uniq, inverse = np.unique(radii, return_inverse=True)
    return flat, uniq, inverse


def displaced_parities(alphas, n_cav, n_work=None, chunk=256):
    """Stack of displaced parity blocks ``P_alpha = D P D^dag`` for many alphas.

    Returns an array of shape ``alphas.shape + (n_cav, n_cav)``.
    """
    alphas = np.asarray(alphas, dtype=complex)
    flat, uniq, inverse = _radius_groups(alphas)
    if n_work is None:
        n_work = work_dimension(n_cav, uniq.max() if uniq.size else 0.0)
    out = np.empty((flat.size, n_cav, n_cav), dtype=complex)
    idx = np.arange(n_cav)
    for start in range(0, uniq.size, chunk):
        stop = min(start + chunk, uniq.size)
        kern = _parity_kernels(uniq[start:stop], n_cav, n_work)
        sel = np.nonzero((inverse >= start) & (inverse < stop))[0]
        u = np.exp(1j * np.outer(np.angle(flat[sel]), idx))
        out[sel] = u[:, :, None] * kern[inverse[sel] - start] * u.conj()[:, None, :]
    return out.reshape(alphas.shape + (n_cav, n_cav))


def displaced_parity(alpha, n_cav, n_work=None):
    """Displaced parity ``P_alpha = D_alpha P D_alpha^dag`` on ``n_cav`` levels."""
    return displaced_parities(np.array([alpha]), n_cav, n_work)[0]


def parity_expectations(ops, alphas, n_work=None, chunk=512):
    """``Tr[op P_alpha]`` for a stack of cavity operators and many alphas.

    ``ops`` has shape ``(k, n, n)`` (or ``(n, n)``); the result has shape
    ``(k,) + alphas.shape`` (or ``alphas.shape``). This is the workhorse
    behind Wigner-grid evaluation: the kernel for each distinct radius is
    computed once and rotated to every angle.
    """
    ops = np.asarray(ops, dtype=complex)
    single = ops.ndim == 2
    if single:
        ops = ops[None]
    k, n, _ = ops.shape
    alphas = np.asarray(alphas, dtype=complex)
    flat, uniq, inverse = _radius_groups(alphas)
    if n_work is None:
        n_work = work_dimension(n, uniq.max() if uniq.size else 0.0)
    result = np.empty((k, flat.size), dtype=complex)
    idx = np.arange(n)
    ops_t = ops.reshape(k, n * n)
    order = np.argsort(inverse, kind="stable")
    for start in range(0, flat.size, chunk):
        sel = order[start:start + chunk]
        r_ids, local = np.unique(inverse[sel], return_inverse=True)
        kern = _parity_kernels(uniq[r_ids], n, n_work)[local]
        u = np.exp(1j * np.outer(np.angle(flat[sel]), idx))
        # P_alpha[l, j] = u_l K[l, j] u_j^*; Tr[op P] = sum_jl op[j, l] P[l, j]
        p_t = (u.conj()[:, :, None] * np.transpose(kern, (0, 2, 1)) * u[:, None, :])
        result[:, sel] = ops_t @ p_t.reshape(len(sel), n * n).T
    result = result.reshape((k,) + alphas.shape)
    return result[0] if single else result


def qubit_rotation(theta, phi):
    """Qubit rotation by ``theta`` about the equatorial axis at angle ``phi``.

    ``phi = 0`` is the x axis and ``phi = pi/2`` the y axis, so
    ``qubit_rotation(pi/2, Y_AXIS)`` takes ``|g>`` to ``(|g> + |e>)/sqrt(2)``.
    """
    n_sigma = np.cos(phi) * SX + np.sin(phi) * SY
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * n_sigma


def embed(qubit_op, cavity_op):
    """Tensor product ``qubit_op (x) cavity_op`` in the joint basis ordering."""
    return np.kron(qubit_op, cavity_op)


def n_cav_of(state):
    dim = state.shape[0]
    if dim % 2:
        raise ValueError(f"joint state dimension {dim} is odd")
    return dim // 2


def is_pure(state):
    return state.ndim == 1


def to_density(state):
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return np.outer(state, state.conj())
    return state


def joint_state(qubit_vec, cavity_vec):
    return np.kron(np.asarray(qubit_vec, dtype=complex), np.asarray(cavity_vec, dtype=complex))


def expectation(state, op):
    """Expectation value of ``op``; real for Hermitian operators."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        val = np.vdot(state, op @ state)
    else:
        val = np.trace(op @ state)
    if np.allclose(op, op.conj().T, atol=1e-12):
        return float(val.real)
    return complex(val)


def partial_trace(state, trace_out):
    """Reduced density matrix after tracing out ``"qubit"`` or ``"cavity"``."""
    rho = to_density(state)
    n = n_cav_of(rho)
    r = rho.reshape(2, n, 2, n)
    if trace_out == "qubit":
        return np.einsum("ajak->jk", r)
    if trace_out == "cavity":
        return np.einsum("ajbj->ab", r)
    raise ValueError(f"trace_out must be 'qubit' or 'cavity', got {trace_out!r}")


def qubit_blocks(state):
    """The four ``n x n`` blocks ``<q|rho|q'>`` of a joint density matrix, shape (2, 2, n, n)."""
    rho = to_density(state)
    n = n_cav_of(rho)
    return rho.reshape(2, n, 2, n).transpose(0, 2, 1, 3)


def pauli_components(state):
    """Cavity operators ``rho_i = Tr_q[(sigma_i (x) 1) rho]`` for i in I, X, Y, Z.

    The joint state is recovered as ``rho = 1/2 sum_i sigma_i (x) rho_i``.
    """
    b = qubit_blocks(state)
    return np.stack([np.einsum("ba,abjk->jk", PAULIS[k], b) for k in "IXYZ"])


def from_pauli_components(comps):
    return 0.5 * sum(np.kron(PAULIS[k], c) for k, c in zip("IXYZ", comps))


def purity(state):
    rho = to_density(state)
    return float(np.real(np.trace(rho @ rho)))


def normalize(state):
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return state / np.linalg.norm(state)
    return state / np.trace(state).real


def fidelity(a, b):
    """State fidelity ``F = (Tr sqrt(sqrt(a) b sqrt(a)))^2``; ``|<a|b>|^2`` for pure inputs."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 1 and b.ndim == 1:
        return float(abs(np.vdot(a, b)) ** 2)
    if a.ndim == 1:
        return float(np.vdot(a, b @ a).real)
    if b.ndim == 1:
        return float(np.vdot(b, a @ b).real)
    w, v = np.linalg.eigh(a)
    sa = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    m = sa @ b @ sa
    ev = np.linalg.eigvalsh((m + m.conj().T) / 2)
    # rounding noise on a null space would add sqrt(1e-16) per eigenvalue
    ev = np.where(ev > 1e-13 * max(ev.max(), 1e-300), ev, 0.0)
    return float(np.sum(np.sqrt(ev)) ** 2)


def check_density(rho, tol=1e-9):
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit trace and PSD within ``tol``."""
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1) > tol:
        raise ValueError(f"density matrix trace {tr} != 1")
    lo = np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()
    if lo < -tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3g}")
