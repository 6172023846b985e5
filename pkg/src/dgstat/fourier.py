"""Evolution matrices of the linear DG scheme in discrete Fourier space.

For a periodic linear scheme the Fourier amplitudes ``q^`` of the DOF obey
``dq^/dt = -E(k) q^``. Everything here works on ``E``: kernels and their
dimension over wavenumber sweeps, Fourier-mode degrees of freedom, projectors
onto the kernel and the order at which the kernel approximates the exact
stationary acoustic mode ``Q^ = (-k_y, k_x, 0)``.

DOF ordering inside ``E`` is variable-major, then x-degree, then y-degree:
``index = var * (K+1)**2 + alpha * (K+1) + beta``.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
import scipy.linalg
from scipy.special import spherical_jn

from dgstat.basis import stiffness_entry
from dgstat.errors import ConfigurationError, IndexSetError, NumericalError
from dgstat.model import FluxMatrices, acoustic_flux_matrices, acoustics

logger = logging.getLogger(__name__)

DEFAULT_TAU = 1e-9
GAP_RATIO = 1e3
SWEEP_VALUES = np.linspace(0.3, 2.9, 8)
MP_DPS = 40


@dataclass
class EvolutionMatrix:
    matrix: np.ndarray
    K: int
    flux: str
    kx: float
    ky: float
    tx: complex
    ty: complex
    dx: float
    dy: float
    m: int = 3

    @property
    def size(self):
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)


@dataclass
class KernelReport:
    singular_values: np.ndarray
    tau: float
    dim: int
    basis: np.ndarray
    ambiguous: bool = False
    gap: float = math.inf
    min_dim: int | None = None
    verdict: str | None = None
    K: int | None = None

    def residuals(self, E):
        E = np.asarray(E)
        return np.linalg.norm(E @ self.basis, axis=0)


@dataclass
class KernelSweep:
    flux: str
    K: int
    samples: list
    dims: list
    reports: list
    min_dim: int
    verdict: str
    ambiguous: bool

    def __iter__(self):
        return iter((self.min_dim, self.dims))


@dataclass(frozen=True)
class StationaryMode:
    kx: float
    ky: float

    @property
    def amplitude(self):
        return np.array([-self.ky, self.kx, 0.0])


@dataclass
class OrderFit:
    K: int
    flux: str
    dxs: np.ndarray
    distances: np.ndarray
    slope: float | None
    residual: float | None
    exact_kernel: bool = False
    local_slopes: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def order(self):
        """Steady-state accuracy order: the distance slope capped at the DG approximation order K+1."""
        if self.exact_kernel:
            return float(self.K + 1)
        return min(self.slope, float(self.K + 1))


# --------------------------------------------------------------------------
# assembly


def _flux_matrices(flux):
    if isinstance(flux, FluxMatrices):
        return flux
    return acoustic_flux_matrices(flux)


def _basis_blocks(K, mp=False):
    n = K + 1
    if mp:
        sq = [mpmath.sqrt(2 * k + 1) for k in range(n)]
        D = np.array(
            [[2 * sq[k] * sq[a] if (a < k and (k - a) % 2 == 1) else mpmath.mpf(0) for a in range(n)] for k in range(n)],
            dtype=object,
        )
        bp = np.array(sq, dtype=object)
        bm = np.array([(-1) ** k * sq[k] for k in range(n)], dtype=object)
        eye = np.array([[mpmath.mpf(int(i == j)) for j in range(n)] for i in range(n)], dtype=object)
    else:
        D = np.array([[stiffness_entry(k, a) for a in range(n)] for k in range(n)])
        bp = np.sqrt(2.0 * np.arange(n) + 1.0)
        bm = (-1.0) ** np.arange(n) * bp
        eye = np.eye(n)
    return D, bp, bm, eye


def _direction_blocks(D, bp, bm, t):
    c = (bp * t - bm) / t
    plus = (bp + t * bm) / 2
    minus = (t * bm - bp) / 2
    return -D + np.outer(c, plus), np.outer(c, minus)


def assemble_evolution_matrix(K, flux, model=None, kx=None, ky=None, dx=1.0, dy=1.0, tx=None, ty=None, precision="double"):
    """Evolution matrix of the Q^K DG scheme at one wavevector.

    Pass either wavenumbers ``kx, ky`` or the shift factors ``tx, ty``
    directly (unit-modulus complex numbers). ``precision="mp"`` builds an
    object array of mpmath numbers at the current working precision.
    """
    if not (dx > 0 and dy > 0):
        raise ConfigurationError("dx and dy must be positive")
    if K < 0:
        raise ConfigurationError("K must be non-negative")
    fm = _flux_matrices(flux)
    model = model or acoustics()
    mp = precision == "mp"
    if precision not in ("double", "mp"):
        raise ConfigurationError(f"precision must be 'double' or 'mp', got {precision!r}")
    if tx is None:
        if kx is None:
            raise ConfigurationError("give kx/ky or tx/ty")
        tx = mpmath.expj(mpmath.mpf(kx) * dx) if mp else np.exp(1j * kx * dx)
    elif kx is None:
        kx = float(np.angle(complex(tx))) / dx
    if ty is None:
        if ky is None:
            raise ConfigurationError("give kx/ky or tx/ty")
        ty = mpmath.expj(mpmath.mpf(ky) * dy) if mp else np.exp(1j * ky * dy)
    elif ky is None:
        ky = float(np.angle(complex(ty))) / dy
    if mp:
        tx, ty = mpmath.mpc(tx), mpmath.mpc(ty)

    D, bp, bm, eye = _basis_blocks(K, mp)
    ax, bx = _direction_blocks(D, bp, bm, tx)
    ay, by = _direction_blocks(D, bp, bm, ty)

    def conv(A):
        if not mp:
            return np.asarray(A, dtype=float)
        return np.array([[mpmath.mpf(float(v)) for v in row] for row in np.asarray(A)], dtype=object)

    Jx, Jy, Dx, Dy = conv(model.jx), conv(model.jy), conv(fm.dx), conv(fm.dy)
    ddx = mpmath.mpf(dx) if mp else dx
    ddy = mpmath.mpf(dy) if mp else dy
    E = (np.kron(Jx, np.kron(ax, eye)) - np.kron(Dx, np.kron(bx, eye))) / ddx
    E = E + (np.kron(Jy, np.kron(eye, ay)) - np.kron(Dy, np.kron(eye, by))) / ddy
    if not mp:
        E = E.astype(complex)
    return EvolutionMatrix(
        matrix=E, K=K, flux=fm.kind, kx=float(kx), ky=float(ky), tx=complex(tx), ty=complex(ty), dx=dx, dy=dy, m=model.m
    )


def _matrix(E):
    return E.matrix if isinstance(E, EvolutionMatrix) else E


def _is_mp(A):
    return isinstance(A, np.ndarray) and A.dtype == object


# --------------------------------------------------------------------------
# kernels


def _svd(A):
    """Singular values (descending) and right singular vectors as columns."""
    if _is_mp(A):
        M = mpmath.matrix(A.tolist())
        U, S, V = mpmath.svd_c(M)
        s = np.array([S[i] for i in range(S.rows)], dtype=object)
        Vh = np.array(V.tolist(), dtype=object)
        order = sorted(range(len(s)), key=lambda i: -s[i])
        return s[order], Vh[order].conj().T
    try:
        _, s, vh = np.linalg.svd(np.asarray(A, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    return s, vh.conj().T


def _classify(s, tau):
    n = len(s)
    smax = s[0] if n else 0
    if smax == 0:
        return n, math.inf, False
    dim = int(sum(1 for v in s if v < tau * smax))
    if dim == 0:
        gap = math.inf
        ambiguous = bool(s[-1] < GAP_RATIO * tau * smax)
    elif dim == n:
        gap = math.inf
        ambiguous = False
    else:
        last_kernel = s[n - dim]
        gap = float(s[n - dim - 1] / last_kernel) if last_kernel > 0 else math.inf
        ambiguous = gap <= GAP_RATIO
    return dim, gap, ambiguous


def null_space(E, tau=DEFAULT_TAU, dim=None):
    """SVD kernel of ``E`` with a relative threshold and gap check.

    With ``dim`` given, the last ``dim`` right singular vectors are returned
    regardless of the threshold (used when the generic dimension is known
    but a particular sample is too close to k=0 for thresholding).
    """
    A = _matrix(E)
    if not _is_mp(A) and not np.all(np.isfinite(A)):
        raise NumericalError("evolution matrix contains non-finite entries")
    s, V = _svd(A)
    found, gap, ambiguous = _classify(s, tau)
    if dim is None:
        dim = found
    n = len(s)
    basis = V[:, n - dim :] if dim else V[:, :0]
    s_out = np.array([float(v) for v in s]) if _is_mp(A) else s
    return KernelReport(singular_values=s_out, tau=tau, dim=dim, basis=basis, ambiguous=ambiguous, gap=gap)


def default_samples(dx=1.0, dy=1.0):
    """8 x 8 tensor grid of wavenumbers with k*h in [0.3, 2.9]."""
    return [(a / dx, b / dy) for a in SWEEP_VALUES for b in SWEEP_VALUES]


def stationarity_verdict(min_dim, K):
    return "stationarity preserving" if 1 <= min_dim <= (K + 1) ** 2 else "not stationarity preserving"


def kernel_dim_sweep(K, flux, samples=None, dx=1.0, dy=1.0, tau=DEFAULT_TAU):
    samples = list(samples) if samples is not None else default_samples(dx, dy)
    reports, dims = [], []
    for kx, ky in samples:
        rep = null_space(assemble_evolution_matrix(K, flux, kx=kx, ky=ky, dx=dx, dy=dy), tau)
        rep.K = K
        reports.append(rep)
        dims.append(rep.dim)
    min_dim = min(dims)
    kind = _flux_matrices(flux).kind
    return KernelSweep(
        flux=kind,
        K=K,
        samples=samples,
        dims=dims,
        reports=reports,
        min_dim=min_dim,
        verdict=stationarity_verdict(min_dim, K),
        ambiguous=any(r.ambiguous for r in reports),
    )


@lru_cache(maxsize=None)
def generic_kernel_dim(K, flux):
    """Minimum kernel dimension over the default sweep at unit spacing."""
    return kernel_dim_sweep(K, flux).min_dim


# --------------------------------------------------------------------------
# Fourier-mode degrees of freedom


def fourier_moments(K, kappa, precision="double"):
    """``int_{-1/2}^{1/2} b_a(xi) exp(i kappa xi) dxi`` for a = 0..K.

    Closed form ``sqrt(2a+1) i^a j_a(kappa/2)`` with spherical Bessel ``j_a``.
    """
    if precision == "mp":
        z = mpmath.mpf(kappa) / 2
        out = []
        for a in range(K + 1):
            if z == 0:
                ja = mpmath.mpf(1) if a == 0 else mpmath.mpf(0)
            else:
                ja = mpmath.sqrt(mpmath.pi / (2 * z)) * mpmath.besselj(a + mpmath.mpf(1) / 2, z)
            out.append(mpmath.sqrt(2 * a + 1) * mpmath.mpc(0, 1) ** a * ja)
        return np.array(out, dtype=object)
    a = np.arange(K + 1)
    return np.sqrt(2.0 * a + 1.0) * (1j**a) * spherical_jn(a, kappa / 2.0)


def dof_hat(Q, kx, ky, dx, dy, K, basis=None, precision="double"):
    """Degrees of freedom of ``Q exp(i k.x)`` on the cell centred at the origin."""
    if basis is not None and basis.K != K:
        raise ConfigurationError("basis degree does not match K")
    mx = fourier_moments(K, kx * dx, precision)
    my = fourier_moments(K, ky * dy, precision)
    if precision == "mp":
        Q = np.array([mpmath.mpf(float(v)) for v in Q], dtype=object)
    return np.kron(np.asarray(Q), np.kron(mx, my))


def alpha_factor(kx, ky, dx, dy):
    """(00) factor of dof_hat in closed form."""
    return 4.0 * math.sin(dx * kx / 2) * math.sin(dy * ky / 2) / (dx * dy * kx * ky)


class CellPolynomial:
    """``R v``: the Q^K polynomial with coefficients ``v`` on one cell centred at the origin."""

    def __init__(self, v, K, dx, dy, m=3):
        self.K = K
        self.dx = dx
        self.dy = dy
        self.m = m
        n = K + 1
        self.coeffs = np.asarray(v).reshape(m, n, n)

    def __call__(self, x, y):
        from dgstat.basis import legendre_basis

        b = legendre_basis(self.K)
        px = b.values(np.asarray(x, dtype=float) / self.dx)
        py = b.values(np.asarray(y, dtype=float) / self.dy)
        return np.einsum("...a,...b,mab->...m", px, py, self.coeffs)


def reconstruct(v, basis, dx, dy, m=3):
    return CellPolynomial(v, basis.K, dx, dy, m)


def reconstruction_error(Q, kx, ky, dx, dy, K):
    """RMS over one cell of ``R dof_hat(Q) - Q exp(i k.x)`` (Gauss quadrature, 10 points)."""
    from dgstat.basis import gauss_legendre, legendre_basis

    rule = gauss_legendre(10)
    poly = reconstruct(dof_hat(Q, kx, ky, dx, dy, K), legendre_basis(K), dx, dy, len(Q))
    X, Y = np.meshgrid(rule.nodes * dx, rule.nodes * dy, indexing="ij")
    exact = np.exp(1j * (kx * X + ky * Y))[..., None] * np.asarray(Q)
    w = np.outer(rule.weights, rule.weights)[..., None]
    return float(np.sqrt(np.sum(w * np.abs(poly(X, Y) - exact) ** 2)))


# --------------------------------------------------------------------------
# projectors and distances


class SelectiveProjector:
    """Projector onto span(kernel) that keeps the components in ``index_set`` unchanged."""

    def __init__(self, basis, index_set, max_cond=1e8):
        V = np.asarray(basis)
        idx = list(index_set)
        if len(idx) != V.shape[1]:
            raise IndexSetError(f"index set has {len(idx)} entries but the kernel has dimension {V.shape[1]}")
        A = V[idx, :]
        # V is orthonormal, so 1/sigma_min(V_I) is the norm of the projector
        smin = np.linalg.svd(A, compute_uv=False)[-1] if A.size else 1.0
        cond = 1.0 / smin if smin > 0 else math.inf
        if not np.isfinite(cond) or cond > max_cond:
            raise IndexSetError(
                f"index set {idx} is not selecting (restricted kernel basis has condition number {cond:.3g}); "
                "pick pivot rows of the kernel basis in row echelon form"
            )
        self.index_set = idx
        self.matrix = V @ np.linalg.solve(A, np.eye(V.shape[0])[idx, :]) if A.size else np.zeros((V.shape[0],) * 2)

    def __call__(self, q):
        return self.matrix @ np.asarray(q)


def selective_projector(kernel, index_set, max_cond=1e8):
    basis = kernel.basis if isinstance(kernel, KernelReport) else kernel
    return SelectiveProjector(basis, index_set, max_cond)


def distance_to_span(q, W):
    """``||(I - P) q||`` with P the orthogonal projector onto the column span of ``W``."""
    q = np.asarray(q)
    W = np.asarray(W)
    if _is_mp(W) or _is_mp(q):
        Wm = mpmath.matrix(W.tolist())
        Qm, _ = mpmath.qr(Wm, mode="skinny")
        qm = mpmath.matrix(q.tolist())
        r = qm - Qm * (Qm.H * qm)
        return float(mpmath.norm(r))
    Qo, _ = np.linalg.qr(W)
    return float(np.linalg.norm(q - Qo @ (Qo.conj().T @ q)))


def _distance_double(K, flux, kx, ky, dx, dy, dim):
    E = assemble_evolution_matrix(K, flux, kx=kx, ky=ky, dx=dx, dy=dy).matrix
    s, V = _svd(E)
    n = len(s)
    q = dof_hat(StationaryMode(kx, ky).amplitude, kx, ky, dx, dy, K)
    Vk = V[:, n - dim :]
    dist = float(np.linalg.norm(q - Vk @ (Vk.conj().T @ q)))
    # perturbation bound on the computed kernel subspace angle
    spread = s[n - dim - 1] if dim < n else s[0]
    angle = np.finfo(float).eps * s[0] * math.sqrt(n) / spread if spread > 0 else math.inf
    return dist, angle * np.linalg.norm(q)


def _distance_mp(K, flux, kx, ky, dx, dy, dim, dps):
    with mpmath.workdps(dps):
        E = assemble_evolution_matrix(K, flux, kx=kx, ky=ky, dx=dx, dy=dy, precision="mp").matrix
        s, V = _svd(E)
        n = len(s)
        q = dof_hat(StationaryMode(kx, ky).amplitude, kx, ky, dx, dy, K, precision="mp")
        Vk = V[:, n - dim :]
        Vm = mpmath.matrix(Vk.tolist())
        qm = mpmath.matrix(q.tolist())
        r = qm - Vm * (Vm.H * qm)
        return float(mpmath.norm(r))


def distance_to_kernel(K, flux, k, dx, dy=None, dim=None, precision="auto", dps=MP_DPS):
    """Distance of the stationary mode's ``dof_hat`` from the kernel of ``E``.

    ``dim`` defaults to the generic kernel dimension of (K, flux). The double
    precision result is accepted only when its subspace error estimate is far
    below the distance; otherwise the computation is repeated in mpmath.
    """
    kx, ky = k
    dy = dx if dy is None else dy
    dim = generic_kernel_dim(K, _flux_matrices(flux).kind) if dim is None else dim
    if dim == 0:
        raise NumericalError(f"{_flux_matrices(flux).kind} K={K} has an empty kernel: not stationarity preserving")
    if precision == "mp":
        return _distance_mp(K, flux, kx, ky, dx, dy, dim, dps)
    dist, err = _distance_double(K, flux, kx, ky, dx, dy, dim)
    if precision == "double" or err < 1e-4 * dist:
        return dist
    logger.info("distance at dx=%g needs extended precision (estimate %.2g vs %.2g)", dx, err, dist)
    return _distance_mp(K, flux, kx, ky, dx, dy, dim, dps)


def steady_order_fit(K, flux, k=(1.0, 0.7), dxs=None, dim=None, precision="auto"):
    """Log-log slope of ``distance_to_kernel`` against a geometric sequence of spacings."""
    dxs = np.asarray(dxs if dxs is not None else 2.0 ** -np.arange(3, 9), dtype=float)
    if len(dxs) < 4:
        raise ConfigurationError("need at least four spacings for an order fit")
    kind = _flux_matrices(flux).kind
    d = np.array([distance_to_kernel(K, flux, k, h, dim=dim, precision=precision) for h in dxs])
    if d[np.argmax(dxs)] < 1e3 * np.finfo(float).eps:
        return OrderFit(K=K, flux=kind, dxs=dxs, distances=d, slope=None, residual=None, exact_kernel=True)
    x, y = np.log(dxs), np.log(d)
    coef, res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    local = np.diff(y) / np.diff(x)
    return OrderFit(K=K, flux=kind, dxs=dxs, distances=d, slope=float(coef[0]), residual=residual, local_slopes=local)


def verify_kernel_vector(w, E):
    """Relative residual ``||E w|| / (||E||_F ||w||)``."""
    A = _matrix(E)
    w = np.asarray(w)
    if w.shape[0] != A.shape[1]:
        raise ConfigurationError(f"vector length {w.shape[0]} does not match matrix size {A.shape[1]}")
    return float(np.linalg.norm(A @ w) / (np.linalg.norm(A) * np.linalg.norm(w)))


@dataclass
class EvolutionaryProjector:
    matrix: np.ndarray
    rank: int
    method: str

    def __call__(self, q):
        return self.matrix @ np.asarray(q)


def decay_time(E, tau=DEFAULT_TAU, target=1e-10):
    """Time after which every non-kernel mode of ``exp(-E t)`` has decayed by ``target``."""
    A = np.asarray(_matrix(E), dtype=complex)
    lam = np.linalg.eigvals(A)
    scale = np.max(np.abs(lam)) if lam.size else 0.0
    rates = lam.real[np.abs(lam) >= tau * scale]
    if rates.size == 0:
        return 0.0
    slowest = rates.min()
    if slowest <= 0:
        raise NumericalError("exp(-E t) has non-decaying modes outside the kernel; no long-time limit")
    return math.log(1 / target) / slowest


def exp_limit(E, v, t_norm=50.0, t=None):
    """``exp(-E t) v`` by scaling and squaring, at ``t = t_norm / ||E||_2`` unless ``t`` is given."""
    A = _matrix(E)
    if t is None:
        t = t_norm / np.linalg.norm(A, 2)
    return scipy.linalg.expm(-t * A) @ np.asarray(v)


def evolutionary_projector(E, tau=DEFAULT_TAU, max_cond=1e8):
    """Spectral projector onto the zero-eigenvalue eigenspace of ``E``."""
    A = np.asarray(_matrix(E), dtype=complex)
    n = A.shape[0]
    lam, V = np.linalg.eig(A)
    scale = np.max(np.abs(lam)) if n else 0.0
    zero = np.abs(lam) < tau * scale if scale > 0 else np.ones(n, bool)
    if not zero.any():
        return EvolutionaryProjector(np.zeros((n, n), complex), 0, "eigen")
    cond = np.linalg.cond(V)
    if np.isfinite(cond) and cond < max_cond:
        W = np.linalg.inv(V)
        P = V[:, zero] @ W[zero, :]
        return EvolutionaryProjector(P, int(zero.sum()), "eigen")
    warnings.warn(f"eigenbasis ill-conditioned (cond {cond:.3g}); using the matrix exponential limit", RuntimeWarning)
    t = max(50.0 / np.linalg.norm(A, 2), decay_time(A, tau))
    P = exp_limit(A, np.eye(n), t=t)
    return EvolutionaryProjector(P, int(round(np.real(np.trace(P)))), "expm")
