"""Linear acoustics, compressible Euler, and their numerical fluxes.

Every flux object used by the solver exposes

* ``m`` and ``names``
* ``flux(q, axis)``: physical flux, ``q`` of shape ``(..., m)``
* ``numerical_flux(qL, qR, axis)``
* ``max_speed(q)``: largest signal speed over all states in ``q``
"""

from dataclasses import dataclass, field

import numpy as np

from dgstat.errors import ConfigurationError, StateError

ACOUSTIC_JX = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
ACOUSTIC_JY = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]])

LINEAR_FLUX_KINDS = ("upwind", "rusanov", "central", "lowmach")
EULER_FLUX_KINDS = ("rusanov", "roe", "lowmach")

_ACOUSTIC_DIFFUSION = {
    "upwind": (np.diag([1.0, 0.0, 1.0]), np.diag([0.0, 1.0, 1.0])),
    "rusanov": (np.eye(3), np.eye(3)),
    # pressure diffusion only; the pure central kernel already has constant pressure
    "central": (np.diag([0.0, 0.0, 1.0]), np.diag([0.0, 0.0, 1.0])),
    "lowmach": (
        np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 2.0]]),
        np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 2.0]]),
    ),
}


@dataclass(frozen=True)
class LinearModel:
    """Linear hyperbolic system ``q_t + J_x q_x + J_y q_y = 0``."""

    jx: np.ndarray = field(repr=False)
    jy: np.ndarray = field(repr=False)
    names: tuple = ()

    @property
    def m(self):
        return self.jx.shape[0]

    def symbol(self, kx, ky):
        return self.jx * kx + self.jy * ky


def acoustics():
    return LinearModel(jx=ACOUSTIC_JX.copy(), jy=ACOUSTIC_JY.copy(), names=("u", "v", "p"))


@dataclass(frozen=True)
class FluxMatrices:
    kind: str
    dx: np.ndarray = field(repr=False)
    dy: np.ndarray = field(repr=False)


def acoustic_flux_matrices(kind):
    try:
        dx, dy = _ACOUSTIC_DIFFUSION[kind]
    except KeyError:
        raise ConfigurationError(
            f"unknown acoustic flux {kind!r}; expected one of {LINEAR_FLUX_KINDS}"
        ) from None
    return FluxMatrices(kind=kind, dx=dx.copy(), dy=dy.copy())


def numerical_flux_linear(qL, qR, J, D):
    """``J (qL + qR)/2 - D (qR - qL)/2``, vectorized over leading axes."""
    qL = np.asarray(qL)
    qR = np.asarray(qR)
    return 0.5 * ((qL + qR) @ J.T) - 0.5 * ((qR - qL) @ D.T)


class LinearSystem:
    """A linear model paired with diffusion matrices, in the solver's flux interface."""

    def __init__(self, model, flux):
        self.model = model
        self.flux_matrices = flux
        self.kind = flux.kind
        self.m = model.m
        self.names = model.names
        self._J = (model.jx, model.jy)
        self._D = (flux.dx, flux.dy)

    def flux(self, q, axis):
        return q @ self._J[axis].T

    def numerical_flux(self, qL, qR, axis):
        return numerical_flux_linear(qL, qR, self._J[axis], self._D[axis])

    def max_speed(self, q=None):
        speeds = [np.abs(np.linalg.eigvals(J)).max() for J in self._J]
        return float(max(speeds))


def acoustic_system(kind):
    return LinearSystem(acoustics(), acoustic_flux_matrices(kind))


# --------------------------------------------------------------------------
# Euler

# swaps the two momentum components so y-direction fluxes reuse x-direction code
_SWAP = np.array([0, 2, 1, 3])


def _check_physical(rho, p, what="state"):
    bad = ~((rho > 0) & (p > 0))
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise StateError(f"non-physical {what}: rho and p must be positive", index=idx)


def cons_to_prim(q, gamma=1.4, check=True):
    """``(rho, rho u, rho v, e)`` -> ``(rho, u, v, p)`` along the last axis."""
    q = np.asarray(q, dtype=float)
    rho = q[..., 0]
    if check and np.any(rho <= 0):
        _check_physical(rho, np.ones_like(rho))
    u = q[..., 1] / rho
    v = q[..., 2] / rho
    p = (gamma - 1.0) * (q[..., 3] - 0.5 * rho * (u * u + v * v))
    if check:
        _check_physical(rho, p)
    return np.stack([rho, u, v, p], axis=-1)


def prim_to_cons(w, gamma=1.4):
    w = np.asarray(w, dtype=float)
    rho, u, v, p = w[..., 0], w[..., 1], w[..., 2], w[..., 3]
    if np.any(rho <= 0) or np.any(p <= 0):
        _check_physical(rho, p)
    e = p / (gamma - 1.0) + 0.5 * rho * (u * u + v * v)
    return np.stack([rho, rho * u, rho * v, e], axis=-1)


def _flux_x_prim(w, e):
    rho, u, v, p = w[..., 0], w[..., 1], w[..., 2], w[..., 3]
    mx = rho * u
    return np.stack([mx, mx * u + p, mx * v, u * (e + p)], axis=-1)


def euler_physical_flux(q, axis, gamma=1.4):
    q = np.asarray(q, dtype=float)
    if axis == 1:
        return euler_physical_flux(q[..., _SWAP], 0, gamma)[..., _SWAP]
    w = cons_to_prim(q, gamma)
    return _flux_x_prim(w, q[..., 3])


def sound_speed(w, gamma=1.4):
    return np.sqrt(gamma * w[..., 3] / w[..., 0])


def roe_average(qL, qR, gamma=1.4, wL=None, wR=None):
    """Roe-averaged ``(rho, u, v, H, c)`` for the x-direction."""
    wL = cons_to_prim(qL, gamma) if wL is None else wL
    wR = cons_to_prim(qR, gamma) if wR is None else wR
    sL = np.sqrt(wL[..., 0])
    sR = np.sqrt(wR[..., 0])
    HL = (qL[..., 3] + wL[..., 3]) / wL[..., 0]
    HR = (qR[..., 3] + wR[..., 3]) / wR[..., 0]
    wt = 1.0 / (sL + sR)
    u = (sL * wL[..., 1] + sR * wR[..., 1]) * wt
    v = (sL * wL[..., 2] + sR * wR[..., 2]) * wt
    H = (sL * HL + sR * HR) * wt
    c2 = (gamma - 1.0) * (H - 0.5 * (u * u + v * v))
    if np.any(c2 <= 0):
        idx = tuple(int(i) for i in np.argwhere(c2 <= 0)[0])
        raise StateError("Roe average has non-positive sound speed squared", index=idx)
    return sL * sR, u, v, H, np.sqrt(c2)


def roe_eigensystem(rho, u, v, H, c):
    """Eigenvalues ``(..., 4)`` and right eigenvectors ``(..., 4, 4)`` (columns) of A_x."""
    one = np.ones_like(u)
    zero = np.zeros_like(u)
    lam = np.stack([u - c, u, u, u + c], axis=-1)
    r1 = np.stack([one, u - c, v, H - u * c], axis=-1)
    r2 = np.stack([one, u, v, 0.5 * (u * u + v * v)], axis=-1)
    r3 = np.stack([zero, zero, one, v], axis=-1)
    r4 = np.stack([one, u + c, v, H + u * c], axis=-1)
    return lam, np.stack([r1, r2, r3, r4], axis=-1)


def _roe_dissipation_x(qL, qR, gamma, wL=None, wR=None):
    """``|A(q_roe)| (qR - qL)`` written as a sum over waves."""
    wL = cons_to_prim(qL, gamma) if wL is None else wL
    wR = cons_to_prim(qR, gamma) if wR is None else wR
    rho, u, v, H, c = roe_average(qL, qR, gamma, wL, wR)
    drho = wR[..., 0] - wL[..., 0]
    du = wR[..., 1] - wL[..., 1]
    dv = wR[..., 2] - wL[..., 2]
    dp = wR[..., 3] - wL[..., 3]
    c2 = c * c
    a1 = (dp - rho * c * du) / (2.0 * c2)
    a2 = drho - dp / c2
    a3 = rho * dv
    a4 = (dp + rho * c * du) / (2.0 * c2)
    s1 = np.abs(u - c) * a1
    s2 = np.abs(u) * a2
    s3 = np.abs(u) * a3
    s4 = np.abs(u + c) * a4
    # columns of roe_eigensystem weighted by |lambda_k| a_k
    out = np.empty(np.shape(qL))
    out[..., 0] = s1 + s2 + s4
    out[..., 1] = s1 * (u - c) + s2 * u + s4 * (u + c)
    out[..., 2] = (s1 + s2 + s4) * v + s3
    out[..., 3] = s1 * (H - u * c) + s2 * 0.5 * (u * u + v * v) + s3 * v + s4 * (H + u * c)
    return out


def roe_abs_matrix(qL, qR, axis=0, gamma=1.4):
    """Dense ``R |Lambda| R^-1`` at the Roe average (for checks, not the hot path)."""
    qL = np.asarray(qL, dtype=float)
    qR = np.asarray(qR, dtype=float)
    if axis == 1:
        P = np.eye(4)[_SWAP]
        return P.T @ roe_abs_matrix(qL[_SWAP], qR[_SWAP], 0, gamma) @ P
    lam, R = roe_eigensystem(*roe_average(qL, qR, gamma))
    return R @ np.diag(np.abs(lam)) @ np.linalg.inv(R)


def euler_jacobian(q, axis=0, gamma=1.4):
    """Flux Jacobian dF/dq at a single conservative state."""
    q = np.asarray(q, dtype=float)
    if axis == 1:
        P = np.eye(4)[_SWAP]
        return P.T @ euler_jacobian(q[_SWAP], 0, gamma) @ P
    rho, u, v, p = cons_to_prim(q, gamma)
    g1 = gamma - 1.0
    H = (q[3] + p) / rho
    k = 0.5 * (u * u + v * v)
    return np.array(
        [
            [0.0, 1.0, 0.0, 0.0],
            [g1 * k - u * u, (3.0 - gamma) * u, -g1 * v, g1],
            [-u * v, v, u, 0.0],
            [u * (g1 * k - H), H - g1 * u * u, -g1 * u * v, gamma * u],
        ]
    )


def lowmach_diffusion_matrix(w, f=0.1, gamma=1.4, axis=0):
    """Primitive-variable diffusion matrix of the low-Mach flux at state ``w``."""
    rho, u, v, p = w
    c = np.sqrt(gamma * p / rho)
    speed = np.hypot(u, v)
    Dx = np.array(
        [
            [abs(u) + f, -1.0, 0.0, 0.0],
            [0.0, speed + f, 0.0, 1.0],
            [0.0, 0.0, abs(u) + f, 0.0],
            [0.0, -c * c, 0.0, 2.0 * c],
        ]
    )
    if axis == 0:
        return Dx
    P = np.eye(4)[_SWAP]
    return P.T @ Dx @ P


def _lowmach_dissipation_x(qL, qR, gamma, f, wL=None, wR=None):
    wL = cons_to_prim(qL, gamma) if wL is None else wL
    wR = cons_to_prim(qR, gamma) if wR is None else wR
    w = 0.5 * (wL + wR)
    rho, u, v, p = w[..., 0], w[..., 1], w[..., 2], w[..., 3]
    c = np.sqrt(gamma * p / rho)
    g1 = gamma - 1.0
    dq = qR - qL
    # primitive jump through d(prim)/d(cons) at the mean state
    d_rho = dq[..., 0]
    d_u = (dq[..., 1] - u * d_rho) / rho
    d_v = (dq[..., 2] - v * d_rho) / rho
    d_p = g1 * (0.5 * (u * u + v * v) * d_rho - u * dq[..., 1] - v * dq[..., 2] + dq[..., 3])
    # D_prim applied to the primitive jump
    r_rho = (np.abs(u) + f) * d_rho - d_u
    r_u = (np.hypot(u, v) + f) * d_u + d_p
    r_v = (np.abs(u) + f) * d_v
    r_p = -c * c * d_u + 2.0 * c * d_p
    # back to conservative through d(cons)/d(prim)
    return np.stack(
        [
            r_rho,
            u * r_rho + rho * r_u,
            v * r_rho + rho * r_v,
            0.5 * (u * u + v * v) * r_rho + rho * u * r_u + rho * v * r_v + r_p / g1,
        ],
        axis=-1,
    )


def euler_numerical_flux(qL, qR, axis, kind="rusanov", gamma=1.4, f=0.1):
    qL = np.asarray(qL, dtype=float)
    qR = np.asarray(qR, dtype=float)
    if axis == 1:
        return euler_numerical_flux(qL[..., _SWAP], qR[..., _SWAP], 0, kind, gamma, f)[..., _SWAP]
    wL = cons_to_prim(qL, gamma)
    wR = cons_to_prim(qR, gamma)
    central = 0.5 * (_flux_x_prim(wL, qL[..., 3]) + _flux_x_prim(wR, qR[..., 3]))
    if kind == "rusanov":
        lam = np.maximum(
            np.abs(wL[..., 1]) + sound_speed(wL, gamma), np.abs(wR[..., 1]) + sound_speed(wR, gamma)
        )
        return central - 0.5 * lam[..., None] * (qR - qL)
    if kind == "roe":
        return central - 0.5 * _roe_dissipation_x(qL, qR, gamma, wL, wR)
    if kind == "lowmach":
        return central - 0.5 * _lowmach_dissipation_x(qL, qR, gamma, f, wL, wR)
    raise ConfigurationError(f"unknown Euler flux {kind!r}; expected one of {EULER_FLUX_KINDS}")


class EulerModel:
    """Unscaled compressible Euler equations in the solver's flux interface."""

    names = ("rho", "rhou", "rhov", "e")
    m = 4

    def __init__(self, kind="rusanov", gamma=1.4, f=0.1):
        if kind not in EULER_FLUX_KINDS:
            raise ConfigurationError(f"unknown Euler flux {kind!r}; expected one of {EULER_FLUX_KINDS}")
        self.kind = kind
        self.gamma = gamma
        self.f = f

    def flux(self, q, axis):
        return euler_physical_flux(q, axis, self.gamma)

    def numerical_flux(self, qL, qR, axis):
        return euler_numerical_flux(qL, qR, axis, self.kind, self.gamma, self.f)

    def max_speed(self, q):
        w = cons_to_prim(q, self.gamma)
        c = sound_speed(w, self.gamma)
        return float(max(np.max(np.abs(w[..., 1]) + c), np.max(np.abs(w[..., 2]) + c)))
