"""Semidiscrete DG residual on periodic Cartesian grids and explicit RK stepping."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from dgstat.basis import GAUSS5, cell_nodes, l2_norm_nodal, legendre_basis, project_to_dg, quadrature_values
from dgstat.errors import ConfigurationError, NumericalError
from dgstat.mesh import DGField, Grid
from dgstat.model import (
    EULER_FLUX_KINDS,
    LINEAR_FLUX_KINDS,
    EulerModel,
    FluxMatrices,
    LinearModel,
    LinearSystem,
    acoustic_flux_matrices,
    acoustic_system,
    cons_to_prim,
)

logger = logging.getLogger(__name__)

BLOWUP_LIMIT = 1e12
DEFAULT_ACOUSTIC_CFL = 0.03
DEFAULT_EULER_CFL = 0.4


def default_euler_cfl(flux, K):
    """0.4 shrunk by 1/(2K+1), and halved again for the low-Mach flux, to stay in the RK-DG stability region."""
    cfl = DEFAULT_EULER_CFL / (2 * K + 1)
    return 0.5 * cfl if flux == "lowmach" else cfl


class DGOperator:
    """Right-hand side ``dq/dt`` of the DG scheme for a given flux system.

    All volume and face integrals use the tensor 5-point Gauss rule; with the
    orthonormal basis the mass matrix is the identity.
    """

    def __init__(self, grid, basis, system, rule=GAUSS5):
        self.grid = grid
        self.basis = basis
        self.system = system
        self.rule = rule
        w = rule.weights
        self.phi = basis.values(rule.nodes)
        self.wphi = w[:, None] * self.phi
        self.wdphi = w[:, None] * basis.derivatives(rule.nodes)
        self.right = basis.right
        self.left = basis.left
        self.traces = np.stack([basis.right, basis.left])

    def nodal_values(self, c):
        return _along_b(self.phi, _along_a(self.phi, c))

    def __call__(self, c):
        sysm = self.system
        dx, dy = self.grid.dx, self.grid.dy
        cx = _along_a(self.phi, c)
        U = _along_b(self.phi, cx)

        vol = _along_a(self.wdphi.T, _along_b(self.wphi.T, sysm.flux(U, 0))) / dx
        vol += _along_a(self.wphi.T, _along_b(self.wdphi.T, sysm.flux(U, 1))) / dy

        # traces along the face quadrature nodes
        tx = _along_a(self.traces, _along_b(self.phi, c))
        ty = _along_b(self.traces, cx)
        east, west = tx[:, :, 0], tx[:, :, 1]
        north, south = ty[:, :, :, 0], ty[:, :, :, 1]

        # face (i+1/2, j) and (i, j+1/2), periodic neighbours
        fhx = sysm.numerical_flux(east, np.roll(west, -1, axis=0), 0)
        fhy = sysm.numerical_flux(north, np.roll(south, -1, axis=1), 1)
        gx = self.wphi.T @ fhx
        gy = self.wphi.T @ fhy
        r, l = self.right, self.left
        face_x = r[:, None, None] * gx[:, :, None] - l[:, None, None] * np.roll(gx, 1, axis=0)[:, :, None]
        face_y = r[:, None] * gy[:, :, :, None] - l[:, None] * np.roll(gy, 1, axis=1)[:, :, :, None]
        return vol - face_x / dx - face_y / dy

    def max_speed(self, c):
        return self.system.max_speed(self.nodal_values(c))


def _along_a(A, c):
    """Apply ``A`` to the x-degree axis of ``c[i, j, a, b, m]``."""
    nx, ny, na, nb, m = c.shape
    return (A @ c.reshape(nx, ny, na, nb * m)).reshape(nx, ny, A.shape[0], nb, m)


def _along_b(B, c):
    """Apply ``B`` to the y-degree axis of ``c[i, j, a, b, m]``."""
    return B @ c


def semidiscrete_rhs(q, model, flux=None, basis=None):
    """DG residual of a :class:`DGField`, returned as a new field.

    ``model`` is either a ready flux system (``acoustic_system(...)``,
    :class:`EulerModel`) or a :class:`LinearModel` paired with ``flux``
    (a kind name or :class:`FluxMatrices`).
    """
    if flux is not None:
        if not isinstance(model, LinearModel):
            raise ConfigurationError("a separate flux argument only applies to linear models")
        fm = flux if isinstance(flux, FluxMatrices) else acoustic_flux_matrices(flux)
        system = LinearSystem(model, fm)
    else:
        system = model
    basis = basis or legendre_basis(q.K)
    op = DGOperator(q.grid, basis, system)
    return DGField(q.grid, op(q.coeffs))


# --------------------------------------------------------------------------
# time stepping


def rk_step(q, rhs, dt, order):
    """One explicit RK step: forward Euler, Heun, Kutta's third order, classical RK4."""
    if order == 1:
        return q + dt * rhs(q)
    if order == 2:
        k1 = rhs(q)
        k2 = rhs(q + dt * k1)
        return q + 0.5 * dt * (k1 + k2)
    if order == 3:
        k1 = rhs(q)
        k2 = rhs(q + 0.5 * dt * k1)
        k3 = rhs(q - dt * k1 + 2.0 * dt * k2)
        return q + dt / 6.0 * (k1 + 4.0 * k2 + k3)
    if order == 4:
        k1 = rhs(q)
        k2 = rhs(q + 0.5 * dt * k1)
        k3 = rhs(q + 0.5 * dt * k2)
        k4 = rhs(q + dt * k3)
        return q + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    raise ConfigurationError(f"RK order must be 1, 2, 3 or 4, got {order!r}")


def rk_polynomial(z, order):
    """Stability polynomial ``sum_{j<=p} z^j / j!`` shared by all four schemes."""
    return sum(z**j / math.factorial(j) for j in range(order + 1))


def compute_dt(cfl, dx, dy, speed):
    if not speed > 0:
        raise NumericalError(f"maximum signal speed must be positive, got {speed}")
    if not cfl > 0:
        raise ConfigurationError(f"CFL must be positive, got {cfl}")
    return cfl * min(dx, dy) / speed


# --------------------------------------------------------------------------
# runs


@dataclass
class RunConfig:
    model: str = "acoustics"
    flux: str = "upwind"
    K: int = 1
    grid: Grid = field(default_factory=lambda: Grid(25, 25))
    cfl: float | None = None
    t_final: float = 1.0
    rk_order: int | None = None
    output_every: float | None = None
    gamma: float = 1.4
    f: float = 0.1

    def __post_init__(self):
        if self.model not in ("acoustics", "euler"):
            raise ConfigurationError(f"model must be 'acoustics' or 'euler', got {self.model!r}")
        kinds = LINEAR_FLUX_KINDS if self.model == "acoustics" else EULER_FLUX_KINDS
        if self.flux not in kinds:
            raise ConfigurationError(f"flux {self.flux!r} not available for {self.model}; choose from {kinds}")
        if self.cfl is None:
            self.cfl = DEFAULT_ACOUSTIC_CFL if self.model == "acoustics" else default_euler_cfl(self.flux, self.K)
        if self.rk_order is None:
            self.rk_order = default_rk_order(self.flux, self.K)
        if self.rk_order not in (1, 2, 3, 4):
            raise ConfigurationError(f"RK order must be 1..4, got {self.rk_order}")
        if not self.cfl > 0:
            raise ConfigurationError(f"CFL must be positive, got {self.cfl}")
        if not self.t_final >= 0:
            raise ConfigurationError("t_final must be non-negative")
        if self.output_every is None:
            self.output_every = self.t_final if self.t_final > 0 else 1.0
        if not self.output_every > 0:
            raise ConfigurationError("output cadence must be positive")

    def system(self):
        if self.model == "acoustics":
            return acoustic_system(self.flux)
        return EulerModel(self.flux, self.gamma, self.f)

    def output_times(self):
        n = int(round(self.t_final / self.output_every))
        if not math.isclose(n * self.output_every, self.t_final, rel_tol=1e-12, abs_tol=1e-12):
            raise ConfigurationError("t_final must be an integer multiple of the output cadence")
        return [k * self.output_every for k in range(n + 1)]


def default_rk_order(flux, K):
    """RK order matching the spatial order, and RK3 at least for the central flux."""
    order = min(K + 1, 4)
    if flux == "central":
        order = max(order, 3)
    return order


@dataclass
class RunResult:
    config: RunConfig
    times: list
    snapshots: list
    diagnostics: list
    steps: int = 0


def diagnostic_columns(m):
    cols = ["t", "l2_err_u", "l2_err_v", "l2_err_p", "norm_u", "norm_v", "norm_p"]
    return cols + [f"sum_mean_{v + 1}" for v in range(m)]


class _Diagnostics:
    def __init__(self, config, grid, basis, reference):
        self.config = config
        self.grid = grid
        self.basis = basis
        self.euler = config.model == "euler"
        self.reference = None
        if reference is not None:
            ref = np.asarray(reference(*_nodes(grid)), dtype=float)
            self.reference = cons_to_prim(ref, config.gamma)[..., 1:4] if self.euler else ref

    def observed(self, coeffs):
        vals = quadrature_values(DGField(self.grid, coeffs), self.basis)
        if self.euler:
            vals = cons_to_prim(vals, self.config.gamma)[..., 1:4]
        return vals

    def row(self, t, field_):
        vals = self.observed(field_.coeffs)
        norms = l2_norm_nodal(vals, self.grid)
        if self.reference is not None:
            errs = l2_norm_nodal(vals - self.reference, self.grid)
        else:
            errs = np.full(3, np.nan)
        out = {"t": t}
        for name, e, n in zip("uvp", errs, norms):
            out[f"l2_err_{name}"] = float(e)
            out[f"norm_{name}"] = float(n)
        for v, s in enumerate(field_.mean_sums()):
            out[f"sum_mean_{v + 1}"] = float(s)
        return out


def _nodes(grid):
    x, y = cell_nodes(grid)
    return np.broadcast_arrays(x, y)


def _check_blowup(c, t):
    if not np.all(np.isfinite(c)) or np.max(np.abs(c)) > BLOWUP_LIMIT:
        raise NumericalError(f"solution blew up (|coefficient| > {BLOWUP_LIMIT:g}) near t={t:.6g}")


def count_steps(config, speed):
    """Number of RK steps ``run`` takes at a fixed signal speed."""
    dt_max = compute_dt(config.cfl, config.grid.dx, config.grid.dy, speed)
    times = config.output_times()
    return sum(max(1, math.ceil((b - a) / dt_max - 1e-9)) for a, b in zip(times[:-1], times[1:]))


def run(config, initial, reference=None, keep_snapshots=True, method="step", progress=None):
    """Integrate ``initial`` to ``config.t_final``.

    ``initial`` is a :class:`DGField` or a callable ``q0(x, y) -> (..., m)``
    in the model's conservative variables. ``reference`` (a callable in the
    same variables) enables the L2 error columns; for Euler the error is
    measured on the primitive velocity and pressure.

    ``method="fourier"`` propagates a linear model exactly through its
    per-wavenumber amplification matrices instead of stepping cell by cell.
    """
    basis = legendre_basis(config.K)
    grid = config.grid
    system = config.system()
    if isinstance(initial, DGField):
        q = initial.copy()
    else:
        q = project_to_dg(initial, grid, basis)
    if q.K != config.K or q.m != system.m:
        raise ConfigurationError("initial field does not match the configured K / number of variables")
    op = DGOperator(grid, basis, system)
    diag = _Diagnostics(config, grid, basis, reference)

    times = config.output_times()
    snapshots = [q.copy()] if keep_snapshots else []
    rows = [diag.row(0.0, q)]
    c = q.coeffs
    steps = 0

    if method == "fourier":
        if config.model != "acoustics":
            raise ConfigurationError("fourier propagation needs a linear model")
        prop = LinearPropagator(op)
    elif method != "step":
        raise ConfigurationError(f"unknown integration method {method!r}")

    linear_dt = None
    if config.model == "acoustics":
        linear_dt = compute_dt(config.cfl, grid.dx, grid.dy, system.max_speed())

    for t0, t1 in zip(times[:-1], times[1:]):
        if linear_dt is not None:
            n = max(1, math.ceil((t1 - t0) / linear_dt - 1e-9))
            dt = (t1 - t0) / n
            if method == "fourier":
                c = prop.advance(c, dt, config.rk_order, n)
            else:
                for _ in range(n):
                    c = rk_step(c, op, dt, config.rk_order)
            steps += n
        else:
            t = t0
            while t < t1 - 1e-12 * max(1.0, t1):
                dt = compute_dt(config.cfl, grid.dx, grid.dy, op.max_speed(c))
                dt = min(dt, t1 - t)
                c = rk_step(c, op, dt, config.rk_order)
                t += dt
                steps += 1
                if steps % 200 == 0:
                    _check_blowup(c, t)
        _check_blowup(c, t1)
        field_ = DGField(grid, c)
        if keep_snapshots:
            snapshots.append(field_.copy())
        rows.append(diag.row(t1, field_))
        if progress is not None:
            progress(t1, rows[-1])
        logger.debug("t=%.6g steps=%d", t1, steps)
    return RunResult(config=config, times=times, snapshots=snapshots, diagnostics=rows, steps=steps)


class LinearPropagator:
    """Exact RK propagation of a translation-invariant linear DG operator.

    The operator's response to a unit DOF in cell (0, 0) is Fourier
    transformed over the grid, giving one ``m(K+1)^2`` square symbol per
    discrete wavenumber; an RK step is the stability polynomial of ``dt``
    times that symbol.
    """

    def __init__(self, op):
        self.op = op
        grid = op.grid
        n = op.basis.size
        m = op.system.m
        self.shape = (grid.nx, grid.ny, n, n, m)
        ndof = n * n * m
        cols = []
        for col in range(ndof):
            e = np.zeros(self.shape)
            e[0, 0].reshape(-1)[col] = 1.0
            cols.append(op(e).reshape(grid.nx, grid.ny, ndof))
        impulse = np.stack(cols, axis=-1)
        self.symbol = np.fft.fft2(impulse, axes=(0, 1))
        self._cache = {}

    def amplification(self, dt, order):
        key = (dt, order)
        if key not in self._cache:
            z = dt * self.symbol
            G = np.broadcast_to(np.eye(z.shape[-1]), z.shape).astype(complex)
            term = G.copy()
            for j in range(1, order + 1):
                term = term @ z / j
                G = G + term
            self._cache = {key: G}
        return self._cache[key]

    def advance(self, c, dt, order, nsteps):
        nx, ny = self.shape[:2]
        G = np.linalg.matrix_power(self.amplification(dt, order), nsteps)
        chat = np.fft.fft2(c.reshape(nx, ny, -1), axes=(0, 1))
        chat = np.einsum("ijab,ijb->ija", G, chat)
        return np.fft.ifft2(chat, axes=(0, 1)).real.reshape(self.shape)
