"""Initial data, error norms and the measurement protocols built on the solver."""

import math
from dataclasses import dataclass

import numpy as np

from dgstat.basis import cell_center_values, cell_nodes, l2_norm_nodal, legendre_basis, quadrature_values
from dgstat.errors import ConfigurationError
from dgstat.mesh import Grid
from dgstat.model import cons_to_prim, prim_to_cons
from dgstat.solver import RunConfig, run

LN2 = math.log(2.0)


@dataclass(frozen=True)
class GreshoSetup:
    """Gresho vortex at maximum Mach number ``eps``; unit density, peak speed 1 at r = 0.2."""

    eps: float = 1e-2
    gamma: float = 1.4
    center: tuple = (0.5, 0.5)

    def __post_init__(self):
        if not 0 < self.eps <= 1:
            raise ConfigurationError(f"eps must lie in (0, 1], got {self.eps}")

    @property
    def p0(self):
        return 1.0 / (self.gamma * self.eps**2) - 0.5

    def velocity(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r < 0.2, 5.0 * r, np.where(r < 0.4, 2.0 - 5.0 * r, 0.0))

    def pressure(self, r):
        r = np.asarray(r, dtype=float)
        rs = np.maximum(r, 0.2)  # keeps log finite in the unused branch
        mid = 4.0 * np.log(5.0 * rs) + 4.0 - 20.0 * r + 12.5 * r * r
        return self.p0 + np.where(r < 0.2, 12.5 * r * r, np.where(r < 0.4, mid, 4.0 * LN2 - 2.0))

    def primitive(self, x, y):
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        r = np.hypot(dx, dy)
        vphi = self.velocity(r)
        safe = np.where(r > 0, r, 1.0)
        u = np.where(r > 0, -vphi * dy / safe, 0.0)
        v = np.where(r > 0, vphi * dx / safe, 0.0)
        return np.stack([np.ones_like(r), u, v, self.pressure(r)], axis=-1)

    def conservative(self, x, y):
        return prim_to_cons(self.primitive(x, y), self.gamma)


def gresho_initial(eps=1e-2, gamma=1.4):
    """Primitive ``(rho, u, v, p)`` of the Gresho vortex as a function of ``(x, y)``."""
    return GreshoSetup(eps, gamma).primitive


@dataclass(frozen=True)
class AcousticVortexSetup:
    w: float = 0.2
    center: tuple = (0.5, 0.5)

    def V(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r > 2 * self.w, 0.0, 0.25 * (1.0 - np.cos(np.pi * r / self.w)) ** 2)

    def __call__(self, x, y):
        dx = np.asarray(x, dtype=float) - self.center[0]
        dy = np.asarray(y, dtype=float) - self.center[1]
        r = np.hypot(dx, dy)
        safe = np.where(r > 0, r, 1.0)
        Vr = self.V(r)
        u = np.where(r > 0, -Vr * dy / safe, 0.0)
        v = np.where(r > 0, Vr * dx / safe, 0.0)
        return np.stack([u, v, np.zeros_like(r)], axis=-1)


def acoustic_vortex_initial(w=0.2):
    return AcousticVortexSetup(w)


# --------------------------------------------------------------------------
# norms


def l2_error(q, reference, basis=None, transform=None):
    """Per-variable L2 distance between a DG field and ``reference(x, y)``.

    ``transform`` maps nodal values (last axis = variables) before comparing,
    e.g. conservative to primitive variables.
    """
    basis = basis or legendre_basis(q.K)
    vals = quadrature_values(q, basis)
    if transform is not None:
        vals = transform(vals)
    x, y = np.broadcast_arrays(*cell_nodes(q.grid))
    return l2_norm_nodal(vals - np.asarray(reference(x, y)), q.grid)


def l2_norm(q, basis=None):
    basis = basis or legendre_basis(q.K)
    return l2_norm_nodal(quadrature_values(q, basis), q.grid)


def max_cell_center_speed(q, gamma=None):
    """Largest |(u, v)| over cell centres; Euler fields when ``gamma`` is given, else acoustics."""
    vals = cell_center_values(q, legendre_basis(q.K))
    if gamma is not None:
        w = cons_to_prim(vals, gamma)
        return float(np.max(np.hypot(w[..., 1], w[..., 2])))
    return float(np.max(np.hypot(vals[..., 0], vals[..., 1])))


# --------------------------------------------------------------------------
# protocols


@dataclass
class OrderCurve:
    t: np.ndarray
    order_u: np.ndarray
    order_v: np.ndarray
    order_p: np.ndarray
    order_all: np.ndarray

    columns = ("t", "order_u", "order_v", "order_p", "order_all")

    def rows(self):
        return [dict(zip(self.columns, vals)) for vals in zip(self.t, self.order_u, self.order_v, self.order_p, self.order_all)]

    def at(self, t):
        i = int(np.argmin(np.abs(self.t - t)))
        return {c: getattr(self, c)[i] for c in self.columns}


def _log2_ratio(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log2(a / b)
    out[~np.isfinite(out)] = np.nan
    return out


def _diag(run_or_rows):
    return run_or_rows.diagnostics if hasattr(run_or_rows, "diagnostics") else run_or_rows


def order_in_time(coarse, fine):
    """Pointwise log2 ratio of coarse and fine L2 errors at matching output times."""
    dc, df = _diag(coarse), _diag(fine)
    tc = np.array([r["t"] for r in dc])
    tf = np.array([r["t"] for r in df])
    if len(tc) != len(tf) or not np.allclose(tc, tf, rtol=1e-12, atol=1e-12):
        raise ConfigurationError("runs must share the same output times")

    def col(rows, name):
        return np.array([r[name] for r in rows], dtype=float)

    orders = {}
    for v in "uvp":
        orders[v] = _log2_ratio(col(dc, f"l2_err_{v}"), col(df, f"l2_err_{v}"))
    ec = np.sqrt(sum(col(dc, f"l2_err_{v}") ** 2 for v in "uvp"))
    ef = np.sqrt(sum(col(df, f"l2_err_{v}") ** 2 for v in "uvp"))
    return OrderCurve(t=tc, order_u=orders["u"], order_v=orders["v"], order_p=orders["p"], order_all=_log2_ratio(ec, ef))


def pressure_decay_series(result):
    """``(t, ||p_h||_L2)`` from an acoustics run whose pressure reference is zero."""
    rows = _diag(result)
    return np.array([r["t"] for r in rows]), np.array([r["norm_p"] for r in rows])


def convergence_run(flux, K, t_final=10.0, cadence=1.0, grids=(25, 50), cfl=0.03, rk_order=None, method="fourier", w=0.2):
    """Acoustic vortex on two grids; returns ``(coarse, fine, OrderCurve)``."""
    vortex = acoustic_vortex_initial(w)
    results = []
    for n in grids:
        cfg = RunConfig(
            model="acoustics", flux=flux, K=K, grid=Grid(n, n), cfl=cfl, t_final=t_final, rk_order=rk_order, output_every=cadence
        )
        results.append(run(cfg, vortex, reference=vortex, keep_snapshots=False, method=method))
    return results[0], results[1], order_in_time(results[0], results[1])


def gresho_run(flux, K, eps=1e-2, n=25, t_final=1.0, cfl=None, rk_order=None, gamma=1.4, cadence=None):
    setup = GreshoSetup(eps, gamma)
    cfg = RunConfig(
        model="euler",
        flux=flux,
        K=K,
        grid=Grid(n, n),
        cfl=cfl,
        t_final=t_final,
        rk_order=rk_order,
        output_every=cadence,
        gamma=gamma,
    )
    return run(cfg, setup.conservative, reference=setup.conservative)


def euler_sweep(fluxes=("rusanov", "roe"), Ks=(0, 1, 2), eps_values=(1e-1, 1e-2), n=25, t_final=1.0, cfl=None, progress=None):
    """Gresho runs over a flux / K / eps matrix, returning one summary dict per run."""
    out = []
    for flux in fluxes:
        for K in Ks:
            for eps in eps_values:
                res = gresho_run(flux, K, eps, n, t_final, cfl)
                final = res.snapshots[-1]
                row = {
                    "flux": flux,
                    "K": K,
                    "eps": eps,
                    "grid": n,
                    "t_final": t_final,
                    "steps": res.steps,
                    "max_center_speed": max_cell_center_speed(final, res.config.gamma),
                    "l2_err_u": res.diagnostics[-1]["l2_err_u"],
                    "l2_err_v": res.diagnostics[-1]["l2_err_v"],
                }
                out.append(row)
                if progress is not None:
                    progress(row)
    return out
