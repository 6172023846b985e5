import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgstat.basis import gauss_legendre, legendre_basis, project_to_dg
from dgstat.errors import ConfigurationError
from dgstat.experiments import (
    AcousticVortexSetup,
    GreshoSetup,
    acoustic_vortex_initial,
    gresho_initial,
    gresho_run,
    l2_error,
    l2_norm,
    max_cell_center_speed,
    order_in_time,
    pressure_decay_series,
)
from dgstat.mesh import DGField, Grid
from dgstat.solver import RunConfig, run, semidiscrete_rhs
from dgstat.model import acoustics


def rows(errs, t=(0.0, 1.0)):
    return [{"t": ti, "l2_err_u": e, "l2_err_v": e, "l2_err_p": e} for ti, e in zip(t, errs)]


def test_gresho_profile_values():
    g = GreshoSetup(1e-2)
    assert g.p0 == pytest.approx(7142.357, abs=1e-3)
    assert g.velocity(0.0) == 0.0 and g.pressure(0.0) == pytest.approx(g.p0, abs=1e-12)
    assert g.velocity(0.2) == pytest.approx(1.0) and g.pressure(0.2) == pytest.approx(g.p0 + 0.5, abs=1e-10)
    assert g.velocity(0.4) == pytest.approx(0.0, abs=1e-14)
    assert g.pressure(0.4) == pytest.approx(g.p0 + 4 * math.log(2) - 2, abs=1e-10)


@pytest.mark.parametrize("r0", [0.2, 0.4])
def test_gresho_profiles_continuous(r0):
    g = GreshoSetup(0.1)
    d = 1e-12
    assert abs(g.velocity(r0 - d) - g.velocity(r0 + d)) < 1e-10
    assert abs(g.pressure(r0 - d) - g.pressure(r0 + d)) < 1e-9


def test_gresho_radial_balance():
    # dp/dr written out per branch; must equal rho * vphi^2 / r with rho = 1
    g = GreshoSetup(1e-2)
    r = np.random.default_rng(0).uniform(1e-3, 0.8, 1000)
    dpdr = np.where(r < 0.2, 25 * r, np.where(r < 0.4, 4 / r - 20 + 25 * r, 0.0))
    np.testing.assert_allclose(g.velocity(r) ** 2 / r, dpdr, atol=1e-12, rtol=1e-12)
    # and the pressure profile integrates it
    h = 1e-6
    fd = (g.pressure(r + h) - g.pressure(r - h)) / (2 * h)
    away = np.abs(r - 0.2) > 2 * h
    away &= np.abs(r - 0.4) > 2 * h
    np.testing.assert_allclose(fd[away], dpdr[away], atol=1e-4)


def test_gresho_primitive_field():
    w = gresho_initial(0.1)(np.array([0.7]), np.array([0.5]))[0]
    assert w[0] == 1.0 and w[1] == pytest.approx(0.0, abs=1e-15) and w[2] == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        GreshoSetup(0.0)


def test_gresho_max_mach():
    g = GreshoSetup(1e-2)
    r = np.linspace(0, 0.6, 601)
    c = np.sqrt(g.gamma * g.pressure(r))
    assert np.max(g.velocity(r) / c) == pytest.approx(1e-2, rel=1e-3)


def test_vortex_profile():
    v = AcousticVortexSetup()
    assert v.V(0.2) == pytest.approx(1.0)
    assert v.V(0.4) == pytest.approx(0.0, abs=1e-15)
    out = acoustic_vortex_initial()(np.array([0.95, 0.5, 0.5]), np.array([0.5, 0.91, 0.7]))
    np.testing.assert_array_equal(out[:2], 0.0)
    assert out[2, 0] == pytest.approx(-1.0)


def test_vortex_divergence_free():
    f = acoustic_vortex_initial()
    rule = gauss_legendre(10)
    n = 40
    x = ((np.arange(n)[:, None] + 0.5 + rule.nodes) / n).ravel()
    X, Y = np.meshgrid(x, x, indexing="ij")
    h = 1e-5
    div = (f(X + h, Y)[..., 0] - f(X - h, Y)[..., 0] + f(X, Y + h)[..., 1] - f(X, Y - h)[..., 1]) / (2 * h)
    w = np.tile(rule.weights, n) / n
    assert np.sum(np.outer(w, w) * np.abs(div)) < 1e-8


def test_vortex_is_acoustic_steady_state_under_central_flux():
    # a single rhs evaluation only sees the discretisation error, which shrinks at order >= K
    K = 3
    vortex = acoustic_vortex_initial()
    norms = []
    for n in (64, 128):
        g = Grid(n, n)
        q = project_to_dg(vortex, g, legendre_basis(K))
        norms.append(np.linalg.norm(l2_norm(semidiscrete_rhs(q, acoustics(), "central"))))
    assert math.log2(norms[0] / norms[1]) >= K - 0.1


def test_l2_error_of_projected_polynomial_is_zero():
    g = Grid(4, 4)

    def poly(x, y):
        return np.stack([x**2 - y, 3 * x * y, np.ones_like(x)], -1)

    assert np.max(l2_error(project_to_dg(poly, g, legendre_basis(2)), poly)) < 1e-14


def test_l2_error_matches_refined_quadrature():
    g = Grid(25, 25)
    zero = DGField(g, np.zeros((25, 25, 1, 1, 3)))
    vortex = acoustic_vortex_initial()
    coarse = l2_error(zero, vortex)
    rule = gauss_legendre(10)
    n = 250
    x = ((np.arange(n)[:, None] + 0.5 + rule.nodes) / n).ravel()
    X, Y = np.meshgrid(x, x, indexing="ij")
    w = np.tile(rule.weights, n) / n
    fine = np.sqrt(np.einsum("i,j,ijm->m", w, w, vortex(X, Y) ** 2))
    np.testing.assert_allclose(coarse, fine, atol=1e-8)
    assert coarse[2] == 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2), st.integers(0, 10_000))
def test_l2_error_pythagoras(K, seed):
    # the projection error is orthogonal to every DG function
    g = Grid(6, 6)
    f = acoustic_vortex_initial()
    q = project_to_dg(f, g, legendre_basis(K))
    phi = DGField(g, np.random.default_rng(seed).normal(size=q.coeffs.shape))
    lhs = l2_error(DGField(g, q.coeffs + phi.coeffs), f) ** 2
    rhs = l2_error(q, f) ** 2 + l2_norm(phi) ** 2
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10)


def test_order_in_time_examples():
    curve = order_in_time(rows([0.02, 0.02]), rows([0.005, 0.01]))
    np.testing.assert_allclose(curve.order_u, [2.0, 1.0])
    np.testing.assert_allclose(curve.order_all, [2.0, 1.0])
    assert curve.at(1.0)["order_v"] == pytest.approx(1.0)


def test_order_in_time_undefined_sample():
    curve = order_in_time(rows([0.0, 0.02]), rows([0.0, 0.01]))
    assert math.isnan(curve.order_p[0]) and curve.order_p[1] == pytest.approx(1.0)


def test_order_in_time_needs_matching_times():
    with pytest.raises(ConfigurationError):
        order_in_time(rows([1, 1]), rows([1, 1], t=(0.0, 2.0)))


@given(st.floats(1e-8, 1.0), st.floats(1e-8, 1.0), st.floats(1e-6, 1e6))
def test_order_in_time_scale_invariant(a, b, s):
    c1 = order_in_time(rows([a, a]), rows([b, b]))
    c2 = order_in_time(rows([s * a, s * a]), rows([s * b, s * b]))
    np.testing.assert_allclose(c1.order_all, c2.order_all, atol=1e-12)


def test_pressure_decay_series_shape():
    cfg = RunConfig(flux="upwind", K=1, grid=Grid(25, 25), t_final=200.0, output_every=1.0)
    vortex = acoustic_vortex_initial()
    res = run(cfg, vortex, reference=vortex, keep_snapshots=False, method="fourier")
    t, p = pressure_decay_series(res)
    v0 = math.hypot(res.diagnostics[0]["norm_u"], res.diagnostics[0]["norm_v"])
    assert t[-1] == 200.0 and p[0] == 0.0
    assert p.max() > 1e-6 * v0
    assert p[-1] < 1e-3 * p.max()
    sums = np.array([r["sum_mean_3"] for r in res.diagnostics])
    assert np.max(np.abs(sums - sums[0])) < 1e-12


def test_pressure_decay_zero_data():
    cfg = RunConfig(flux="upwind", K=1, grid=Grid(6, 6), t_final=1.0, output_every=0.5)
    res = run(cfg, lambda x, y: np.zeros(np.shape(x) + (3,)))
    assert np.all(pressure_decay_series(res)[1] == 0.0)


def test_gresho_short_run():
    res = gresho_run("roe", 1, eps=0.3, n=6, t_final=0.01)
    assert res.snapshots[-1].is_finite()
    assert 0.5 < max_cell_center_speed(res.snapshots[-1], 1.4) < 1.2
    assert res.diagnostics[0]["l2_err_u"] < 0.1
