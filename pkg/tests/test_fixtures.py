import json

import mpmath
import numpy as np
import pytest

from dgstat.errors import ConfigurationError
from dgstat.fixtures import compile_expression, evaluate_expression, evaluate_fixture, load_fixtures
from dgstat.fourier import StationaryMode, assemble_evolution_matrix, distance_to_span, dof_hat, verify_kernel_vector

FLUX_FIXTURES = [n for n, e in load_fixtures().items() if e["flux"] is not None]


def test_expected_fixture_set():
    assert sorted(FLUX_FIXTURES) == sorted(
        ["upwind_K1", "upwind_K2", "upwind_K3", "rusanov_K2", "central_K1", "central_K2", "central_K3",
         "lowmach_K1", "lowmach_K2", "lowmach_K3"]
    )
    counts = {n: len(e["vectors"]) for n, e in load_fixtures().items()}
    assert counts["lowmach_K3"] == 16 and counts["upwind_K3"] == 9 and counts["hypothetical_K1"] == 1


def test_evaluate_expression():
    assert evaluate_expression("-((sqrt(3)*(ty+1))/(ty-1))", ty=3.0) == pytest.approx(-2 * np.sqrt(3))
    assert evaluate_expression("dx/dy + 2**2", dx=1.0, dy=4.0) == pytest.approx(4.25)
    with mpmath.workdps(30):
        val = evaluate_expression("sqrt(3)/tx", tx=mpmath.mpf(2))
        assert isinstance(val, mpmath.mpf) and abs(val - mpmath.sqrt(3) / 2) < mpmath.mpf(10) ** -28


@pytest.mark.parametrize(
    "text",
    ["__import__('os')", "tx.real", "open('x')", "lambda: 1", "[1, 2]", "exp(tx)", "zz + 1", "tx if ty else dx", "tx(1)"],
)
def test_evaluator_rejects(text):
    with pytest.raises(ConfigurationError):
        compile_expression(text)


def test_missing_variable_is_reported():
    with pytest.raises(ConfigurationError, match="kx"):
        evaluate_expression("kx + 1", tx=1.0)


def test_unknown_fixture():
    with pytest.raises(ConfigurationError):
        evaluate_fixture("nope", 1.0, 1.0)


def test_bad_fixture_file(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"x": {"K": 1, "vectors": [["1"] * 5]}}))
    with pytest.raises(ConfigurationError):
        load_fixtures(path)
    path.write_text("{")
    with pytest.raises(ConfigurationError):
        load_fixtures(path)


@pytest.mark.parametrize("name", FLUX_FIXTURES)
def test_fixture_vectors_in_kernel(name):
    entry = load_fixtures()[name]
    rng = np.random.default_rng(len(name))
    worst = 0.0
    for _ in range(10):
        tx, ty = np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
        for dx, dy in ((1.0, 1.0), (0.1, 0.07)):
            E = assemble_evolution_matrix(entry["K"], entry["flux"], tx=tx, ty=ty, dx=dx, dy=dy)
            W = evaluate_fixture(name, tx, ty, dx, dy)
            worst = max(worst, max(verify_kernel_vector(w, E) for w in W.T))
            if W.shape[1] > 1:
                assert np.linalg.matrix_rank(W, tol=1e-8 * np.linalg.norm(W)) == W.shape[1]
    assert worst < 1e-10


def test_fixture_in_mp():
    with mpmath.workdps(30):
        tx, ty = mpmath.expj(0.4), mpmath.expj(1.3)
        W = evaluate_fixture("lowmach_K1", tx, ty)
        E = assemble_evolution_matrix(1, "lowmach", tx=tx, ty=ty, precision="mp").matrix
        Em = mpmath.matrix(E.tolist() if hasattr(E, "tolist") else E)
        for i in range(W.shape[1]):
            r = Em * mpmath.matrix(list(W[:, i]))
            assert mpmath.norm(r) < mpmath.mpf(10) ** -25


def hypothetical_distance(k, h):
    kx, ky = k
    W = evaluate_fixture("hypothetical_K1", np.exp(1j * kx * h), np.exp(1j * ky * h), h, h, kx, ky)
    q = dof_hat(StationaryMode(kx, ky).amplitude, kx, ky, h, h, 1)
    return distance_to_span(q, W)


def test_hypothetical_kernel_is_at_least_second_order():
    # tan(z)/3 and j1(z)/j0(z) differ only at O(z^3), so the distance falls at third order
    hs = 2.0 ** -np.arange(3, 9)
    d = [hypothetical_distance((1.0, 0.7), h) for h in hs]
    slope = np.polyfit(np.log(hs), np.log(d), 1)[0]
    assert slope >= 1.9
    assert slope == pytest.approx(3.0, abs=0.05)
