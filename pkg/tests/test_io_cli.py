import json
import math

import numpy as np
import pytest

from dgstat import io
from dgstat.basis import legendre_basis, project_to_dg
from dgstat.cli import main
from dgstat.experiments import OrderCurve, acoustic_vortex_initial
from dgstat.fourier import kernel_dim_sweep
from dgstat.mesh import Grid


def test_csv_round_trip(tmp_path):
    rows = [{"t": 0.1, "a": 1 / 3, "b": 7}, {"t": 0.2, "a": float("nan"), "b": -1}]
    path = io.write_csv(tmp_path / "x.csv", ["t", "a", "b"], rows)
    header, back = io.read_csv(path)
    assert header == ["t", "a", "b"]
    assert back[0] == {"t": 0.1, "a": 1 / 3, "b": 7}
    assert math.isnan(back[1]["a"])
    assert path.read_bytes().endswith(b"\n") and b"\r" not in path.read_bytes()


def test_order_curve_round_trip(tmp_path):
    curve = OrderCurve(*(np.array([0.0, 1.0, 2.0]) * s for s in (1, 0.5, 0.25, np.pi, 1.1)))
    path = io.write_order_curve(tmp_path / "order.csv", curve)
    assert path.read_text().splitlines()[0] == "t,order_u,order_v,order_p,order_all"
    back = io.read_order_curve(path)
    for c in OrderCurve.columns:
        np.testing.assert_array_equal(getattr(back, c), getattr(curve, c))


def test_snapshot_rows(tmp_path):
    g = Grid(3, 2)
    q = project_to_dg(acoustic_vortex_initial(), g, legendre_basis(1))
    path = io.write_snapshot(tmp_path / "s.csv", q, ["u", "v", "p"])
    header, rows = io.read_csv(path)
    assert header == ["i", "j", "x", "y", "u", "v", "p"] and len(rows) == 6
    assert rows[0]["x"] == pytest.approx(1 / 6)


def test_json_round_trip(tmp_path):
    data = {"b": np.float64(1.5), "a": [np.int64(2), float("inf")], "c": np.array([True, False])}
    path = io.write_json(tmp_path / "d.json", data)
    assert io.read_json(path) == {"a": [2, None], "b": 1.5, "c": [True, False]}
    assert path.read_text().index('"a"') < path.read_text().index('"b"')


def test_kernel_report_dict():
    rep = io.kernel_report_dict(kernel_dim_sweep(1, "upwind", samples=[(0.5, 0.5), (1.0, 2.0)]))
    assert rep["min_dim"] == 1 and rep["verdict"] is True
    assert set(rep["samples"][0]) == {"kx", "ky", "dim", "sigmas", "ambiguous"}
    assert json.loads(json.dumps(rep)) == rep


def test_missing_flux_exits_with_config_error(tmp_path, capsys):
    assert main(["solve", "--out", str(tmp_path)]) == 1
    assert "'flux'" in capsys.readouterr().err


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"flux": "upwind", "colour": "red"}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "colour" in capsys.readouterr().err


def test_bad_config_value_rejected(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"flux": "upwind", "rk_order": 7}))
    assert main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_unknown_flux_is_config_error(tmp_path):
    assert main(["solve", "--flux", "hllc", "--out", str(tmp_path), "--t-final", "0.1"]) == 1


def test_solve_writes_files(tmp_path):
    out = tmp_path / "run"
    args = ["solve", "--flux", "rusanov", "--K", "0", "--nx", "25", "--t-final", "10", "--cadence", "1", "--out", str(out)]
    assert main(args) == 0
    header, rows = io.read_csv(out / "diagnostics.csv")
    assert len(rows) == 10 / 1 + 1
    assert header[:4] == ["t", "l2_err_u", "l2_err_v", "l2_err_p"]
    _, snap = io.read_csv(out / "snapshot_final.csv")
    assert len(snap) == 625
    assert io.read_json(out / "config.json")["flux"] == "rusanov"


def test_solve_dry_run(tmp_path, capsys):
    out = tmp_path / "dry"
    assert main(["solve", "--flux", "upwind", "--K", "1", "--nx", "10", "--t-final", "1", "--dry-run", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert '"flux": "upwind"' in text and "steps: 334" in text
    assert not (out / "diagnostics.csv").exists()


def test_solve_euler_dry_run(capsys, tmp_path):
    assert main(["solve", "--model", "euler", "--flux", "roe", "--K", "1", "--eps", "0.1", "--dry-run", "--out", str(tmp_path)]) == 0
    assert "steps:" in capsys.readouterr().out


def test_solve_numerical_failure_exit_code(tmp_path):
    args = ["solve", "--flux", "central", "--K", "1", "--nx", "8", "--cfl", "3", "--rk-order", "1",
            "--t-final", "20", "--out", str(tmp_path)]
    assert main(args) == 2


def test_io_failure_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["analyze", "--flux", "rusanov", "--K", "1", "--out", str(blocker / "sub")]) == 3


@pytest.mark.parametrize("flux, K, min_dim, verdict", [("upwind", 2, 4, True), ("rusanov", 1, 0, False)])
def test_analyze(tmp_path, flux, K, min_dim, verdict):
    assert main(["analyze", "--flux", flux, "--K", str(K), "--out", str(tmp_path)]) == 0
    rep = io.read_json(tmp_path / "kernel_report.json")
    assert rep["min_dim"] == min_dim and rep["verdict"] is verdict
    assert len(rep["samples"]) == 64
    if verdict:
        assert rep["order_fit"]["slope"] == pytest.approx(2.0, abs=0.15)
    else:
        assert rep["order_fit"] is None


def test_analyze_fixtures(tmp_path, capsys):
    assert main(["analyze", "--fixtures", "--out", str(tmp_path)]) == 0
    rows = io.read_json(tmp_path / "fixtures.json")["fixtures"]
    assert len(rows) == 10 and all(r["max_residual"] < 1e-10 for r in rows)
    assert "lowmach_K3" in capsys.readouterr().out


def test_convergence_upwind_k2(tmp_path):
    out = tmp_path / "conv"
    assert main(["convergence", "--flux", "upwind", "--K", "2", "--t-final", "50", "--cadence", "10", "--out", str(out)]) == 0
    curve = io.read_order_curve(out / "order.csv")
    assert curve.t[-1] == 50.0
    assert 1.6 <= curve.at(50.0)["order_all"] <= 2.4
    assert (out / "diagnostics_25.csv").exists() and (out / "diagnostics_50.csv").exists()


def test_convergence_is_deterministic(tmp_path):
    args = ["convergence", "--flux", "lowmach", "--K", "0", "--t-final", "2", "--cadence", "1", "--grids", "8", "16"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("order.csv", "diagnostics_8.csv", "diagnostics_16.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_solve_is_deterministic(tmp_path):
    args = ["solve", "--flux", "upwind", "--K", "1", "--nx", "6", "--t-final", "0.2", "--cadence", "0.1"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    for name in ("diagnostics.csv", "snapshot_final.csv", "config.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep_euler_small(tmp_path):
    args = ["sweep-euler", "--fluxes", "rusanov", "--Ks", "0", "--eps", "0.5", "--nx", "6", "--t-final", "0.01", "--out", str(tmp_path)]
    assert main(args) == 0
    data = io.read_json(tmp_path / "sweep.json")
    (row,) = data.values()
    assert row["flux"] == "rusanov" and row["K"] == 0 and row["eps"] == 0.5
