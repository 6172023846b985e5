"""Command-line entry point: ``dgstat {solve,analyze,convergence,sweep-euler}``.

Each command takes an optional JSON config (``--config``) whose keys are
validated against a schema; command-line flags override file values.
Exit codes: 1 configuration error, 2 numerical failure, 3 I/O failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import jsonschema
import numpy as np

from dgstat import fourier, io
from dgstat.basis import legendre_basis, project_to_dg
from dgstat.errors import ConfigurationError, NumericalError, StateError
from dgstat.experiments import (
    GreshoSetup,
    acoustic_vortex_initial,
    convergence_run,
    euler_sweep,
)
from dgstat.fixtures import evaluate_fixture, load_fixtures
from dgstat.mesh import Grid
from dgstat.solver import DGOperator, RunConfig, count_steps, run

logger = logging.getLogger("dgstat")

EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 1, 2, 3

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_INT = {"type": "integer"}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {"enum": ["acoustics", "euler"]},
        "flux": {"type": "string"},
        "K": {"type": "integer", "minimum": 0, "maximum": 6},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"nx": {"type": "integer", "minimum": 2}, "ny": {"type": "integer", "minimum": 2}, "lx": _POS, "ly": _POS},
        },
        "cfl": _POS,
        "rk_order": {"enum": [1, 2, 3, 4]},
        "t_final": {"type": "number", "minimum": 0},
        "output_every": _POS,
        "eps": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "gamma": {"type": "number", "exclusiveMinimum": 1},
        "f": _NUM,
        "setup": {"enum": ["vortex", "gresho"]},
        "method": {"enum": ["step", "fourier"]},
        "grids": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 2, "maxItems": 2},
        "fluxes": {"type": "array", "items": {"type": "string"}},
        "Ks": {"type": "array", "items": _INT},
        "eps_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1}},
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k_samples": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
                "dx_ladder": {"type": "array", "items": _POS, "minItems": 4},
                "svd_tol": _POS,
                "k": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "order": {"type": "boolean"},
            },
        },
    },
}


def validate_config(cfg):
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"invalid config at {where}: {exc.message}") from exc
    return cfg


def load_config(path):
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    return validate_config(cfg)


def _merge(cfg, args, keys):
    out = dict(cfg)
    for key in keys:
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    grid = dict(out.get("grid", {}))
    for key in ("nx", "ny", "lx", "ly"):
        val = getattr(args, key, None)
        if val is not None:
            grid[key] = val
    if grid:
        out["grid"] = grid
    return validate_config(out)


def _require(cfg, *keys):
    for key in keys:
        if key not in cfg:
            raise ConfigurationError(f"missing required config key: {key!r}")


def _grid(cfg, default=25):
    g = cfg.get("grid", {})
    nx = g.get("nx", default)
    return Grid(nx, g.get("ny", nx), g.get("lx", 1.0), g.get("ly", 1.0))


def _run_config(cfg):
    model = cfg.get("model", "acoustics")
    return RunConfig(
        model=model,
        flux=cfg["flux"],
        K=cfg.get("K", 1),
        grid=_grid(cfg),
        cfl=cfg.get("cfl"),
        t_final=cfg.get("t_final", 1.0),
        rk_order=cfg.get("rk_order"),
        output_every=cfg.get("output_every"),
        gamma=cfg.get("gamma", 1.4),
        f=cfg.get("f", 0.1),
    )


def _out_dir(args):
    out = Path(args.out or "dgstat_out")
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# commands


def cmd_solve(args):
    cfg = _merge(load_config(args.config), args, ["model", "flux", "K", "cfl", "rk_order", "t_final", "output_every", "eps", "gamma", "setup", "method"])
    _require(cfg, "flux")
    rc = _run_config(cfg)
    setup = cfg.get("setup", "vortex" if rc.model == "acoustics" else "gresho")
    if (setup == "gresho") != (rc.model == "euler"):
        raise ConfigurationError(f"setup {setup!r} does not belong to model {rc.model!r}")
    if setup == "gresho":
        init = GreshoSetup(cfg.get("eps", 1e-2), rc.gamma).conservative
    else:
        init = acoustic_vortex_initial()
    method = cfg.get("method", "step")

    if rc.model == "acoustics":
        speed = 1.0
    else:
        q0 = project_to_dg(init, rc.grid, legendre_basis(rc.K))
        speed = DGOperator(rc.grid, legendre_basis(rc.K), rc.system()).max_speed(q0.coeffs)
    steps = count_steps(rc, speed)
    resolved = {**cfg, "model": rc.model, "K": rc.K, "cfl": rc.cfl, "rk_order": rc.rk_order, "t_final": rc.t_final,
                "output_every": rc.output_every, "setup": setup, "method": method,
                "grid": {"nx": rc.grid.nx, "ny": rc.grid.ny, "lx": rc.grid.lx, "ly": rc.grid.ly}}
    if args.dry_run:
        print(json.dumps(resolved, indent=2, sort_keys=True))
        print(f"steps: {steps}" + (" (estimated from the initial signal speed)" if rc.model == "euler" else ""))
        return 0

    result = run(rc, init, reference=init, method=method)
    out = _out_dir(args)
    names = rc.system().names
    io.write_json(out / "config.json", resolved)
    io.write_diagnostics(out / "diagnostics.csv", result.diagnostics, len(names))
    io.write_snapshot(out / "snapshot_final.csv", result.snapshots[-1], names)
    print(f"wrote {out / 'diagnostics.csv'} and {out / 'snapshot_final.csv'} ({result.steps} steps)")
    return 0


def cmd_analyze(args):
    cfg = _merge(load_config(args.config), args, ["flux", "K"])
    out = _out_dir(args)
    if args.fixtures:
        return _fixture_report(args, out)
    _require(cfg, "flux")
    K = cfg.get("K", 1)
    an = cfg.get("analysis", {})
    tau = an.get("svd_tol", fourier.DEFAULT_TAU)
    samples = [tuple(s) for s in an["k_samples"]] if "k_samples" in an else None
    sweep = fourier.kernel_dim_sweep(K, cfg["flux"], samples=samples, tau=tau)
    fit = None
    if an.get("order", True) and sweep.min_dim > 0:
        fit = fourier.steady_order_fit(K, cfg["flux"], k=tuple(an.get("k", (1.0, 0.7))), dxs=an.get("dx_ladder"))
    report = io.kernel_report_dict(sweep, fit)
    io.write_json(out / "kernel_report.json", report)
    line = f"{sweep.flux} K={K}: min dim ker E = {sweep.min_dim} ({sweep.verdict})"
    if fit is not None:
        line += f"; distance slope {fit.slope:.3f}, steady order {fit.order:.3f}" if not fit.exact_kernel else "; exact kernel"
    print(line)
    return 0


def _fixture_report(args, out):
    fixtures = load_fixtures()
    rng = np.random.default_rng(0)
    rows = []
    for name, entry in fixtures.items():
        if entry.get("flux") is None:
            continue
        worst = 0.0
        for _ in range(10):
            tx, ty = np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
            for dx, dy in ((1.0, 1.0), (0.1, 0.07)):
                E = fourier.assemble_evolution_matrix(entry["K"], entry["flux"], tx=tx, ty=ty, dx=dx, dy=dy)
                W = evaluate_fixture(name, tx, ty, dx, dy, fixtures=fixtures)
                worst = max(worst, max(fourier.verify_kernel_vector(W[:, i], E) for i in range(W.shape[1])))
        rows.append({"fixture": name, "flux": entry["flux"], "K": entry["K"], "vectors": len(entry["vectors"]),
                     "max_residual": worst, "pass": worst < 1e-10})
    print(f"{'fixture':<14} {'vectors':>7} {'max residual':>14}  status")
    for r in rows:
        print(f"{r['fixture']:<14} {r['vectors']:>7} {r['max_residual']:>14.3e}  {'ok' if r['pass'] else 'FAIL'}")
    io.write_json(out / "fixtures.json", {"fixtures": rows})
    return 0 if all(r["pass"] for r in rows) else EXIT_NUMERICAL


def cmd_convergence(args):
    cfg = _merge(load_config(args.config), args, ["flux", "K", "cfl", "rk_order", "t_final", "output_every", "method"])
    _require(cfg, "flux")
    if cfg.get("model", "acoustics") != "acoustics":
        raise ConfigurationError("convergence runs use the acoustics model")
    grids = tuple(args.grids or cfg.get("grids", (25, 50)))
    t_final = cfg.get("t_final", 10.0)
    coarse, fine, curve = convergence_run(
        cfg["flux"], cfg.get("K", 1), t_final=t_final, cadence=cfg.get("output_every", min(1.0, t_final) or 1.0),
        grids=grids, cfl=cfg.get("cfl", 0.03), rk_order=cfg.get("rk_order"), method=cfg.get("method", "fourier"),
    )
    out = _out_dir(args)
    io.write_order_curve(out / "order.csv", curve)
    for n, res in zip(grids, (coarse, fine)):
        io.write_diagnostics(out / f"diagnostics_{n}.csv", res.diagnostics, 3)
    last = curve.at(curve.t[-1])
    print(f"order at t={last['t']:g}: u {last['order_u']:.3f} v {last['order_v']:.3f} all {last['order_all']:.3f}")
    return 0


def cmd_sweep_euler(args):
    cfg = _merge(load_config(args.config), args, ["fluxes", "Ks", "eps_values", "t_final", "cfl"])
    n = _grid(cfg).nx
    rows = euler_sweep(
        fluxes=tuple(cfg.get("fluxes", ("rusanov", "roe"))),
        Ks=tuple(cfg.get("Ks", (0, 1, 2))),
        eps_values=tuple(cfg.get("eps_values", (1e-1, 1e-2))),
        n=n,
        t_final=cfg.get("t_final", 1.0),
        cfl=cfg.get("cfl"),
        progress=lambda r: print(f"{r['flux']} K={r['K']} eps={r['eps']:g}: max centre speed {r['max_center_speed']:.4f}"),
    )
    out = _out_dir(args)
    summary = {f"flux={r['flux']},K={r['K']},eps={r['eps']:g},grid={r['grid']}": r for r in rows}
    io.write_json(out / "sweep.json", summary)
    return 0


# --------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="dgstat", description="DG stationarity analysis and solvers")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--out", help="output directory (default ./dgstat_out)")
        sp.add_argument("--flux")
        sp.add_argument("--K", type=int)

    def timing(sp):
        sp.add_argument("--cfl", type=float)
        sp.add_argument("--rk-order", dest="rk_order", type=int)
        sp.add_argument("--t-final", dest="t_final", type=float)
        sp.add_argument("--cadence", dest="output_every", type=float)

    s = sub.add_parser("solve", help="run the acoustic vortex or the Gresho vortex")
    common(s)
    timing(s)
    s.add_argument("--model", choices=["acoustics", "euler"])
    s.add_argument("--nx", type=int)
    s.add_argument("--ny", type=int)
    s.add_argument("--eps", type=float)
    s.add_argument("--gamma", type=float)
    s.add_argument("--setup", choices=["vortex", "gresho"])
    s.add_argument("--method", choices=["step", "fourier"])
    s.add_argument("--dry-run", action="store_true", help="print the resolved config and step count only")
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("analyze", help="kernel dimension, order fit and fixture checks")
    common(a)
    a.add_argument("--fixtures", action="store_true", help="verify all stored kernel vectors")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("convergence", help="order-in-time curve on paired grids")
    common(c)
    timing(c)
    c.add_argument("--grids", type=int, nargs=2)
    c.add_argument("--method", choices=["step", "fourier"])
    c.set_defaults(func=cmd_convergence)

    e = sub.add_parser("sweep-euler", help="Gresho vortex over fluxes, degrees and Mach numbers")
    e.add_argument("--config")
    e.add_argument("--out")
    e.add_argument("--fluxes", nargs="+")
    e.add_argument("--Ks", type=int, nargs="+")
    e.add_argument("--eps", dest="eps_values", type=float, nargs="+")
    e.add_argument("--nx", type=int)
    e.add_argument("--t-final", dest="t_final", type=float)
    e.add_argument("--cfl", type=float)
    e.set_defaults(func=cmd_sweep_euler)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, StateError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
