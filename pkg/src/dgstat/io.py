"""CSV and JSON readers/writers with a fixed column order.

Floats are written with ``repr`` so every file round-trips exactly and two
identical runs produce byte-identical output.
"""

import csv
import json
import math
from pathlib import Path

import numpy as np

from dgstat.basis import cell_center_values, legendre_basis


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            vals = [row[c] for c in columns] if isinstance(row, dict) else list(row)
            w.writerow([_fmt(v) for v in vals])
    return path


def read_csv(path):
    """Header plus rows of floats (integers where the text is integral)."""
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = []
        for rec in r:
            rows.append({h: _parse(v) for h, v in zip(header, rec)})
    return header, rows


def _parse(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def snapshot_rows(field):
    vals = cell_center_values(field, legendre_basis(field.K))
    xc, yc = field.grid.centers()
    for i in range(field.grid.nx):
        for j in range(field.grid.ny):
            yield [i, j, float(xc[i]), float(yc[j])] + [float(v) for v in vals[i, j]]


def write_snapshot(path, field, names):
    """Cell-centre values: ``i,j,x,y,<names>``."""
    return write_csv(path, ["i", "j", "x", "y", *names], snapshot_rows(field))


def write_diagnostics(path, rows, m):
    from dgstat.solver import diagnostic_columns

    return write_csv(path, diagnostic_columns(m), rows)


def write_order_curve(path, curve):
    return write_csv(path, list(curve.columns), curve.rows())


def read_order_curve(path):
    from dgstat.experiments import OrderCurve

    _, rows = read_csv(path)
    cols = {c: np.array([r[c] for r in rows], dtype=float) for c in OrderCurve.columns}
    return OrderCurve(**cols)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else v
    return obj


def write_json(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


def kernel_report_dict(sweep, order_fit=None):
    """Serialisable form ``{flux, K, samples, min_dim, verdict, order_fit}``."""
    samples = [
        {"kx": kx, "ky": ky, "dim": rep.dim, "sigmas": list(rep.singular_values), "ambiguous": rep.ambiguous}
        for (kx, ky), rep in zip(sweep.samples, sweep.reports)
    ]
    out = {
        "flux": sweep.flux,
        "K": sweep.K,
        "samples": samples,
        "min_dim": sweep.min_dim,
        "verdict": sweep.verdict == "stationarity preserving",
        "verdict_text": sweep.verdict,
        "ambiguous": sweep.ambiguous,
        "order_fit": None,
    }
    if order_fit is not None:
        out["order_fit"] = {
            "slope": order_fit.slope,
            "residual": order_fit.residual,
            "order": order_fit.order,
            "exact_kernel": order_fit.exact_kernel,
            "dx": list(order_fit.dxs),
            "distance": list(order_fit.distances),
        }
    return out
