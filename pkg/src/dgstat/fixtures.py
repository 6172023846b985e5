"""Stored kernel vectors of the acoustic evolution matrix.

Each fixture entry is a list of vectors; each vector is a list of arithmetic
expression strings over ``tx, ty, dx, dy, kx, ky`` and ``sqrt``. They are
evaluated by a restricted AST walker, never by ``eval``.
"""

import ast
import json
import operator
from functools import lru_cache
from importlib import resources

import numpy as np

from dgstat.errors import ConfigurationError

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNOPS = {ast.USub: operator.neg, ast.UAdd: operator.pos}
VARIABLES = ("tx", "ty", "dx", "dy", "kx", "ky")


def compile_expression(text):
    """Parse an expression string and return its AST body, rejecting anything non-arithmetic."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"bad fixture expression {text!r}: {exc}") from exc
    for node in ast.walk(tree):
        ok = isinstance(
            node,
            (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Call, ast.Load, ast.operator, ast.unaryop),
        )
        if not ok:
            raise ConfigurationError(f"disallowed syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id == "sqrt"):
            raise ConfigurationError(f"only sqrt() calls are allowed, in {text!r}")
        if isinstance(node, ast.Name) and node.id not in VARIABLES + ("sqrt",):
            raise ConfigurationError(f"unknown variable {node.id!r} in {text!r}")
    return tree.body


def _eval(node, env, sqrt):
    if isinstance(node, ast.Constant):
        return env["_const"](node.value)
    if isinstance(node, ast.Name):
        if node.id not in env:
            raise ConfigurationError(f"fixture needs variable {node.id!r}, which was not supplied")
        return env[node.id]
    if isinstance(node, ast.BinOp):
        return _BINOPS[type(node.op)](_eval(node.left, env, sqrt), _eval(node.right, env, sqrt))
    if isinstance(node, ast.UnaryOp):
        return _UNOPS[type(node.op)](_eval(node.operand, env, sqrt))
    if isinstance(node, ast.Call):
        (arg,) = node.args
        return sqrt(_eval(arg, env, sqrt))
    raise ConfigurationError(f"cannot evaluate {ast.dump(node)}")


def evaluate_expression(text, **values):
    """Evaluate one expression string; pass mpmath numbers to get an mpmath result."""
    env = {k: v for k, v in values.items() if v is not None}
    mp_mode = any(hasattr(v, "ae") for v in env.values())
    if mp_mode:
        import mpmath

        env["_const"] = mpmath.mpf
        sqrt = mpmath.sqrt
    else:
        env["_const"] = float
        sqrt = np.sqrt
    return _eval(_parsed(text), env, sqrt)


@lru_cache(maxsize=None)
def _parsed(text):
    return compile_expression(text)


@lru_cache(maxsize=None)
def _bundled():
    with resources.files("dgstat").joinpath("data/kernel_fixtures.json").open() as fh:
        return json.load(fh)


def load_fixtures(path=None):
    """Fixture dictionary from ``path`` or the copy shipped with the package."""
    if path is None:
        data = _bundled()
    else:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"fixture file {path} is not valid JSON: {exc}") from exc
    for name, entry in data.items():
        if not {"K", "vectors"} <= set(entry):
            raise ConfigurationError(f"fixture {name!r} needs 'K' and 'vectors'")
        n = 3 * (entry["K"] + 1) ** 2
        for vec in entry["vectors"]:
            if len(vec) != n:
                raise ConfigurationError(f"fixture {name!r}: vector length {len(vec)} != {n}")
    return data


def evaluate_fixture(name, tx, ty, dx=1.0, dy=1.0, kx=None, ky=None, fixtures=None):
    """Evaluate all vectors of fixture ``name``; returns an ``(n, count)`` complex array (columns)."""
    fixtures = fixtures if fixtures is not None else load_fixtures()
    if name not in fixtures:
        raise ConfigurationError(f"unknown fixture {name!r}; available: {sorted(fixtures)}")
    values = dict(tx=tx, ty=ty, dx=dx, dy=dy, kx=kx, ky=ky)
    cols = [[evaluate_expression(s, **values) for s in vec] for vec in fixtures[name]["vectors"]]
    if any(hasattr(v, "ae") for v in values.values() if v is not None):
        return np.array(cols, dtype=object).T
    return np.array(cols, dtype=complex).T
