"""Boundary data for the solver: model solutions, mode expansions, expressions."""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..special import ModelSolution, build_h2m
from ..spectral import trace_from_dict


@dataclass(eq=False)
class BoundaryDatum:
    """Trace g on the unit sphere; ``exact`` is a known solution in the ball, if any."""

    d: int
    name: str
    trace: Callable
    exact: Optional[Callable] = None
    descriptor: dict = field(default_factory=dict)

    def __call__(self, points):
        return np.asarray(self.trace(np.atleast_2d(points)), dtype=float)

    def extension(self, x):
        """Zero-homogeneous extension along rays (used outside the ball)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x, axis=1)
        out = np.zeros(len(x))
        nz = r > 0
        out[nz] = self(x[nz] / r[nz, None])
        return out


_ALLOWED_FUNCS = {
    "sqrt": np.sqrt, "abs": np.abs, "exp": np.exp, "log": np.log, "sin": np.sin, "cos": np.cos,
    "tan": np.tan, "arctan2": np.arctan2, "atan2": np.arctan2, "maximum": np.maximum,
    "minimum": np.minimum, "where": np.where,
}
_ALLOWED_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod,
    ast.Compare, ast.Lt, ast.Gt, ast.LtE, ast.GtE,
)


def compile_expression(expr, d):
    """Vectorized evaluator of an arithmetic expression in x1..xd, r, theta (d=2), pi."""
    tree = ast.parse(expr, mode="eval")
    names = {f"x{i + 1}" for i in range(d)} | {"r", "theta", "pi"} | set(_ALLOWED_FUNCS)
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ValueError(f"disallowed syntax in expression: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in names:
            raise ValueError(f"unknown name {node.id!r} in expression")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _ALLOWED_FUNCS):
            raise ValueError("only whitelisted functions may be called")
    code = compile(tree, "<datum>", "eval")

    def fn(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        env = dict(_ALLOWED_FUNCS)
        env.update({f"x{i + 1}": x[:, i] for i in range(d)})
        env["r"] = np.linalg.norm(x, axis=1)
        env["pi"] = np.pi
        if d == 2:
            env["theta"] = np.arctan2(x[:, 1], x[:, 0])
        val = eval(code, {"__builtins__": {}}, env)  # noqa: S307 - AST checked above
        return np.broadcast_to(np.asarray(val, dtype=float), (len(x),)).copy()

    return fn


def make_datum(spec, d=None):
    """Datum from its config dictionary (``kind`` = model | fourier | expression)."""
    kind = spec.get("kind")
    d = int(spec.get("d", d if d is not None else 2))
    if kind == "model":
        name = spec["name"]
        if name in ("he", "h32"):
            sol = ModelSolution("he", d, e=spec.get("e"))
            return BoundaryDatum(d, "h_3/2", sol, sol, dict(spec))
        if name == "u0":
            sol = ModelSolution("u0", d)
            return BoundaryDatum(d, "u_0", sol, None, dict(spec))
        if name == "half_integer":
            sol = ModelSolution("half_integer", 2, m=int(spec["m"]))
            return BoundaryDatum(2, f"h_{sol.homogeneity:g}", sol, sol, dict(spec))
        if name == "h2m":
            h = build_h2m(d, int(spec["m"]))
            return BoundaryDatum(d, f"h_{2 * int(spec['m'])}", h, h, dict(spec))
        if name == "const":
            c = float(spec.get("value", 1.0))
            f = (lambda x: np.full(len(np.atleast_2d(x)), c))
            return BoundaryDatum(d, "const", f, f, dict(spec))
        raise ValueError(f"unknown model datum {name!r}")
    if kind == "fourier":
        exp = trace_from_dict(spec["trace"] if "trace" in spec else spec)
        return BoundaryDatum(exp.table.d, "fourier", exp.evaluate, None, dict(spec))
    if kind == "expression":
        fn = compile_expression(spec["expr"], d)
        exact = fn if spec.get("harmonic", False) else None
        return BoundaryDatum(d, spec["expr"], fn, exact, dict(spec))
    raise ValueError(f"unknown datum kind {kind!r}")
