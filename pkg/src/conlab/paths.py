"""Loading-path construction over pseudo-time.

Paths live on [0, t_end] (t_end defaults to 1) sampled at n_steps + 1
equidistant points.  They are built either from named analytic families

    linear      A * t
    quadratic   A * t^2
    cubic       A * t^3
    power       A * t^p
    tsin        A * |t * sin(w*pi*t)|
    abs_sin     A * |sin(w*pi*t)|
    abs_cos     A * |cos(w*pi*t)|

(sums, value clipping and 3-component vectors compose them), or from a
plain expression string such as ``"2.0*abs(t*sin(3*pi*t))"``, which is
parsed through a whitelisted AST evaluator -- no generic eval.
"""

import ast
import math
from dataclasses import dataclass

import numpy as np

from .errors import UnknownFamilyError

__all__ = ["LoadingPath", "make_loading_path", "evaluate_path_expr"]


@dataclass(frozen=True)
class LoadingPath:
    """Sampled load program: times (m,), values (m,) or (m, 3)."""

    times: np.ndarray
    values: np.ndarray

    @property
    def n_steps(self):
        return len(self.times) - 1

    @property
    def is_vector(self):
        return self.values.ndim == 2


# --------------------------------------------------------------------------
# whitelisted expression evaluation
# --------------------------------------------------------------------------

_ALLOWED_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "abs": np.abs,
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "min": np.minimum,
    "max": np.maximum,
}
_ALLOWED_NAMES = {"pi": math.pi, "e": math.e}

_ALLOWED_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
    ast.Mod: np.mod,
}


def _eval_node(node, t):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, t)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            return float(node.value)
        raise UnknownFamilyError(f"non-numeric constant {node.value!r} in path expression")
    if isinstance(node, ast.Name):
        if node.id == "t":
            return t
        if node.id in _ALLOWED_NAMES:
            return _ALLOWED_NAMES[node.id]
        raise UnknownFamilyError(f"unknown name {node.id!r} in path expression")
    if isinstance(node, ast.BinOp) and type(node.op) in _ALLOWED_BINOPS:
        return _ALLOWED_BINOPS[type(node.op)](_eval_node(node.left, t),
                                              _eval_node(node.right, t))
    if isinstance(node, ast.UnaryOp):
        if isinstance(node.op, ast.USub):
            return -_eval_node(node.operand, t)
        if isinstance(node.op, ast.UAdd):
            return _eval_node(node.operand, t)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name):
        fn = _ALLOWED_FUNCS.get(node.func.id)
        if fn is None:
            raise UnknownFamilyError(f"unknown function {node.func.id!r} in path expression")
        if node.keywords:
            raise UnknownFamilyError("keyword arguments are not allowed in path expressions")
        args = [_eval_node(a, t) for a in node.args]
        return fn(*args)
    raise UnknownFamilyError(f"unsupported syntax in path expression: {ast.dump(node)}")


def evaluate_path_expr(expr, t):
    """Evaluate a whitelisted expression of ``t`` on an array of times."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise UnknownFamilyError(f"cannot parse path expression {expr!r}: {exc}") from exc
    return np.broadcast_to(np.asarray(_eval_node(tree, t), dtype=float), np.shape(t)).copy()


# --------------------------------------------------------------------------
# named families
# --------------------------------------------------------------------------

def _eval_spec(spec, t):
    if isinstance(spec, str):
        return evaluate_path_expr(spec, t)
    if not isinstance(spec, dict):
        raise UnknownFamilyError(f"path spec must be a string or dict, got {type(spec)}")
    if "sum" in spec:
        return sum(_eval_spec(part, t) for part in spec["sum"])
    if "clip_max" in spec:
        return np.minimum(_eval_spec(spec["of"], t), float(spec["clip_max"]))
    family = spec.get("family")
    amp = float(spec.get("amplitude", 1.0))
    omega = float(spec.get("omega", 1.0))
    if family == "expr":
        return evaluate_path_expr(spec["expr"], t)
    if family == "linear":
        return amp * t
    if family == "quadratic":
        return amp * t ** 2
    if family == "cubic":
        return amp * t ** 3
    if family == "power":
        return amp * t ** float(spec["exponent"])
    if family == "tsin":
        return amp * np.abs(t * np.sin(omega * math.pi * t))
    if family == "abs_sin":
        return amp * np.abs(np.sin(omega * math.pi * t))
    if family == "abs_cos":
        return amp * np.abs(np.cos(omega * math.pi * t))
    raise UnknownFamilyError(f"unknown path family {family!r}")


def make_loading_path(spec, n_steps=50, t_end=1.0):
    """Sample a path spec into a :class:`LoadingPath`.

    ``spec`` is an expression string, a family dict, or a dict with a
    ``components`` list of three sub-specs for gap-vector loading.  The
    default 50 steps match the usual test-path resolution (dt = 0.02).
    """
    if n_steps < 1:
        raise ValueError("a path needs at least one step")
    times = np.linspace(0.0, t_end, n_steps + 1)
    if isinstance(spec, dict) and "components" in spec:
        comps = spec["components"]
        if len(comps) != 3:
            raise UnknownFamilyError("vector paths need exactly 3 components")
        values = np.column_stack([_eval_spec(c, times) for c in comps])
    else:
        values = _eval_spec(spec, times)
    if not np.all(np.isfinite(values)):
        raise ValueError("path evaluates to non-finite values")
    return LoadingPath(times=times, values=values)
