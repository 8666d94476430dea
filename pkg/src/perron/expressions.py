"""Tiny arithmetic grammar for separable-kernel factor expressions.

Allowed: numeric literals, the variable ``x``, the operators
``+ - * /`` (plus unary minus), and the calls ``exp(...)`` and
``abs(...)``.  Anything else is rejected, so config files cannot smuggle
arbitrary code.
"""

from __future__ import annotations

import ast

import numpy as np

_FUNCTIONS = {"exp": np.exp, "abs": np.abs}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
}


class ExpressionError(ValueError):
    pass


def _eval(node, x):
    if isinstance(node, ast.Expression):
        return _eval(node.body, x)
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float)):
            return float(node.value)
        raise ExpressionError(f"literal {node.value!r} is not a number")
    if isinstance(node, ast.Name):
        if node.id == "x":
            return x
        raise ExpressionError(f"unknown name {node.id!r}; only 'x' is allowed")
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left, x), _eval(node.right, x))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _eval(node.operand, x)
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.Call):
        if (
            isinstance(node.func, ast.Name)
            and node.func.id in _FUNCTIONS
            and len(node.args) == 1
            and not node.keywords
        ):
            return _FUNCTIONS[node.func.id](_eval(node.args[0], x))
        raise ExpressionError("only exp(...) and abs(...) calls are allowed")
    raise ExpressionError(f"disallowed syntax: {ast.dump(node)}")


def evaluate(expression: str, x: np.ndarray) -> np.ndarray:
    """Evaluate the expression at the node coordinates."""
    try:
        tree = ast.parse(expression, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {expression!r}: {exc}") from exc
    result = _eval(tree, np.asarray(x, dtype=float))
    return np.broadcast_to(np.asarray(result, dtype=float), np.shape(x)).copy()
