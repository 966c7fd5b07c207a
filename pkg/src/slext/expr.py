"""Tiny safe arithmetic expression compiler for coefficient strings.

Grammar: numbers, the variable, ``pi``, ``e``, ``+ - * / ^`` (``**`` also
accepted), parentheses and the functions ``ln``, ``exp``, ``sqrt``, ``sin``,
``cos`` and ``abs``. The result is a numpy-vectorised callable.
"""

from __future__ import annotations

import ast
from typing import Callable

import numpy as np

from .errors import ProblemFileError

_FUNCS = {
    "ln": np.log,
    "log": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "abs": np.abs,
}
_CONSTS = {"pi": np.pi, "e": np.e}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}


def compile_expression(text: str, var: str = "x") -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``text`` into a function of ``var``.

    >>> f = compile_expression("(x-1)^2 + ln(2)")
    >>> float(f(3.0))  # doctest: +ELLIPSIS
    4.693...
    """
    if not isinstance(text, str) or not text.strip():
        raise ProblemFileError(f"empty coefficient expression {text!r}")
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ProblemFileError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Expression):
            return build(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            v = float(node.value)
            return lambda x: v
        if isinstance(node, ast.Name):
            if node.id == var:
                return lambda x: x
            if node.id in _CONSTS:
                v = _CONSTS[node.id]
                return lambda x: v
            raise ProblemFileError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            inner = build(node.operand)
            if isinstance(node.op, ast.USub):
                return lambda x: -inner(x)
            return inner
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            op = _BINOPS[type(node.op)]
            left, right = build(node.left), build(node.right)
            return lambda x: op(left(x), right(x))
        if (
            isinstance(node, ast.Call)
            and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS
            and len(node.args) == 1
            and not node.keywords
        ):
            fn = _FUNCS[node.func.id]
            arg = build(node.args[0])
            return lambda x: fn(arg(x))
        raise ProblemFileError(f"unsupported syntax in {text!r}")

    body = build(tree)

    def f(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            return np.broadcast_to(np.asarray(body(x), dtype=float), x.shape).copy()

    f.source = text
    return f
