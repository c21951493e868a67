"""Tiny arithmetic expression language for field formulas in config files.

Supported: + - * / ** with unary minus, numeric literals, the constant pi,
the functions sqrt, cos, abs, min, max, and the variable names the caller
declares.  Nothing else parses; in particular no attribute access, no
subscripts, no comprehensions, and no user-defined callables, so evaluating
a validated expression cannot run arbitrary code.

Expressions are validated once against the declared variable set and then
compiled; evaluation binds a plain name-to-float mapping.
"""

from __future__ import annotations

import ast
import math
from typing import Callable

from .errors import ExpressionError

FUNCTIONS = {
    "sqrt": math.sqrt,
    "cos": math.cos,
    "abs": abs,
    "min": min,
    "max": max,
}

CONSTANTS = {"pi": math.pi}

_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)
_UNARYOPS = (ast.USub, ast.UAdd)


def _pos(node: ast.AST):
    return (getattr(node, "lineno", 1), getattr(node, "col_offset", 0))


def _validate(node: ast.AST, names: set) -> None:
    if isinstance(node, ast.Expression):
        _validate(node.body, names)
    elif isinstance(node, ast.BinOp) and isinstance(node.op, _BINOPS):
        _validate(node.left, names)
        _validate(node.right, names)
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, _UNARYOPS):
        _validate(node.operand, names)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ExpressionError("only sqrt, cos, abs, min, max may be called",
                                  position=_pos(node))
        if node.keywords:
            raise ExpressionError("keyword arguments are not supported",
                                  position=_pos(node))
        if not node.args:
            raise ExpressionError(f"{node.func.id}() needs arguments",
                                  position=_pos(node))
        for arg in node.args:
            _validate(arg, names)
    elif isinstance(node, ast.Name):
        if node.id not in names and node.id not in CONSTANTS:
            raise ExpressionError(f"unknown name {node.id!r}",
                                  position=_pos(node))
    elif isinstance(node, ast.Constant):
        # bool is an int subclass; True/False are not numbers here
        if isinstance(node.value, bool) or \
                not isinstance(node.value, (int, float)):
            raise ExpressionError(f"literal {node.value!r} is not a number",
                                  position=_pos(node))
    else:
        raise ExpressionError(
            f"disallowed syntax: {type(node).__name__}", position=_pos(node))


def compile_expression(text: str, variables) -> Callable:
    """Compile the expression into a function of a name-to-float mapping.

    Parse and validation errors carry a (line, column) position.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("expression must be a nonempty string",
                              position=(1, 0))
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"syntax error: {exc.msg}",
                              position=(exc.lineno or 1, exc.offset or 0)) from exc
    names = set(variables)
    _validate(tree, names)
    code = compile(tree, "<expression>", "eval")
    static = dict(CONSTANTS)
    static.update(FUNCTIONS)

    def evaluate(env) -> float:
        scope = dict(static)
        scope.update(env)
        return float(eval(code, {"__builtins__": {}}, scope))

    return evaluate
