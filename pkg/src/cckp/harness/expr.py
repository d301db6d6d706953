"""Arithmetic expressions over instance sizes, e.g. ``"10*n**2*log(n)"``."""

from __future__ import annotations

import ast
import math
import operator

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {"log": math.log, "sqrt": math.sqrt, "ceil": math.ceil, "floor": math.floor}


def evaluate(expr, **names: float) -> float:
    """Evaluate a number or an arithmetic expression in the given names.

    Only numbers, the names passed in, ``+ - * / **`` and the functions
    ``log``, ``sqrt``, ``ceil`` and ``floor`` are allowed.
    """
    if isinstance(expr, (int, float)):
        return expr
    try:
        tree = ast.parse(str(expr).replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"malformed expression {expr!r}") from exc

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id in names:
            return names[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -ev(node.operand)
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1 and not node.keywords):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported element in expression {expr!r}: {ast.dump(node)}")

    return ev(tree)
