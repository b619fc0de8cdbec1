"""Tiny arithmetic expressions in one variable ``x``.

Grammar: numbers, ``x``, ``+ - * / ^`` (``^`` is exponentiation),
parentheses and the functions ``log``, ``exp``, ``sqrt``. Parsing goes
through :mod:`ast` with a node whitelist; nothing is ever ``eval``-ed.
The compiled expression evaluates on floats and on jets, and domain errors
name the sub-expression that failed.
"""

from __future__ import annotations

import ast

from . import numkit
from .numkit import DomainError

_FUNCS = {"log": numkit.log, "exp": numkit.exp, "sqrt": numkit.sqrt}


class ExpressionError(ValueError):
    pass


class Expression:
    def __init__(self, source: str):
        self.source = source
        try:
            tree = ast.parse(source.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
        _validate(tree.body, source)
        self._tree = tree.body

    def __call__(self, x):
        return _eval(self._tree, x)

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"


def _validate(node: ast.AST, source: str) -> None:
    if isinstance(node, ast.BinOp):
        if not isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
            raise ExpressionError(f"operator not allowed in {source!r}")
        _validate(node.left, source)
        _validate(node.right, source)
    elif isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise ExpressionError(f"operator not allowed in {source!r}")
        _validate(node.operand, source)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(f"bad constant {node.value!r} in {source!r}")
    elif isinstance(node, ast.Name):
        if node.id != "x":
            raise ExpressionError(f"unknown name {node.id!r} in {source!r}; only x is allowed")
    elif isinstance(node, ast.Call):
        if not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ExpressionError(f"unknown function in {source!r}; allowed: log, exp, sqrt")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(f"{node.func.id} takes exactly one argument")
        _validate(node.args[0], source)
    else:
        raise ExpressionError(f"unsupported syntax {ast.unparse(node)!r} in {source!r}")


def _eval(node: ast.AST, x):
    if isinstance(node, ast.Constant):
        return float(node.value)
    if isinstance(node, ast.Name):
        return x
    if isinstance(node, ast.UnaryOp):
        v = _eval(node.operand, x)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        try:
            if isinstance(node.op, ast.Add):
                return a + b
            if isinstance(node.op, ast.Sub):
                return a - b
            if isinstance(node.op, ast.Mult):
                return a * b
            if isinstance(node.op, ast.Div):
                if numkit.value_of(b) == 0.0:
                    raise DomainError("division by zero")
                return a / b
            return _pow(a, b)
        except DomainError as exc:
            raise DomainError(exc.message, expr=_text(node)) from None
    if isinstance(node, ast.Call):
        arg = _eval(node.args[0], x)
        try:
            return _FUNCS[node.func.id](arg)
        except DomainError as exc:
            raise DomainError(exc.message, expr=_text(node)) from None
    raise ExpressionError(f"unsupported node {ast.dump(node)}")


def _pow(a, b):
    if isinstance(b, float):
        if isinstance(a, float):
            if a < 0 and b != int(b):
                raise DomainError(f"non-integer power of negative base {a!r}")
            if a == 0 and b < 0:
                raise DomainError("division by zero")
            return a**b
        return a**b
    if isinstance(a, float):
        return a**b
    return numkit.exp(b * numkit.log(a))


def _text(node: ast.AST) -> str:
    return ast.unparse(node).replace("**", "^")


def parse(source: str) -> Expression:
    return Expression(source)
