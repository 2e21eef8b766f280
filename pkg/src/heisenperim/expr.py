"""Tiny expression grammar for graph surfaces: ``+ - * / ^ abs``, numbers, ``x``, ``y``.

Input is checked against a token whitelist before sympy sees it, then
differentiated symbolically and compiled with ``lambdify``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(abs|x|y)|([-+*/^()]))")
X, Y = sp.symbols("x y", real=True)


class ExpressionError(ValueError):
    pass


def _check_tokens(text: str) -> None:
    pos = 0
    text = text.rstrip()
    if not text:
        raise ExpressionError("empty expression")
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExpressionError(f"unexpected input at position {pos}: {text[pos:pos + 10]!r}")
        pos = m.end()


def _numeric(e: sp.Expr) -> sp.Expr:
    # second derivatives of abs produce delta terms; they vanish almost everywhere
    return e.replace(sp.DiracDelta, lambda *args: sp.Integer(0))


def _compile(e: sp.Expr) -> Callable:
    fn = sp.lambdify((X, Y), _numeric(e), modules="numpy")

    def call(x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return np.broadcast_to(np.asarray(fn(x, y), float), np.broadcast(x, y).shape).copy()

    return call


@dataclass(frozen=True)
class Field:
    text: str
    expr: sp.Expr
    f: Callable
    fx: Callable
    fy: Callable
    fxx: Callable
    fxy: Callable
    fyy: Callable

    def grad(self, x, y):
        return self.fx(x, y), self.fy(x, y)

    def hess(self, x, y):
        return self.fxx(x, y), self.fxy(x, y), self.fyy(x, y)


def parse_field(text: str) -> Field:
    _check_tokens(text)
    try:
        e = parse_expr(
            text,
            local_dict={"x": X, "y": Y, "abs": sp.Abs},
            global_dict={"Integer": sp.Integer, "Float": sp.Float, "Rational": sp.Rational},
            transformations=standard_transformations + (convert_xor,),
            evaluate=True,
        )
    except Exception as exc:  # sympy raises a zoo of types on bad syntax
        raise ExpressionError(f"cannot parse {text!r}: {exc}") from None
    if not isinstance(e, sp.Expr) or e.free_symbols - {X, Y}:
        raise ExpressionError(f"expression {text!r} must depend only on x and y")
    ex, ey = sp.diff(e, X), sp.diff(e, Y)
    return Field(
        text,
        e,
        _compile(e),
        _compile(ex),
        _compile(ey),
        _compile(sp.diff(ex, X)),
        _compile(sp.diff(ex, Y)),
        _compile(sp.diff(ey, Y)),
    )
