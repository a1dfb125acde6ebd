"""Text grammar shared by polynomials, forms, Lie elements and matrices.

::

    expr    := term (("+" | "-") term)*
    term    := ["-"] power (("*" power) | ("/" NUMBER))*
    power   := atom ("^" (INT | atom))*
    atom    := NUMBER | NAME | "(" expr ")" | "[" expr "," expr "]"
    matrix  := "[" row ("," row)* "]"      row := "[" expr ("," expr)* "]"

``NAME`` resolves, in order, to a declared coordinate, to ``d<coordinate>``
(its differential), or to a Lie generator (names starting with an upper-case
letter).  ``a^n`` with an integer ``n`` is a power; ``a^b`` between forms is
the wedge product.  Brackets ``[x, y]`` are Lie brackets.

Examples: ``3/2*u0^2*u1 - x``, ``du0^dt - u1*dx^dt``,
``[A1,[A1,A0]] + 1/2*[A0,A1]``, ``[[1/4, 0], [0, -1/4]]``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping

from .grassmann import DiffForm, wedge
from .liealg import Generator, LieElement, bracket, gen
from .matrix import Matrix
from .symscalar import Context, ScalarPoly

__all__ = ["ParseError", "Namespace", "parse", "parse_poly", "parse_form", "parse_lie", "parse_matrix"]


class ParseError(ValueError):
    def __init__(self, message: str, column: int | None = None, line: int | None = None, text: str | None = None):
        self.message = message
        self.column = column
        self.line = line
        self.text = text
        super().__init__(self._render())

    def _render(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.column is not None:
            where.append(f"column {self.column}")
        return f"{', '.join(where)}: {self.message}" if where else self.message

    def at_line(self, line: int, column_offset: int = 0) -> "ParseError":
        col = None if self.column is None else self.column + column_offset
        return ParseError(self.message, col, line, self.text)


_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z0-9_]*)|(.))")


@dataclass
class _Tok:
    kind: str  # num, name, op, end
    value: str
    col: int  # 1-based


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        if m.group(1):
            toks.append(_Tok("num", m.group(1), m.start(1) + 1))
        elif m.group(2):
            toks.append(_Tok("name", m.group(2), m.start(2) + 1))
        elif m.group(3):
            ch = m.group(3)
            if ch not in "+-*/^()[],":
                raise ParseError(f"unexpected character {ch!r}", m.start(3) + 1)
            toks.append(_Tok("op", ch, m.start(3) + 1))
        pos = m.end()
    toks.append(_Tok("end", "", len(text) + 1))
    return toks


class Namespace:
    """Name resolution: coordinates, their differentials, Lie generators."""

    def __init__(self, coordinates=(), generators: Mapping[str, Generator] | None = None,
                 allow_generators: bool = True):
        self.context = coordinates if isinstance(coordinates, Context) else Context(coordinates)
        self.generators = dict(generators or {})
        self.allow_generators = allow_generators

    def resolve(self, name: str, col: int):
        c = self.context.get(name)
        if c is not None:
            return ScalarPoly.var(c)
        if name.startswith("d") and len(name) > 1:
            c = self.context.get(name[1:])
            if c is not None:
                return DiffForm.differential(c)
        if name in self.generators:
            return LieElement.generator(self.generators[name])
        if self.allow_generators and name[0].isupper():
            return LieElement.generator(gen(name))
        raise ParseError(f"undeclared coordinate {name!r}", col)


class _Parser:
    def __init__(self, text: str, ns: Namespace):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.ns = ns

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def eat(self, kind: str, value: str | None = None) -> _Tok:
        t = self.tok
        if t.kind != kind or (value is not None and t.value != value):
            want = value or kind
            got = t.value or "end of input"
            raise ParseError(f"expected {want!r}, found {got!r}", t.col)
        self.i += 1
        return t

    def at(self, kind: str, value: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (value is None or t.value == value)

    def parse_all(self):
        if self.at("end"):
            raise ParseError("empty expression", 1)
        v = self.expr()
        if not self.at("end"):
            raise ParseError(f"unexpected {self.tok.value!r}", self.tok.col)
        return v

    def expr(self):
        v = self.term()
        while self.at("op", "+") or self.at("op", "-"):
            op = self.eat("op")
            w = self.term()
            v = _combine(v, w, op.value, op.col)
        return v

    def term(self):
        neg = False
        if self.at("op", "-"):
            self.eat("op")
            neg = True
        elif self.at("op", "+"):
            self.eat("op")
        v = self.power()
        while self.at("op", "*") or self.at("op", "/"):
            op = self.eat("op")
            if op.value == "/":
                t = self.eat("num")
                den = int(t.value)
                if den == 0:
                    raise ParseError("division by zero", t.col)
                v = _scale(v, Fraction(1, den), t.col)
            else:
                w = self.power()
                v = _mul(v, w, op.col)
        return _scale(v, -1, 0) if neg else v

    def power(self):
        v = self.atom()
        while self.at("op", "^"):
            op = self.eat("op")
            if self.at("num"):
                n = int(self.eat("num").value)
                if not isinstance(v, (Fraction, ScalarPoly)):
                    raise ParseError("only scalars can be raised to a power", op.col)
                v = ScalarPoly.lift(v) ** n
            else:
                w = self.atom()
                v = _wedge(v, w, op.col)
        return v

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.eat("num")
            return Fraction(int(t.value))
        if t.kind == "name":
            self.eat("name")
            return self.ns.resolve(t.value, t.col)
        if self.at("op", "("):
            self.eat("op")
            v = self.expr()
            self.eat("op", ")")
            return v
        if self.at("op", "["):
            self.eat("op")
            a = self.expr()
            self.eat("op", ",")
            b = self.expr()
            self.eat("op", "]")
            if not isinstance(a, LieElement) or not isinstance(b, LieElement):
                raise ParseError("brackets need Lie elements on both sides", t.col)
            return bracket(a, b)
        raise ParseError(f"unexpected {t.value or 'end of input'!r}", t.col)

    def matrix(self) -> Matrix:
        self.eat("op", "[")
        rows = []
        while True:
            self.eat("op", "[")
            row = [self.expr()]
            while self.at("op", ","):
                self.eat("op")
                row.append(self.expr())
            self.eat("op", "]")
            for v in row:
                if not isinstance(v, (Fraction, ScalarPoly)):
                    raise ParseError("matrix entries must be scalars", self.tok.col)
            rows.append(row)
            if self.at("op", ","):
                self.eat("op")
                continue
            break
        self.eat("op", "]")
        if not self.at("end"):
            raise ParseError(f"unexpected {self.tok.value!r}", self.tok.col)
        if len({len(r) for r in rows}) != 1:
            raise ParseError("matrix rows have different lengths", 1)
        return Matrix(rows)


def _kind(v) -> str:
    if isinstance(v, (Fraction, ScalarPoly)):
        return "scalar"
    if isinstance(v, DiffForm):
        return "form"
    return "lie"


def _combine(a, b, op: str, col: int):
    ka, kb = _kind(a), _kind(b)
    if ka == "scalar" and kb == "scalar":
        a, b = ScalarPoly.lift(a), ScalarPoly.lift(b)
    elif {ka, kb} <= {"scalar", "form"}:
        a = a if ka == "form" else DiffForm.scalar(a)
        b = b if kb == "form" else DiffForm.scalar(b)
        if a.degree != b.degree and not (a.is_zero() or b.is_zero()):
            raise ParseError(f"cannot add forms of degree {a.degree} and {b.degree}", col)
    elif ka != kb:
        if ka == "scalar" and ScalarPoly.lift(a).is_zero():
            return b if op == "+" else _scale(b, -1, col)
        if kb == "scalar" and ScalarPoly.lift(b).is_zero():
            return a
        raise ParseError(f"cannot add {ka} and {kb}", col)
    return a + b if op == "+" else a - b


def _scale(v, k, col):
    if isinstance(v, Fraction):
        return v * k
    return v * k


def _mul(a, b, col):
    ka, kb = _kind(a), _kind(b)
    if ka == "scalar":
        return b * ScalarPoly.lift(a) if kb != "scalar" else ScalarPoly.lift(a) * ScalarPoly.lift(b)
    if kb == "scalar":
        return a * ScalarPoly.lift(b)
    if ka == "form" and kb == "form":
        return wedge(a, b)
    raise ParseError(f"cannot multiply {ka} by {kb}", col)


def _wedge(a, b, col):
    ka, kb = _kind(a), _kind(b)
    if "lie" in (ka, kb):
        raise ParseError("wedge needs forms", col)
    a = a if ka == "form" else DiffForm.scalar(a)
    b = b if kb == "form" else DiffForm.scalar(b)
    return wedge(a, b)


def parse(text: str, namespace: Namespace | None = None):
    return _Parser(text, namespace or Namespace()).parse_all()


def _expect(v, kind: str, builder: Callable):
    k = _kind(v)
    if k == kind:
        return builder(v)
    if k == "scalar" and ScalarPoly.lift(v).is_zero():
        return builder(None)
    if kind == "form" and k == "scalar":
        return DiffForm.scalar(v)
    raise ParseError(f"expected a {kind}, got a {k}", 1)


def parse_poly(text: str, coordinates=()) -> ScalarPoly:
    ns = coordinates if isinstance(coordinates, Namespace) else Namespace(coordinates, allow_generators=False)
    v = parse(text, ns)
    if _kind(v) != "scalar":
        raise ParseError(f"expected a polynomial, got a {_kind(v)}", 1)
    return ScalarPoly.lift(v)


def parse_form(text: str, coordinates=()) -> DiffForm:
    ns = coordinates if isinstance(coordinates, Namespace) else Namespace(coordinates, allow_generators=False)
    v = parse(text, ns)
    return _expect(v, "form", lambda x: x if x is not None else DiffForm(0))


def parse_lie(text: str, coordinates=(), generators=None) -> LieElement:
    ns = coordinates if isinstance(coordinates, Namespace) else Namespace(coordinates, generators)
    v = parse(text, ns)
    return _expect(v, "lie", lambda x: x if x is not None else LieElement())


def parse_matrix(text: str, coordinates=()) -> Matrix:
    ns = coordinates if isinstance(coordinates, Namespace) else Namespace(coordinates, allow_generators=False)
    return _Parser(text, ns).matrix()
