"""Exact scalar arithmetic: sparse multivariate polynomials with rational
coefficients over named coordinates, plus a fraction-free linear solver.

Every other module builds on :class:`ScalarPoly`; nothing here ever touches
floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Union

__all__ = [
    "Coordinate",
    "base",
    "jet",
    "group",
    "parameter",
    "Context",
    "ScalarPoly",
    "Rational",
    "UnknownCoordinateError",
    "CyclicBindingError",
    "partial_derivative",
    "substitute",
    "LinearSystem",
    "LinearSolution",
    "solve_linear",
    "format_rational",
]

KINDS = ("base", "jet", "group", "parameter")
_KIND_RANK = {k: i for i, k in enumerate(KINDS)}

Rational = Union[int, Fraction]


class UnknownCoordinateError(KeyError):
    pass


class CyclicBindingError(ValueError):
    pass


@dataclass(frozen=True)
class Coordinate:
    """A named coordinate; ordering is base < jet < group < parameter."""

    name: str
    kind: str = "parameter"
    position: int = 0

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown coordinate kind {self.kind!r}")

    @property
    def key(self) -> tuple:
        return (_KIND_RANK[self.kind], self.position, self.name)

    def __lt__(self, other: "Coordinate") -> bool:
        return self.key < other.key

    def __le__(self, other: "Coordinate") -> bool:
        return self.key <= other.key

    def __gt__(self, other: "Coordinate") -> bool:
        return self.key > other.key

    def __ge__(self, other: "Coordinate") -> bool:
        return self.key >= other.key

    def __repr__(self) -> str:
        return f"Coordinate({self.name!r}, {self.kind!r}, {self.position})"

    def __str__(self) -> str:
        return self.name

    @property
    def order(self) -> int:
        """Derivative order of a jet coordinate."""
        if self.kind != "jet":
            raise ValueError(f"{self.name} is not a jet coordinate")
        return self.position


def base(name: str, position: int) -> Coordinate:
    return Coordinate(name, "base", position)


def jet(variable: str, order: int) -> Coordinate:
    if order < 0:
        raise ValueError("jet order must be >= 0")
    return Coordinate(f"{variable}{order}", "jet", order)


def group(index: int) -> Coordinate:
    return Coordinate(f"a{index}", "group", index)


def parameter(name: str, position: int = 0) -> Coordinate:
    return Coordinate(name, "parameter", position)


class Context:
    """Name lookup table for coordinates; names must be unique."""

    def __init__(self, coordinates: Iterable[Coordinate] = ()):
        self._by_name: dict[str, Coordinate] = {}
        for c in coordinates:
            self.add(c)

    def add(self, c: Coordinate) -> Coordinate:
        old = self._by_name.get(c.name)
        if old is not None and old != c:
            raise ValueError(f"coordinate name {c.name!r} already declared as {old!r}")
        self._by_name[c.name] = c
        return c

    def __getitem__(self, name: str) -> Coordinate:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownCoordinateError(name) from None

    def get(self, name: str):
        return self._by_name.get(name)

    def __contains__(self, item) -> bool:
        if isinstance(item, Coordinate):
            return self._by_name.get(item.name) == item
        return item in self._by_name

    def __iter__(self):
        return iter(sorted(self._by_name.values()))

    def __len__(self) -> int:
        return len(self._by_name)

    def resolve(self, c: Coordinate | str) -> Coordinate:
        if isinstance(c, str):
            return self[c]
        if c not in self:
            raise UnknownCoordinateError(c.name)
        return c

    def merged(self, other: Iterable[Coordinate]) -> "Context":
        out = Context(self)
        for c in other:
            out.add(c)
        return out


# A monomial is a tuple of (coordinate, exponent) pairs sorted by coordinate.
Monomial = tuple

ONE_MONOMIAL: Monomial = ()


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for c, e in b:
        exps[c] = exps.get(c, 0) + e
    return tuple(sorted(exps.items(), key=lambda ce: ce[0].key))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_print_key(m: Monomial) -> tuple:
    # graded lex, largest first
    return (-_mono_degree(m), tuple((c.key, -e) for c, e in m))


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


class ScalarPoly:
    """Sparse polynomial with :class:`~fractions.Fraction` coefficients.

    Instances are immutable; the term map never stores zero coefficients.

    >>> u0 = ScalarPoly.var(jet("u", 0))
    >>> str(u0**2 / 2 + 1)
    '1/2*u0^2 + 1'
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Rational] | None = None):
        clean = {}
        if terms:
            for m, c in terms.items():
                c = _as_fraction(c)
                if c:
                    clean[m] = c
        self._terms: dict[Monomial, Fraction] = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "ScalarPoly":
        p = cls.__new__(cls)
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def const(cls, value: Rational) -> "ScalarPoly":
        value = _as_fraction(value)
        return cls._raw({ONE_MONOMIAL: value} if value else {})

    @classmethod
    def var(cls, c: Coordinate, exponent: int = 1) -> "ScalarPoly":
        if exponent == 0:
            return cls.const(1)
        return cls._raw({((c, exponent),): Fraction(1)})

    @classmethod
    def monomial(cls, mono: Monomial, coeff: Rational = 1) -> "ScalarPoly":
        return cls({mono: coeff})

    @staticmethod
    def lift(x) -> "ScalarPoly":
        if isinstance(x, ScalarPoly):
            return x
        if isinstance(x, Coordinate):
            return ScalarPoly.var(x)
        return ScalarPoly.const(x)

    # -- inspection -------------------------------------------------------
    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_constant(self) -> bool:
        return not self._terms or (len(self._terms) == 1 and ONE_MONOMIAL in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return self._terms.get(ONE_MONOMIAL, Fraction(0))

    def constant_term(self) -> Fraction:
        return self._terms.get(ONE_MONOMIAL, Fraction(0))

    def variables(self) -> set[Coordinate]:
        return {c for m in self._terms for c, _ in m}

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(_mono_degree(m) for m in self._terms)

    def min_degree(self) -> int:
        if not self._terms:
            return -1
        return min(_mono_degree(m) for m in self._terms)

    def degree_in(self, coords: Iterable[Coordinate] | Coordinate) -> int:
        if isinstance(coords, Coordinate):
            coords = (coords,)
        cs = set(coords)
        if not self._terms:
            return -1
        return max(sum(e for c, e in m if c in cs) for m in self._terms)

    def min_degree_in(self, coords: Iterable[Coordinate]) -> int:
        cs = set(coords)
        if not self._terms:
            return -1
        return min(sum(e for c, e in m if c in cs) for m in self._terms)

    def split(self, coords: Iterable[Coordinate]) -> dict[Monomial, "ScalarPoly"]:
        """Group terms by their monomial in ``coords``; values are polys in the rest."""
        cs = set(coords)
        out: dict[Monomial, dict] = {}
        for m, c in self._terms.items():
            inner = tuple(ce for ce in m if ce[0] in cs)
            outer = tuple(ce for ce in m if ce[0] not in cs)
            out.setdefault(inner, {})[outer] = c
        return {k: ScalarPoly._raw(v) for k, v in out.items()}

    def coefficient(self, c: Coordinate, exponent: int = 1) -> "ScalarPoly":
        """Coefficient of ``c**exponent`` (other powers of ``c`` excluded)."""
        out = {}
        for m, v in self._terms.items():
            e = dict(m).get(c, 0)
            if e == exponent:
                out[tuple(ce for ce in m if ce[0] != c)] = v
        return ScalarPoly._raw(out)

    def content(self) -> Fraction:
        """Positive rational content; the primitive part has coprime integer coefficients."""
        if not self._terms:
            return Fraction(0)
        from math import gcd

        num = 0
        den = 1
        for v in self._terms.values():
            num = gcd(num, v.numerator)
            den = den * v.denominator // gcd(den, v.denominator)
        return Fraction(num, den)

    def monomial_content(self) -> Monomial:
        """Largest monomial dividing every term."""
        if not self._terms:
            return ONE_MONOMIAL
        it = iter(self._terms)
        common = dict(next(it))
        for m in it:
            md = dict(m)
            for c in list(common):
                e = min(common[c], md.get(c, 0))
                if e:
                    common[c] = e
                else:
                    del common[c]
            if not common:
                break
        return tuple(sorted(common.items(), key=lambda ce: ce[0].key))

    def leading(self) -> tuple[Monomial, Fraction]:
        m = min(self._terms, key=_mono_print_key)
        return m, self._terms[m]

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> "ScalarPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not other._terms:
            return self
        if not self._terms:
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v = v + c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return ScalarPoly._raw(out)

    __radd__ = __add__

    def __neg__(self) -> "ScalarPoly":
        return ScalarPoly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "ScalarPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "ScalarPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other) -> "ScalarPoly":
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if not self._terms or not other._terms:
            return ScalarPoly._raw({})
        if other.is_constant():
            k = other.constant_value()
            if k == 1:
                return self
            return ScalarPoly._raw({m: c * k for m, c in self._terms.items()})
        if self.is_constant():
            return other * self
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                v = out.get(m, 0) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        return ScalarPoly._raw(out)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "ScalarPoly":
        if isinstance(other, ScalarPoly):
            if not other.is_constant():
                q, r = self.divmod(other)
                if r:
                    raise ValueError(f"{other} does not divide {self}")
                return q
            other = other.constant_value()
        k = _as_fraction(other)
        if not k:
            raise ZeroDivisionError("division of polynomial by zero")
        return ScalarPoly._raw({m: c / k for m, c in self._terms.items()})

    def __pow__(self, n: int) -> "ScalarPoly":
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a non-negative integer")
        out = ScalarPoly.const(1)
        b = self
        while n:
            if n & 1:
                out = out * b
            b = b * b
            n >>= 1
        return out

    def divmod(self, divisor: "ScalarPoly") -> tuple["ScalarPoly", "ScalarPoly"]:
        """Multivariate division by a single polynomial (graded lex order).

        The remainder is zero exactly when ``divisor`` divides ``self``.
        """
        if divisor.is_zero():
            raise ZeroDivisionError("division by zero polynomial")
        lm, lc = divisor.leading()
        ld = dict(lm)
        q = ScalarPoly()
        r = ScalarPoly()
        p = self
        while p:
            m, c = p.leading()
            md = dict(m)
            if all(md.get(v, 0) >= e for v, e in ld.items()):
                quot = {v: md.get(v, 0) - ld.get(v, 0) for v in md}
                qm = tuple(sorted(((v, e) for v, e in quot.items() if e), key=lambda ce: ce[0].key))
                t = ScalarPoly._raw({qm: c / lc})
                q = q + t
                p = p - t * divisor
            else:
                t = ScalarPoly._raw({m: c})
                r = r + t
                p = p - t
        return q, r

    # -- calculus and substitution ---------------------------------------
    def diff(self, c: Coordinate) -> "ScalarPoly":
        out: dict = {}
        for m, v in self._terms.items():
            md = dict(m)
            e = md.get(c, 0)
            if not e:
                continue
            if e == 1:
                del md[c]
            else:
                md[c] = e - 1
            nm = tuple(sorted(md.items(), key=lambda ce: ce[0].key))
            out[nm] = out.get(nm, 0) + v * e
        return ScalarPoly({k: v for k, v in out.items()})

    def subs(self, bindings: Mapping[Coordinate, "ScalarPoly | Rational"]) -> "ScalarPoly":
        """Simultaneous substitution of coordinates by polynomials."""
        if not bindings:
            return self
        b = {c: ScalarPoly.lift(v) for c, v in bindings.items()}
        powers: dict[tuple, ScalarPoly] = {}
        out = ScalarPoly()
        for m, coeff in self._terms.items():
            keep = []
            term = ScalarPoly.const(coeff)
            for c, e in m:
                if c in b:
                    key = (c, e)
                    pw = powers.get(key)
                    if pw is None:
                        pw = b[c] ** e
                        powers[key] = pw
                    term = term * pw
                else:
                    keep.append((c, e))
            if keep:
                term = term * ScalarPoly._raw({tuple(keep): Fraction(1)})
            out = out + term
        return out

    def evaluate(self, values: Mapping[Coordinate, Rational]) -> Fraction:
        p = self.subs(values)
        return p.constant_value()

    def normalized(self) -> "ScalarPoly":
        """Divide by rational content, making the leading coefficient positive."""
        if not self._terms:
            return self
        k = self.content()
        _, lc = self.leading()
        if lc < 0:
            k = -k
        return self / k

    # -- comparison, hashing, printing -----------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, ScalarPoly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == ScalarPoly.const(other)._terms
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def sorted_terms(self) -> list[tuple[Monomial, Fraction]]:
        return sorted(self._terms.items(), key=lambda mc: _mono_print_key(mc[0]))

    def __str__(self) -> str:
        return self.to_text()

    def __repr__(self) -> str:
        return f"ScalarPoly({self.to_text()!r})"

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            neg = c < 0
            a = -c if neg else c
            body = format_monomial(m)
            if not body:
                s = format_rational(a)
            elif a == 1:
                s = body
            else:
                s = f"{format_rational(a)}*{body}"
            if i == 0:
                parts.append(f"-{s}" if neg else s)
            else:
                parts.append(f" - {s}" if neg else f" + {s}")
        return "".join(parts)

    def is_single_term(self) -> bool:
        return len(self._terms) <= 1


def format_monomial(m: Monomial) -> str:
    return "*".join(c.name if e == 1 else f"{c.name}^{e}" for c, e in m)


def _coerce(x):
    if isinstance(x, ScalarPoly):
        return x
    if isinstance(x, (int, Fraction)) and not isinstance(x, bool):
        return ScalarPoly.const(x)
    if isinstance(x, Coordinate):
        return ScalarPoly.var(x)
    return NotImplemented


def partial_derivative(p: ScalarPoly, c: Coordinate | str, context: Context | None = None) -> ScalarPoly:
    """Formal partial derivative; ``c`` must be known to ``context`` when one is given."""
    if context is not None:
        c = context.resolve(c)
    elif isinstance(c, str):
        raise UnknownCoordinateError(c)
    return p.diff(c)


def substitute(p: ScalarPoly, bindings: Mapping[Coordinate, ScalarPoly]) -> ScalarPoly:
    """Simultaneous substitution; raises :class:`CyclicBindingError` on cycles.

    A binding that mentions its own or another bound coordinate is only
    accepted when the dependency graph is acyclic (then it is resolved to a
    fixpoint, so chained bindings compose).
    """
    b = {c: ScalarPoly.lift(v) for c, v in bindings.items()}
    deps = {c: {d for d in v.variables() if d in b} for c, v in b.items()}
    # identity bindings are harmless
    for c in deps:
        if b[c] == ScalarPoly.var(c):
            deps[c] = set()
    state: dict[Coordinate, int] = {}

    def visit(c):
        s = state.get(c)
        if s == 1:
            raise CyclicBindingError(f"cyclic binding through {c.name}")
        if s == 2:
            return
        state[c] = 1
        for d in deps[c]:
            visit(d)
        state[c] = 2

    for c in b:
        visit(c)
    resolved: dict[Coordinate, ScalarPoly] = {}
    for c in _topo(deps):
        v = b[c]
        if deps[c]:
            v = v.subs({d: resolved[d] for d in deps[c]})
        resolved[c] = v
    return p.subs(resolved)


def _topo(deps):
    order, seen = [], set()

    def go(c):
        if c in seen:
            return
        seen.add(c)
        for d in sorted(deps[c]):
            go(d)
        order.append(c)

    for c in sorted(deps):
        go(c)
    return order


# ---------------------------------------------------------------------------
# linear solving


@dataclass(frozen=True)
class LinearSystem:
    unknowns: tuple[Coordinate, ...]
    equations: tuple[ScalarPoly, ...]

    def __init__(self, unknowns: Iterable[Coordinate], equations: Iterable[ScalarPoly]):
        object.__setattr__(self, "unknowns", tuple(unknowns))
        object.__setattr__(self, "equations", tuple(ScalarPoly.lift(e) for e in equations))
        us = set(self.unknowns)
        if len(us) != len(self.unknowns):
            raise ValueError("duplicate unknowns")
        for e in self.equations:
            for m, _ in e.items():
                if sum(x for c, x in m if c in us) > 1:
                    raise ValueError(f"equation is not linear in the unknowns: {e}")


@dataclass
class LinearSolution:
    """Result of :func:`solve_linear`.

    ``values`` maps each pivot unknown to a polynomial in the free unknowns (and
    the coefficient coordinates).  Pivots whose value is only a rational
    function land in ``quotients`` as ``(numerator, denominator)``.
    """

    values: dict[Coordinate, ScalarPoly] = field(default_factory=dict)
    quotients: dict[Coordinate, tuple[ScalarPoly, ScalarPoly]] = field(default_factory=dict)
    free: list[Coordinate] = field(default_factory=list)
    certificate: ScalarPoly | None = None

    @property
    def consistent(self) -> bool:
        return self.certificate is None

    @property
    def underdetermined(self) -> bool:
        return bool(self.free)


def _row_of(eq: ScalarPoly, unknowns) -> tuple[dict, ScalarPoly]:
    us = set(unknowns)
    coeffs: dict[Coordinate, ScalarPoly] = {}
    rest = ScalarPoly()
    for u in unknowns:
        cu = eq.coefficient(u, 1)
        if cu:
            coeffs[u] = cu
    for m, c in eq.items():
        if not any(v in us for v, _ in m):
            rest = rest + ScalarPoly._raw({m: c})
    return coeffs, rest


def _primitive(coeffs: dict, rest: ScalarPoly):
    polys = list(coeffs.values()) + ([rest] if rest else [])
    if not polys:
        return coeffs, rest
    from math import gcd

    num, den = 0, 1
    for p in polys:
        k = p.content()
        num = gcd(num, k.numerator)
        den = den * k.denominator // gcd(den, k.denominator)
    k = Fraction(num, den)
    if k == 1 or not k:
        return coeffs, rest
    return {u: c / k for u, c in coeffs.items()}, rest / k


def solve_linear(system: LinearSystem) -> LinearSolution:
    """Fraction-free Gaussian elimination over the polynomial coefficient ring.

    Columns are processed in unknown order; within a column the pivot row is
    the one whose coefficient has the lowest total degree (ties: earliest
    row).  Unknowns without a pivot are reported as free.  An equation that
    reduces to ``0 = nonzero`` yields the contradictory row as certificate.
    """
    unknowns = list(system.unknowns)
    rows = [_row_of(e, unknowns) for e in system.equations]
    rows = [r for r in rows if r[0] or r[1]]
    pivots: list[tuple[Coordinate, dict, ScalarPoly]] = []
    for u in unknowns:
        cands = [i for i, (cf, _) in enumerate(rows) if u in cf]
        if not cands:
            continue
        i = min(cands, key=lambda k: (rows[k][0][u].degree(), len(rows[k][0][u]), k))
        pc, pr = rows.pop(i)
        a = pc[u]
        new_rows = []
        for cf, rs in rows:
            b = cf.get(u)
            if b is None:
                new_rows.append((cf, rs))
                continue
            ncf = {}
            for v in set(cf) | set(pc):
                val = cf.get(v, ScalarPoly()) * a - pc.get(v, ScalarPoly()) * b
                if val:
                    ncf[v] = val
            nrs = rs * a - pr * b
            if ncf or nrs:
                new_rows.append(_primitive(ncf, nrs))
        rows = new_rows
        # also clear u from earlier pivot rows (reduced echelon form)
        reduced = []
        for pu, cf, rs in pivots:
            b = cf.get(u)
            if b is None:
                reduced.append((pu, cf, rs))
                continue
            ncf = {}
            for v in set(cf) | set(pc):
                val = cf.get(v, ScalarPoly()) * a - pc.get(v, ScalarPoly()) * b
                if val:
                    ncf[v] = val
            ncf, nrs = _primitive(ncf, rs * a - pr * b)
            reduced.append((pu, ncf, nrs))
        pivots = reduced
        pivots.append((u, pc, pr))
    result = LinearSolution()
    for cf, rs in rows:
        if not cf and rs:
            result.certificate = rs
            return result
    pivot_set = {pu for pu, _, _ in pivots}
    result.free = [u for u in unknowns if u not in pivot_set]
    for pu, cf, rs in pivots:
        a = cf[pu]
        num = -rs
        for v, c in cf.items():
            if v != pu:
                num = num - c * ScalarPoly.var(v)
        if a.is_constant():
            result.values[pu] = num / a.constant_value()
        else:
            q, r = num.divmod(a)
            if r:
                result.quotients[pu] = (num, a)
            else:
                result.values[pu] = q
    return result
