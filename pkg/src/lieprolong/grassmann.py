"""Differential forms on a single coordinate chart.

Wedge monomials are stored as strictly increasing tuples of coordinates
(base < jet < group < parameter), with the permutation sign folded into the
coefficient.  Ideal membership is decided by exact linear algebra over a
bounded space of multiplier forms, and every answer carries a certificate
that recombines to the input.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .symscalar import Coordinate, ScalarPoly

__all__ = [
    "DiffForm",
    "d",
    "wedge",
    "exterior_derivative",
    "FormIdeal",
    "MembershipCertificate",
    "ClosureReport",
    "ideal_reduce",
    "is_closed",
    "sort_sign",
    "monomials_up_to",
]

WedgeMonomial = tuple  # tuple[Coordinate, ...], strictly increasing


def sort_sign(factors: Sequence[Coordinate]) -> tuple[int, WedgeMonomial]:
    """Sort differentials, returning (sign, sorted tuple); sign 0 on repeats."""
    fs = list(factors)
    if len(set(fs)) != len(fs):
        return 0, ()
    sign = 1
    # insertion sort counting transpositions
    for i in range(1, len(fs)):
        j = i
        while j > 0 and fs[j - 1].key > fs[j].key:
            fs[j - 1], fs[j] = fs[j], fs[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(fs)


class DiffForm:
    """A homogeneous differential form with polynomial coefficients."""

    __slots__ = ("degree", "_terms")

    def __init__(self, degree: int, terms: dict | None = None):
        if degree < 0:
            raise ValueError("form degree must be >= 0")
        self.degree = degree
        clean: dict[WedgeMonomial, ScalarPoly] = {}
        for mono, coeff in (terms or {}).items():
            if len(mono) != degree:
                raise ValueError(f"monomial {mono} does not have degree {degree}")
            sign, key = sort_sign(mono)
            if not sign:
                continue
            coeff = ScalarPoly.lift(coeff)
            if sign < 0:
                coeff = -coeff
            val = clean.get(key)
            val = coeff if val is None else val + coeff
            if val:
                clean[key] = val
            else:
                clean.pop(key, None)
        self._terms = clean

    # -- construction ------------------------------------------------------
    @classmethod
    def scalar(cls, p) -> "DiffForm":
        return cls(0, {(): ScalarPoly.lift(p)})

    @classmethod
    def differential(cls, c: Coordinate) -> "DiffForm":
        return cls(1, {(c,): ScalarPoly.const(1)})

    @classmethod
    def zero(cls, degree: int) -> "DiffForm":
        return cls(degree)

    # -- inspection --------------------------------------------------------
    @property
    def terms(self) -> dict[WedgeMonomial, ScalarPoly]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, mono: Sequence[Coordinate]) -> ScalarPoly:
        sign, key = sort_sign(mono)
        if not sign:
            return ScalarPoly()
        c = self._terms.get(key, ScalarPoly())
        return c if sign > 0 else -c

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def coordinates(self) -> set[Coordinate]:
        out = set()
        for m, c in self._terms.items():
            out.update(m)
            out.update(c.variables())
        return out

    def coefficient_degree(self) -> int:
        if not self._terms:
            return -1
        return max(c.degree() for c in self._terms.values())

    def min_degree_in(self, coords: Iterable[Coordinate]) -> int:
        coords = set(coords)
        degs = [c.min_degree_in(coords) for c in self._terms.values()]
        return min(degs) if degs else -1

    def map_coefficients(self, fn) -> "DiffForm":
        return DiffForm(self.degree, {m: fn(c) for m, c in self._terms.items()})

    # -- arithmetic --------------------------------------------------------
    def _check(self, other: "DiffForm"):
        if self.degree != other.degree:
            if self.is_zero() or other.is_zero():
                return
            raise ValueError(f"cannot add forms of degree {self.degree} and {other.degree}")

    def __add__(self, other) -> "DiffForm":
        if not isinstance(other, DiffForm):
            other = DiffForm.scalar(other)
        self._check(other)
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        out = dict(self._terms)
        for m, c in other._terms.items():
            v = out.get(m)
            v = c if v is None else v + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        f = DiffForm(self.degree)
        f._terms = out
        return f

    __radd__ = __add__

    def __neg__(self) -> "DiffForm":
        f = DiffForm(self.degree)
        f._terms = {m: -c for m, c in self._terms.items()}
        return f

    def __sub__(self, other) -> "DiffForm":
        if not isinstance(other, DiffForm):
            other = DiffForm.scalar(other)
        return self + (-other)

    def __rsub__(self, other) -> "DiffForm":
        return (-self) + other

    def __mul__(self, other) -> "DiffForm":
        if isinstance(other, DiffForm):
            return wedge(self, other)
        p = ScalarPoly.lift(other)
        if not p:
            return DiffForm(self.degree)
        f = DiffForm(self.degree)
        f._terms = {m: v for m, c in self._terms.items() if (v := c * p)}
        return f

    __rmul__ = __mul__

    def __xor__(self, other: "DiffForm") -> "DiffForm":
        return wedge(self, other)

    def __truediv__(self, k) -> "DiffForm":
        return self.map_coefficients(lambda c: c / k)

    def subs(self, bindings) -> "DiffForm":
        return self.map_coefficients(lambda c: c.subs(bindings))

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffForm):
            return NotImplemented
        if self.is_zero() and other.is_zero():
            return True
        return self.degree == other.degree and self._terms == other._terms

    def __hash__(self):
        return hash((self.degree, frozenset(self._terms.items())))

    # -- printing ----------------------------------------------------------
    def sorted_terms(self):
        return sorted(self._terms.items(), key=lambda mc: tuple(c.key for c in mc[0]))

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for i, (m, c) in enumerate(self.sorted_terms()):
            body = "^".join(f"d{x.name}" for x in m)
            neg = False
            if len(c) == 1:
                (mono, q), = c.items()
                neg = q < 0
                cc = -c if neg else c
                ctext = cc.to_text()
                if not body:
                    s = ctext
                elif ctext == "1":
                    s = body
                else:
                    s = f"{ctext}*{body}"
            else:
                s = f"({c.to_text()})*{body}" if body else c.to_text()
            if i == 0:
                parts.append(f"-{s}" if neg else s)
            else:
                parts.append(f" - {s}" if neg else f" + {s}")
        return "".join(parts)

    __str__ = to_text

    def __repr__(self) -> str:
        return f"DiffForm({self.degree}, {self.to_text()!r})"


def d(c: Coordinate) -> DiffForm:
    return DiffForm.differential(c)


def wedge(a: DiffForm, b: DiffForm) -> DiffForm:
    out: dict = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            if set(m1) & set(m2):
                continue
            sign, key = sort_sign(m1 + m2)
            v = c1 * c2
            if sign < 0:
                v = -v
            prev = out.get(key)
            out[key] = v if prev is None else prev + v
    f = DiffForm(a.degree + b.degree)
    f._terms = {m: c for m, c in out.items() if c}
    return f


def exterior_derivative(f: DiffForm) -> DiffForm:
    out = DiffForm(f.degree + 1)
    for m, c in f.items():
        for v in sorted(c.variables()):
            if v in m:
                continue
            dc = c.diff(v)
            if dc:
                out = out + DiffForm(f.degree + 1, {(v,) + m: dc})
    return out


# ---------------------------------------------------------------------------
# ideals


def monomials_up_to(coords: Sequence[Coordinate], max_degree: int) -> list[ScalarPoly]:
    """All monomials of total degree <= max_degree, ascending by degree."""
    coords = sorted(coords)
    out = []
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(coords, deg):
            exps: dict = {}
            for c in combo:
                exps[c] = exps.get(c, 0) + 1
            out.append(ScalarPoly.monomial(tuple(sorted(exps.items(), key=lambda ce: ce[0].key))))
    return out


@dataclass
class FormIdeal:
    generators: list[DiffForm]
    coordinates: tuple[Coordinate, ...] = ()

    def __post_init__(self):
        self.generators = list(self.generators)
        for g in self.generators:
            if g.is_zero():
                raise ValueError("ideal generators must be nonzero")
        coords = set(self.coordinates)
        for g in self.generators:
            coords |= g.coordinates()
        self.coordinates = tuple(sorted(coords))

    def default_multiplier_degree(self) -> int:
        return 1 + max((g.coefficient_degree() for g in self.generators), default=0)


@dataclass
class MembershipCertificate:
    """``form = sum(multipliers[k] ^ generators[k]) + remainder``, exactly."""

    form: DiffForm
    generators: list[DiffForm]
    multipliers: list[DiffForm]
    remainder: DiffForm

    @property
    def member(self) -> bool:
        return self.remainder.is_zero()

    def recombine(self) -> DiffForm:
        total = self.remainder
        for m, g in zip(self.multipliers, self.generators):
            total = total + wedge(m, g)
        return total

    def to_json(self) -> dict:
        return {
            "form": self.form.to_text(),
            "multipliers": [m.to_text() for m in self.multipliers],
            "remainder": self.remainder.to_text(),
            "member": self.member,
        }


def _multiplier_basis(degree: int, coords, max_coeff_degree: int) -> list[DiffForm]:
    polys = monomials_up_to(coords, max_coeff_degree)
    out = []
    for wm in itertools.combinations(sorted(coords), degree):
        for p in polys:
            out.append(DiffForm(degree, {wm: p}))
    return out


def _vector(f: DiffForm) -> dict:
    vec = {}
    for wm, c in f.items():
        for m, q in c.items():
            vec[(wm, m)] = q
    return vec


def _col_key(col):
    wm, m = col
    return (tuple(c.key for c in wm), -sum(e for _, e in m), tuple((c.key, -e) for c, e in m))


def ideal_reduce(f: DiffForm, ideal: FormIdeal, max_coeff_degree: int | None = None) -> MembershipCertificate:
    """Reduce ``f`` against ``ideal`` with bounded multipliers.

    Multipliers for a generator of degree k have degree ``deg(f) - k`` and
    polynomial coefficients of total degree <= ``max_coeff_degree``
    (default: one more than the largest generator coefficient degree).  The
    spanning products are echelonized in a fixed order (generator, wedge
    monomial, coefficient monomial ascending), and the remainder is the
    normal form of ``f`` modulo that span.
    """
    if max_coeff_degree is None:
        max_coeff_degree = ideal.default_multiplier_degree()
    coords = tuple(sorted(set(ideal.coordinates) | f.coordinates()))
    gens = ideal.generators
    # echelon rows: pivot column -> (vector, combination)
    echelon: dict = {}
    order: list = []
    for gi, g in enumerate(gens):
        k = f.degree - g.degree
        if k < 0:
            continue
        for mult in _multiplier_basis(k, coords, max_coeff_degree):
            vec = _vector(wedge(mult, g))
            combo = {(gi, _mult_key(mult)): (Fraction(1), mult)}
            vec, combo = _reduce(vec, combo, echelon)
            if not vec:
                continue
            piv = min(vec, key=_col_key)
            scale = vec[piv]
            vec = {c: q / scale for c, q in vec.items()}
            combo = {k2: (q / scale, m) for k2, (q, m) in combo.items()}
            echelon[piv] = (vec, combo)
            order.append(piv)
    target = _vector(f)
    neg, combo = _reduce(dict(target), {}, echelon)
    # combo holds -(multipliers) accumulated by subtraction
    multipliers = [DiffForm(max(f.degree - g.degree, 0)) for g in gens]
    for (gi, _), (q, m) in combo.items():
        multipliers[gi] = multipliers[gi] - m * q
    remainder = DiffForm(f.degree)
    rem_terms: dict = {}
    for (wm, mono), q in neg.items():
        rem_terms.setdefault(wm, {})[mono] = q
    remainder = DiffForm(f.degree, {wm: ScalarPoly(t) for wm, t in rem_terms.items()})
    cert = MembershipCertificate(f, list(gens), multipliers, remainder)
    if cert.recombine() != f:
        raise AssertionError("membership certificate failed to recombine")
    return cert


def _mult_key(m: DiffForm):
    (wm, c), = m.items()
    (mono, _), = c.items()
    return (wm, mono)


def _reduce(vec: dict, combo: dict, echelon: dict):
    """Eliminate echelon pivots from ``vec``; combo tracks the subtracted rows."""
    changed = True
    while changed:
        changed = False
        for col in sorted((c for c in vec if c in echelon), key=_col_key):
            q = vec.get(col)
            if not q:
                continue
            evec, ecombo = echelon[col]
            for c2, v2 in evec.items():
                nv = vec.get(c2, 0) - q * v2
                if nv:
                    vec[c2] = nv
                else:
                    vec.pop(c2, None)
            for k2, (v2, m2) in ecombo.items():
                old = combo.get(k2)
                nv = (old[0] if old else 0) - q * v2
                if nv:
                    combo[k2] = (nv, m2)
                else:
                    combo.pop(k2, None)
            changed = True
    return vec, combo


@dataclass
class ClosureReport:
    ideal: FormIdeal
    certificates: list[MembershipCertificate] = field(default_factory=list)

    @property
    def closed(self) -> bool:
        return all(c.member for c in self.certificates)

    def to_json(self) -> dict:
        return {
            "closed": self.closed,
            "generators": [g.to_text() for g in self.ideal.generators],
            "certificates": [c.to_json() for c in self.certificates],
        }


def is_closed(ideal: FormIdeal, max_coeff_degree: int | None = None) -> ClosureReport:
    """Check d(I) ⊆ I generator by generator."""
    report = ClosureReport(ideal)
    for g in ideal.generators:
        report.certificates.append(ideal_reduce(exterior_derivative(g), ideal, max_coeff_degree))
    return report
