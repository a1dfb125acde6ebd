"""Free Lie algebras over named generators.

Normal forms use the Lyndon basis (a Hall basis) for the generator order
A0 < A1 < A2 < ...; each basis word carries its standard bracketing, e.g.
the word A0 A0 A1 is ``[A0,[A0,A1]]`` and A0 A1 A1 is ``[[A0,A1],A1]``.
Brackets of basis elements are computed by expanding into the free
associative algebra and reading off Lyndon coefficients (smallest word
first), which is exact and cached per pair of words.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .symscalar import Coordinate, ScalarPoly

__all__ = [
    "Generator",
    "gen",
    "LieMonomial",
    "LieElement",
    "bracket",
    "RelationSet",
    "RewriteBudgetExceeded",
    "normalize_modulo",
    "StructureConstants",
    "ValidationReport",
    "validate_structure_constants",
    "SpanReport",
    "subalgebra_span",
    "substitute_generators",
    "is_lyndon",
    "lyndon_words",
]


@dataclass(frozen=True, order=True)
class Generator:
    index: int
    name: str

    def __str__(self) -> str:
        return self.name

    def __repr__(self) -> str:
        return f"Generator({self.name!r})"


_GEN_RE = re.compile(r"^([A-Za-z_]+?)(\d+)$")


def gen(name: str | int, index: int | None = None) -> Generator:
    """``gen(0)`` is A0; ``gen("A3")`` parses the index from the name."""
    if isinstance(name, int):
        return Generator(name, f"A{name}")
    if index is None:
        m = _GEN_RE.match(name)
        index = int(m.group(2)) if m else 10**6
    return Generator(index, name)


# ---------------------------------------------------------------------------
# Lyndon words


def is_lyndon(w: Sequence) -> bool:
    n = len(w)
    if n == 0:
        return False
    w = tuple(w)
    return all(w < w[i:] + w[:i] for i in range(1, n)) and all(w < w[i:] for i in range(1, n))


def standard_factorization(w: tuple) -> tuple[tuple, tuple]:
    """w = uv with v the longest proper Lyndon suffix."""
    for i in range(1, len(w)):
        if is_lyndon(w[i:]):
            return w[:i], w[i:]
    raise ValueError("word of length 1 has no factorization")


def lyndon_words(alphabet: Sequence, length: int) -> list[tuple]:
    """Lyndon words of exactly ``length`` letters, lexicographic (Duval)."""
    a = sorted(alphabet)
    k = len(a)
    out = []
    if k == 0 or length <= 0:
        return out
    w = [-1]
    while w:
        w[-1] += 1
        m = len(w)
        if m == length:
            out.append(tuple(a[i] for i in w))
        while len(w) < length:
            w.append(w[len(w) - m])
        while w and w[-1] == k - 1:
            w.pop()
    return out


@lru_cache(maxsize=None)
def _assoc(w: tuple) -> dict:
    """Expansion of the standard bracketing of Lyndon word ``w``."""
    if len(w) == 1:
        return {w: Fraction(1)}
    u, v = standard_factorization(w)
    return _commutator(_assoc(u), _assoc(v))


def _commutator(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, x in p.items():
        for b, y in q.items():
            k1 = a + b
            k2 = b + a
            out[k1] = out.get(k1, 0) + x * y
            out[k2] = out.get(k2, 0) - x * y
    return {k: v for k, v in out.items() if v}


def _decompose(p: dict) -> dict:
    """Lyndon coordinates of a Lie polynomial given in the associative algebra."""
    p = dict(p)
    out: dict = {}
    while p:
        w = min(p)
        c = p[w]
        if not is_lyndon(w):
            raise AssertionError(f"not a Lie polynomial (minimal word {w} is not Lyndon)")
        out[w] = out.get(w, 0) + c
        for k, v in _assoc(w).items():
            nv = p.get(k, 0) - c * v
            if nv:
                p[k] = nv
            else:
                p.pop(k, None)
    return out


@lru_cache(maxsize=None)
def _bracket_words(w1: tuple, w2: tuple) -> tuple:
    """[P(w1), P(w2)] in Lyndon coordinates, as a tuple of (word, coeff)."""
    if w1 == w2:
        return ()
    if w2 < w1:
        return tuple((w, -c) for w, c in _bracket_words(w2, w1))
    w = w1 + w2
    if len(w1) == 1 or _right_factor_ok(w1, w2):
        if is_lyndon(w) and standard_factorization(w) == (w1, w2):
            return ((w, Fraction(1)),)
    res = _decompose(_commutator(_assoc(w1), _assoc(w2)))
    return tuple(sorted(res.items()))


def _right_factor_ok(w1, w2) -> bool:
    _, v = standard_factorization(w1)
    return v >= w2


class LieMonomial:
    """A Lyndon word over generators, printed with its standard bracketing."""

    __slots__ = ("word",)

    def __init__(self, word: Iterable[Generator]):
        word = tuple(word)
        if not is_lyndon(word):
            raise ValueError(f"{[str(g) for g in word]} is not a Lyndon word")
        self.word = word

    @property
    def degree(self) -> int:
        return len(self.word)

    def generators(self) -> set[Generator]:
        return set(self.word)

    def tree(self):
        if len(self.word) == 1:
            return self.word[0]
        u, v = standard_factorization(self.word)
        return (LieMonomial(u).tree(), LieMonomial(v).tree())

    def __eq__(self, other):
        return isinstance(other, LieMonomial) and self.word == other.word

    def __hash__(self):
        return hash(self.word)

    def sort_key(self):
        return (len(self.word), self.word)

    def __lt__(self, other):
        return self.sort_key() < other.sort_key()

    def to_text(self) -> str:
        return _tree_text(self.tree())

    __str__ = to_text

    def __repr__(self):
        return f"LieMonomial({self.to_text()})"


def _tree_text(t) -> str:
    if isinstance(t, Generator):
        return t.name
    return f"[{_tree_text(t[0])},{_tree_text(t[1])}]"


class LieElement:
    """Finite combination of Lyndon monomials with polynomial coefficients."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[LieMonomial, object] | None = None):
        clean = {}
        for m, c in (terms or {}).items():
            c = ScalarPoly.lift(c)
            if c:
                clean[m] = clean[m] + c if m in clean else c
                if not clean[m]:
                    del clean[m]
        self._terms: dict[LieMonomial, ScalarPoly] = clean

    @classmethod
    def _raw(cls, terms):
        e = cls.__new__(cls)
        e._terms = terms
        return e

    @classmethod
    def generator(cls, g: Generator | str | int, coeff=1) -> "LieElement":
        if not isinstance(g, Generator):
            g = gen(g)
        return cls({LieMonomial((g,)): coeff})

    @classmethod
    def from_words(cls, words: Mapping[tuple, object]) -> "LieElement":
        return cls({LieMonomial(w): c for w, c in words.items()})

    # -- inspection --------------------------------------------------------
    def items(self):
        return self._terms.items()

    @property
    def terms(self) -> dict[LieMonomial, ScalarPoly]:
        return dict(self._terms)

    def coefficient(self, m: LieMonomial) -> ScalarPoly:
        return self._terms.get(m, ScalarPoly())

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def generators(self) -> set[Generator]:
        out = set()
        for m in self._terms:
            out |= m.generators()
        return out

    def degree(self) -> int:
        return max((m.degree for m in self._terms), default=0)

    def min_degree(self) -> int:
        return min((m.degree for m in self._terms), default=0)

    def variables(self) -> set[Coordinate]:
        out = set()
        for c in self._terms.values():
            out |= c.variables()
        return out

    def monomials(self) -> list[LieMonomial]:
        return sorted(self._terms)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other) -> "LieElement":
        if not isinstance(other, LieElement):
            if other == 0:
                return self
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            v = out.get(m)
            v = c if v is None else v + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return LieElement._raw(out)

    def __radd__(self, other):
        if other == 0:
            return self
        return NotImplemented

    def __neg__(self):
        return LieElement._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, LieElement):
            if other == 0:
                return self
            return NotImplemented
        return self + (-other)

    def __mul__(self, k) -> "LieElement":
        if isinstance(k, LieElement):
            return NotImplemented
        p = ScalarPoly.lift(k)
        if not p:
            return LieElement()
        return LieElement._raw({m: v for m, c in self._terms.items() if (v := c * p)})

    __rmul__ = __mul__

    def __truediv__(self, k) -> "LieElement":
        return LieElement._raw({m: c / k for m, c in self._terms.items()})

    def map_coefficients(self, fn) -> "LieElement":
        return LieElement({m: fn(c) for m, c in self._terms.items()})

    def diff(self, c: Coordinate) -> "LieElement":
        return self.map_coefficients(lambda p: p.diff(c))

    def subs(self, bindings) -> "LieElement":
        return self.map_coefficients(lambda p: p.subs(bindings))

    def split(self, coords: Iterable[Coordinate]) -> dict:
        """Group by monomials in ``coords``: {monomial: LieElement over the rest}."""
        coords = list(coords)
        out: dict = {}
        for m, c in self._terms.items():
            for mono, rest in c.split(coords).items():
                out.setdefault(mono, {})[m] = rest
        return {k: LieElement._raw(v) for k, v in out.items()}

    def __eq__(self, other):
        if isinstance(other, LieElement):
            return self._terms == other._terms
        if other == 0:
            return not self._terms
        return NotImplemented

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for i, m in enumerate(sorted(self._terms)):
            c = self._terms[m]
            body = m.to_text()
            neg = False
            if len(c) == 1:
                (_, q), = c.items()
                neg = q < 0
                ctext = (-c if neg else c).to_text()
                s = body if ctext == "1" else f"{ctext}*{body}"
            else:
                s = f"({c.to_text()})*{body}"
            if i == 0:
                parts.append(f"-{s}" if neg else s)
            else:
                parts.append(f" - {s}" if neg else f" + {s}")
        return "".join(parts)

    __str__ = to_text

    def __repr__(self):
        return f"LieElement({self.to_text()!r})"


def bracket(x: LieElement, y: LieElement) -> LieElement:
    """Bilinear bracket, normalized to the Lyndon basis."""
    out: dict = {}
    for m1, c1 in x.items():
        for m2, c2 in y.items():
            res = _bracket_words(m1.word, m2.word)
            if not res:
                continue
            c = c1 * c2
            for w, q in res:
                m = LieMonomial.__new__(LieMonomial)
                m.word = w
                v = out.get(m)
                t = c * q
                out[m] = t if v is None else v + t
    return LieElement._raw({m: c for m, c in out.items() if c})


def substitute_generators(x: LieElement, expansions: Mapping[Generator, LieElement]) -> LieElement:
    """Replace generators by elements and renormalize.

    Raises ``ValueError`` when an expansion mentions a generator that is itself
    being eliminated.
    """
    for g, e in expansions.items():
        bad = e.generators() & set(expansions)
        bad = {b for b in bad if not (b == g and e == LieElement.generator(g))}
        if bad:
            raise ValueError(f"expansion of {g} references eliminated generator(s) {sorted(str(b) for b in bad)}")
    cache: dict = {}

    def ev(tree):
        if isinstance(tree, Generator):
            return expansions[tree] if tree in expansions else LieElement.generator(tree)
        key = tree
        if key not in cache:
            cache[key] = bracket(ev(tree[0]), ev(tree[1]))
        return cache[key]

    out = LieElement()
    for m, c in x.items():
        out = out + ev(m.tree()) * c
    return out


# ---------------------------------------------------------------------------
# relations


class RewriteBudgetExceeded(RuntimeError):
    pass


def _mono_desc(m: LieMonomial):
    return (-m.degree, tuple(-g.index for g in m.word), tuple(g.name for g in m.word))


class RelationSet:
    """Relations ``r = 0`` turned into rewrite rules.

    Each rule sends its highest Lyndon monomial (degree first, then word
    order) to lower ones.  The rule set is the interreduced span of the
    relations and all their iterated brackets with generators, truncated at a
    degree cap; rules are built lazily per cap and cached.
    """

    def __init__(self, relations: Iterable[LieElement] = (), budget: int = 10_000):
        self.relations = [r for r in relations if r]
        self.budget = budget
        self._rules: dict = {}
        self.unoriented: list[LieElement] = []

    def __len__(self):
        return len(self.relations)

    def __iter__(self):
        return iter(self.relations)

    def generators(self) -> set[Generator]:
        out = set()
        for r in self.relations:
            out |= r.generators()
        return out

    def max_degree(self) -> int:
        return max((r.degree() for r in self.relations), default=0)

    def rules(self, cap: int, extra_generators: Iterable[Generator] = ()) -> dict:
        gens = tuple(sorted(self.generators() | set(extra_generators)))
        key = (cap, gens)
        if key not in self._rules:
            self._rules[key] = self._build(cap, gens)
        return self._rules[key]

    def _build(self, cap: int, gens) -> dict:
        rules: dict[LieMonomial, LieElement] = {}
        steps = 0
        queue = [r for r in self.relations if r.degree() <= cap]
        seen = set()
        while queue:
            e = queue.pop(0)
            steps += 1
            if steps > self.budget:
                raise RewriteBudgetExceeded(f"relation closure exceeded {self.budget} steps at degree cap {cap}")
            r = _apply_rules(e, rules, self.budget)
            if not r:
                continue
            piv = _pivot(r)
            if piv is None:
                if r not in self.unoriented:
                    self.unoriented.append(r)
                continue
            c = r.coefficient(piv).constant_value()
            rhs = -(r - LieElement({piv: r.coefficient(piv)})) / c
            for k in list(rules):
                if piv in rules[k]._terms:
                    rules[k] = _apply_rules(rules[k], {piv: rhs}, self.budget)
            rules[piv] = rhs
            h = hash(r)
            if h in seen:
                continue
            seen.add(h)
            for g in gens:
                b = bracket(LieElement.generator(g), e)
                if b and b.degree() <= cap:
                    queue.append(b)
        return rules

    def to_json(self) -> list[str]:
        return [r.to_text() for r in self.relations]


def _pivot(r: LieElement):
    for m in sorted(r._terms, key=_mono_desc):
        c = r._terms[m]
        if c.is_constant():
            return m
    return None


def _apply_rules(x: LieElement, rules: Mapping, budget: int) -> LieElement:
    steps = 0
    while True:
        hits = [m for m in x._terms if m in rules]
        if not hits:
            return x
        m = max(hits, key=lambda mm: (mm.degree, tuple(g.index for g in mm.word)))
        c = x._terms[m]
        x = x - LieElement({m: c}) + rules[m] * c
        steps += 1
        if steps > budget:
            raise RewriteBudgetExceeded(f"rewriting did not terminate within {budget} steps")


def normalize_modulo(x: LieElement, relations: RelationSet | Iterable[LieElement] | None, degree_cap: int | None = None) -> LieElement:
    """Normal form of ``x`` modulo the Lie ideal generated by ``relations``.

    Exact for homogeneous relations; for inhomogeneous ones the ideal is
    truncated at ``degree_cap`` (default: one more than the largest degree in
    play).
    """
    if relations is None:
        return x
    if not isinstance(relations, RelationSet):
        relations = RelationSet(relations)
    if not relations.relations or not x:
        return x
    if degree_cap is None:
        degree_cap = max(x.degree(), relations.max_degree()) + 1
    rules = relations.rules(degree_cap, x.generators())
    return _apply_rules(x, rules, relations.budget)


# ---------------------------------------------------------------------------
# structure constants


@dataclass
class StructureConstants:
    """``[e_i, e_j] = sum_k c[k][i][j] e_k`` with 0-based indices."""

    dimension: int
    table: dict = field(default_factory=dict)  # (k, i, j) -> ScalarPoly

    def __post_init__(self):
        self.table = {k: ScalarPoly.lift(v) for k, v in self.table.items() if ScalarPoly.lift(v)}

    def c(self, k: int, i: int, j: int) -> ScalarPoly:
        return self.table.get((k, i, j), ScalarPoly())

    @classmethod
    def from_brackets(cls, dimension: int, brackets: Mapping[tuple[int, int], Mapping[int, object]]) -> "StructureConstants":
        """Fill c from ``{(i, j): {k: value}}``, adding the antisymmetric partner."""
        table = {}
        for (i, j), res in brackets.items():
            for k, v in res.items():
                table[(k, i, j)] = ScalarPoly.lift(v)
                if (j, i) not in brackets:
                    table[(k, j, i)] = -ScalarPoly.lift(v)
        return cls(dimension, table)

    @classmethod
    def abelian(cls, dimension: int) -> "StructureConstants":
        return cls(dimension, {})

    @classmethod
    def heisenberg(cls) -> "StructureConstants":
        return cls.from_brackets(3, {(0, 1): {2: 1}})

    def to_json(self) -> dict:
        return {
            "dimension": self.dimension,
            "table": [[k + 1, i + 1, j + 1, v.to_text()] for (k, i, j), v in sorted(self.table.items())],
        }

    def bracket_vectors(self, x: Sequence, y: Sequence) -> list[ScalarPoly]:
        r = self.dimension
        out = [ScalarPoly() for _ in range(r)]
        for (k, i, j), v in self.table.items():
            if x[i] and y[j]:
                out[k] = out[k] + v * x[i] * y[j]
        return out


@dataclass
class ValidationReport:
    valid: bool
    violation: str | None = None
    indices: tuple | None = None  # 1-based
    residual: ScalarPoly | None = None

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "violation": self.violation,
            "indices": list(self.indices) if self.indices else None,
            "residual": self.residual.to_text() if self.residual is not None else None,
        }


def validate_structure_constants(sc: StructureConstants) -> ValidationReport:
    """Exact antisymmetry and Jacobi checks; reports the first violation."""
    r = sc.dimension
    for i in range(r):
        for j in range(r):
            for k in range(r):
                s = sc.c(k, i, j) + sc.c(k, j, i)
                if s:
                    return ValidationReport(False, "antisymmetry", (i + 1, j + 1, k + 1), s)
    for i in range(r):
        for j in range(r):
            for k in range(r):
                for l in range(r):
                    s = ScalarPoly()
                    for m in range(r):
                        s = (s + sc.c(m, i, j) * sc.c(l, m, k) + sc.c(m, j, k) * sc.c(l, m, i)
                             + sc.c(m, k, i) * sc.c(l, m, j))
                    if s:
                        return ValidationReport(False, "jacobi", (i + 1, j + 1, k + 1, l + 1), s)
    return ValidationReport(True)


# ---------------------------------------------------------------------------
# spans


class _Echelon:
    """Rational row echelon over coordinates keyed by (coefficient monomial, Lie monomial)."""

    def __init__(self):
        self.rows: dict = {}

    @staticmethod
    def vector(x: LieElement) -> dict:
        vec = {}
        for m, c in x.items():
            for mono, q in c.items():
                vec[(m, mono)] = q
        return vec

    def reduce(self, vec: dict) -> dict:
        vec = dict(vec)
        for piv in sorted(self.rows, key=self._key):
            q = vec.get(piv)
            if q:
                for c, v in self.rows[piv].items():
                    nv = vec.get(c, 0) - q * v
                    if nv:
                        vec[c] = nv
                    else:
                        vec.pop(c, None)
        return vec

    @staticmethod
    def _key(col):
        m, mono = col
        return (_mono_desc(m), tuple((c.key, -e) for c, e in mono))

    def add(self, x: LieElement) -> bool:
        vec = self.reduce(self.vector(x))
        if not vec:
            return False
        piv = min(vec, key=self._key)
        q = vec[piv]
        vec = {c: v / q for c, v in vec.items()}
        for p, row in list(self.rows.items()):
            if piv in row:
                k = row[piv]
                nrow = dict(row)
                for c, v in vec.items():
                    nv = nrow.get(c, 0) - k * v
                    if nv:
                        nrow[c] = nv
                    else:
                        nrow.pop(c, None)
                self.rows[p] = nrow
        self.rows[piv] = vec
        return True

    def contains(self, x: LieElement) -> bool:
        return not self.reduce(self.vector(x))

    def __len__(self):
        return len(self.rows)


@dataclass
class SpanReport:
    basis: list[LieElement]
    closed: bool | None  # None = unknown (cap or budget hit)
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "basis": [b.to_text() for b in self.basis],
            "dimension": len(self.basis),
            "closed": self.closed,
            "notes": list(self.notes),
        }


def subalgebra_span(seed: Iterable[LieElement], relations: RelationSet | Iterable[LieElement] | None = None,
                    degree_cap: int = 4, budget: int = 10_000, extend: bool = True) -> SpanReport:
    """Span of ``seed`` closed under brackets modulo ``relations``.

    With ``extend=False`` the span of the seed is only tested for closure.
    Brackets that leave the degree cap and are not already in the span make
    the closure flag unknown rather than false.
    """
    if relations is not None and not isinstance(relations, RelationSet):
        relations = RelationSet(relations)
    ech = _Echelon()
    basis: list[LieElement] = []
    for s in seed:
        s = normalize_modulo(s, relations)
        if ech.add(s):
            basis.append(s)
    closed: bool | None = True
    notes = []
    steps = 0
    done_pairs = set()
    grew = True
    while grew:
        grew = False
        for i in range(len(basis)):
            for j in range(i + 1, len(basis)):
                if (i, j) in done_pairs:
                    continue
                done_pairs.add((i, j))
                steps += 1
                if steps > budget:
                    notes.append(f"budget of {budget} brackets exhausted")
                    return SpanReport(basis, None, notes)
                b = normalize_modulo(bracket(basis[i], basis[j]), relations)
                if not b or ech.contains(b):
                    continue
                if not extend:
                    closed = False
                    continue
                if b.degree() > degree_cap:
                    if closed:
                        closed = None
                        notes.append(f"bracket of degree {b.degree()} exceeds cap {degree_cap}")
                    continue
                ech.add(b)
                basis.append(b)
                grew = True
    return SpanReport(basis, closed, notes)
