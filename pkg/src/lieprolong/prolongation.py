"""Prolongation structures for scalar evolution equations.

The pipeline: encode ``u_t = F + u_{k}`` as a closed ideal of 2-forms, pose a
Lie-algebra-valued connection ``Γ = b^x dx + b^t dt``, demand that
``Ω = dΓ + Γ∧Γ`` lie in the ideal tensored with the algebra, and solve the
resulting conditions for the b's and a set of bracket relations.  The holonomy
filtration then collects the curvature components and their covariant
derivatives, and :func:`holonomy_close` looks for expansions of the external
generators over that span.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .grassmann import ClosureReport, DiffForm, FormIdeal, d, is_closed, wedge
from .liealg import (
    Generator,
    LieElement,
    LieMonomial,
    RelationSet,
    StructureConstants,
    SpanReport,
    _Echelon,
    bracket,
    gen,
    normalize_modulo,
    subalgebra_span,
    substitute_generators,
)
from .matrix import Matrix
from .polysolve import Branch, solve_polynomial
from .symscalar import Coordinate, ScalarPoly, base, jet, parameter

X = base("x", 0)
T = base("t", 1)


class IdealConstructionError(ValueError):
    def __init__(self, message: str, report: ClosureReport | None = None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------------------
# the equation and its ideal


@dataclass(frozen=True)
class EvolutionPDE:
    """``u_t = F(u0, ..., u_{k-1}) + u_k`` in one space dimension."""

    variable: str
    order: int
    f: ScalarPoly

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be at least 1")
        allowed = set(self.jets())
        bad = [c for c in self.f.variables() if c not in allowed]
        if bad:
            names = ", ".join(sorted(c.name for c in bad))
            raise ValueError(f"F may only depend on {', '.join(c.name for c in self.jets())}; found {names}")

    @classmethod
    def from_rhs(cls, variable: str, rhs: ScalarPoly) -> "EvolutionPDE":
        """Split ``rhs`` into its leading ``u_k`` term and the rest."""
        orders = [c.order for c in rhs.variables() if c.kind == "jet"]
        if not orders:
            raise ValueError("right-hand side has no jet variables")
        k = max(orders)
        lead = jet(variable, k)
        if rhs.degree_in(lead) != 1 or rhs.coefficient(lead, 1) != ScalarPoly.const(1):
            raise ValueError(f"right-hand side must be linear in {lead.name} with coefficient 1")
        return cls(variable, k, rhs - ScalarPoly.var(lead))

    def jets(self) -> list[Coordinate]:
        """Coordinates of the ideal: u0 .. u_{k-1}."""
        return [jet(self.variable, i) for i in range(self.order)]

    def all_jets(self, extra: int = 0) -> list[Coordinate]:
        return [jet(self.variable, i) for i in range(self.order + 1 + extra)]

    @property
    def rhs(self) -> ScalarPoly:
        return self.f + ScalarPoly.var(jet(self.variable, self.order))

    def to_text(self) -> str:
        return f"{self.variable}_t = {self.rhs.to_text()}"

    # -- total derivatives on the infinite jet --------------------------------
    def total_x(self, p: ScalarPoly) -> ScalarPoly:
        out = p.diff(X)
        for c in p.variables():
            if c.kind == "jet" and c.name.startswith(self.variable):
                out = out + p.diff(c) * ScalarPoly.var(jet(self.variable, c.order + 1))
        return out

    def total_t(self, p: ScalarPoly) -> ScalarPoly:
        out = p.diff(T)
        for c in p.variables():
            if c.kind == "jet" and c.name.startswith(self.variable):
                ut = self.rhs
                for _ in range(c.order):
                    ut = self.total_x(ut)
                out = out + p.diff(c) * ut
        return out


@dataclass
class PDEIdeal:
    jets: list[Coordinate]
    ideal: FormIdeal
    closure: ClosureReport
    pde: EvolutionPDE | None = None

    @property
    def generators(self) -> list[DiffForm]:
        return self.ideal.generators

    @property
    def coordinates(self) -> list[Coordinate]:
        return [X, T] + list(self.jets)

    def to_json(self) -> dict:
        return {
            "pde": self.pde.to_text() if self.pde else None,
            "coordinates": [c.name for c in self.coordinates],
            **self.closure.to_json(),
        }


def _split_f(f: ScalarPoly, u0: Coordinate, u1: Coordinate):
    """F = F0(u0) + F1(u0)*u1 + rest."""
    f0, f1, rest = ScalarPoly(), ScalarPoly(), ScalarPoly()
    for m, c in f.items():
        term = ScalarPoly.monomial(m, c)
        e = dict(m)
        only_u0 = all(v in (u0, u1) for v in e)
        if only_u0 and e.get(u1, 0) == 0:
            f0 = f0 + term
        elif only_u0 and e.get(u1, 0) == 1:
            f1 = f1 + term / ScalarPoly.var(u1)
        else:
            rest = rest + term
    return f0, f1, rest


def contact_ideal_from_pde(pde: EvolutionPDE, max_coeff_degree: int | None = None) -> PDEIdeal:
    """Closed ideal of 2-forms whose integral surfaces are the solutions.

    Order 1: ``α = du0∧dx + du0∧dt + F dx∧dt``.
    Order 2: the contact form ``du0∧dt - u1 dx∧dt`` together with
    ``du0∧dx + F1 du0∧dt + (F0 + rest) dx∧dt + du1∧dt`` where the part of F
    linear in u1 with a u0-only coefficient is written through ``du0∧dt``.
    """
    dx, dt = d(X), d(T)
    if pde.order == 1:
        (u0,) = pde.jets()
        du0 = d(u0)
        gens = [wedge(du0, dx) + wedge(du0, dt) + wedge(dx, dt) * pde.f]
    elif pde.order == 2:
        u0, u1 = pde.jets()
        du0, du1 = d(u0), d(u1)
        f0, f1, rest = _split_f(pde.f, u0, u1)
        a1 = wedge(du0, dt) - wedge(dx, dt) * ScalarPoly.var(u1)
        a2 = wedge(du0, dx) + wedge(du0, dt) * f1 + wedge(dx, dt) * (f0 + rest) + wedge(du1, dt)
        gens = [a1, a2]
    else:
        raise ValueError("only orders 1 and 2 have a built-in recipe; supply the 2-forms explicitly")
    ideal = FormIdeal(gens, tuple([X, T] + pde.jets()))
    report = is_closed(ideal, max_coeff_degree)
    if not report.closed:
        raise IdealConstructionError("constructed ideal is not closed", report)
    return PDEIdeal(pde.jets(), ideal, report, pde)


def ideal_from_forms(forms: Sequence[DiffForm], jets: Sequence[Coordinate],
                     max_coeff_degree: int | None = None) -> PDEIdeal:
    """Wrap user-supplied 2-forms; closure is reported, not enforced."""
    ideal = FormIdeal(list(forms), tuple([X, T] + list(jets)))
    return PDEIdeal(list(jets), ideal, is_closed(ideal, max_coeff_degree))


# ---------------------------------------------------------------------------
# Lie-algebra-valued forms


def _wedge_key(mono: tuple) -> tuple:
    return tuple(c.key for c in mono)


class LieForm:
    """Differential form with :class:`LieElement` coefficients."""

    __slots__ = ("degree", "terms")

    def __init__(self, degree: int, terms: Mapping[tuple, LieElement] | None = None):
        self.degree = degree
        self.terms = {m: v for m, v in (terms or {}).items() if v}

    @classmethod
    def from_form(cls, f: DiffForm, x: LieElement) -> "LieForm":
        return cls(f.degree, {m: x * c for m, c in f.items()})

    def __add__(self, other: "LieForm") -> "LieForm":
        out = dict(self.terms)
        for m, v in other.terms.items():
            out[m] = out[m] + v if m in out else v
        return LieForm(self.degree, out)

    def __neg__(self):
        return LieForm(self.degree, {m: -v for m, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def coefficient(self, mono: tuple) -> LieElement:
        return self.terms.get(tuple(mono), LieElement())

    def monomials(self) -> list[tuple]:
        return sorted(self.terms, key=_wedge_key)

    def is_zero(self) -> bool:
        return not self.terms

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m in self.monomials():
            w = "^".join(f"d{c.name}" for c in m)
            parts.append(f"({self.terms[m].to_text()})*{w}")
        return " + ".join(parts)


def _lie_partial(x: LieElement, c: Coordinate, table: Mapping | None) -> LieElement:
    """∂x/∂c, with ``table[(g, c)]`` giving derivatives of formal generators."""
    out = x.diff(c)
    if not table:
        return out
    for m, coef in x.items():
        if m.degree == 1:
            dg = table.get((m.word[0], c))
            if dg is not None:
                out = out + dg * coef
        elif any((g, c) in table for g in m.word):
            raise ValueError("formal derivatives are only defined on linear terms")
    return out


def lie_exterior_derivative(f: LieForm, coords: Sequence[Coordinate], table: Mapping | None = None) -> LieForm:
    out = LieForm(f.degree + 1)
    for mono, x in f.terms.items():
        for c in coords:
            dx = _lie_partial(x, c, table)
            if not dx:
                continue
            basis = DiffForm(f.degree, {mono: ScalarPoly.const(1)})
            out = out + LieForm.from_form(wedge(d(c), basis), dx)
    return out


def half_bracket(f: LieForm) -> LieForm:
    """Γ∧Γ for a 1-form: Σ_{a<b} [Γ_a, Γ_b] dz_a∧dz_b."""
    if f.degree != 1:
        raise ValueError("half_bracket expects a 1-form")
    out = LieForm(2)
    monos = f.monomials()
    for i, a in enumerate(monos):
        for b in monos[i + 1:]:
            br = bracket(f.terms[a], f.terms[b])
            if br:
                out = out + LieForm.from_form(wedge(d(a[0]), d(b[0])), br)
    return out


# ---------------------------------------------------------------------------
# the connection ansatz


def _jet_monomials(jets: Sequence[Coordinate], bound: int) -> list[ScalarPoly]:
    """All products of jets with each exponent <= bound, graded then lex."""
    out = []
    for exps in _exponent_grid(len(jets), bound):
        out.append(ScalarPoly.monomial(tuple((c, e) for c, e in zip(jets, exps) if e)))
    return out


def _exponent_grid(n: int, bound: int) -> list[tuple]:
    grid = [()]
    for _ in range(n):
        grid = [g + (e,) for g in grid for e in range(bound + 1)]
    return sorted(grid, key=lambda g: (sum(g), tuple(-e for e in g)))


@dataclass
class ConnectionAnsatz:
    """``Γ = b^x dx + b^t dt`` over the ideal's jet coordinates.

    A *formal* ansatz treats b^x, b^t as unknown functions; a concrete one
    carries explicit elements whose generators are the unknowns.
    """

    jets: list[Coordinate]
    bx: LieElement | None = None
    bt: LieElement | None = None
    bx_degree: int = 1
    bt_degree: int = 2
    fresh: list[Generator] = field(default_factory=list)

    @property
    def formal(self) -> bool:
        return self.bx is None

    @classmethod
    def formal_ansatz(cls, jets, bx_degree: int = 1, bt_degree: int = 2) -> "ConnectionAnsatz":
        return cls(list(jets), None, None, bx_degree, bt_degree)

    @classmethod
    def polynomial(cls, jets, bx_degree: int = 1, bt_degree: int = 2) -> "ConnectionAnsatz":
        """Fresh generators Bx0.., Bt0.. times every jet monomial within the bounds."""
        jets = list(jets)
        idx = 0
        fresh = []
        parts = []
        for prefix, bound in (("Bx", bx_degree), ("Bt", bt_degree)):
            e = LieElement()
            for k, mono in enumerate(_jet_monomials(jets, bound)):
                g = Generator(idx, f"{prefix}{k}")
                idx += 1
                fresh.append(g)
                e = e + LieElement.generator(g) * mono
            parts.append(e)
        return cls(jets, parts[0], parts[1], bx_degree, bt_degree, fresh)

    @classmethod
    def concrete(cls, jets, bx: LieElement, bt: LieElement) -> "ConnectionAnsatz":
        return cls(list(jets), bx, bt)

    def unknowns(self) -> list[Generator]:
        if self.fresh:
            return list(self.fresh)
        return sorted((self.bx or LieElement()).generators() | (self.bt or LieElement()).generators())


_BX = Generator(0, "Bx")
_BT = Generator(1, "Bt")


def _formal_atoms(jets):
    table = {}
    atoms = {}
    for i, slot in enumerate((_BX, _BT)):
        for j, c in enumerate(jets):
            g = Generator(2 + i * len(jets) + j, f"{slot.name}_{c.name}")
            atoms[(slot, c)] = g
            table[(slot, c)] = LieElement.generator(g)
    return atoms, table


def multiplier_generators(n: int) -> list[Generator]:
    return [Generator(1000 + k, f"G{k + 1}") for k in range(n)]


# ---------------------------------------------------------------------------
# determining equations


@dataclass
class DeterminingEquation:
    """``lhs = rhs``: lhs is the curvature part, rhs the ideal part."""

    lhs: LieElement
    rhs: LieElement
    monomial: tuple
    kind: str  # "derivative", "bracket" or "compatibility"
    sign: int = 1  # lhs = sign * (curvature coefficient)

    @property
    def residual(self) -> LieElement:
        return self.lhs - self.rhs

    def is_trivial(self) -> bool:
        return not self.residual

    def to_text(self) -> str:
        return f"{self.lhs.to_text()} = {self.rhs.to_text()}"


def _oriented(lhs: LieElement, rhs: LieElement) -> tuple[LieElement, LieElement, int]:
    lead = lhs if lhs else rhs
    if lead:
        m = lead.monomials()[0]
        c = lead.coefficient(m)
        _, q = c.leading()
        if q < 0:
            return -lhs, -rhs, -1
    return lhs, rhs, 1


def _eq_kind(mono: tuple) -> str:
    nb = sum(1 for c in mono if c.kind == "base")
    return {1: "derivative", 2: "bracket"}.get(nb, "compatibility")


def _eq_order(mono: tuple):
    nb = sum(1 for c in mono if c.kind == "base")
    return ({1: 0, 2: 1}.get(nb, 2), _wedge_key(mono))


@dataclass
class DeterminingSystem:
    ideal: PDEIdeal
    ansatz: ConnectionAnsatz
    gamma: LieForm
    omega: LieForm
    multipliers: list[Generator]
    equations: list[DeterminingEquation]
    g_values: dict[Generator, LieElement]
    residual: list[DeterminingEquation]
    atoms: dict = field(default_factory=dict)

    def lines(self) -> list[str]:
        return [e.to_text() for e in self.equations if not e.is_trivial()]

    def residual_lines(self) -> list[str]:
        return [e.to_text() for e in self.residual]

    def to_json(self) -> dict:
        return {
            "formal": self.ansatz.formal,
            "equations": self.lines(),
            "multipliers": {g.name: v.to_text() for g, v in self.g_values.items()},
            "residual": self.residual_lines(),
        }


def derive_determining(ideal: PDEIdeal, ansatz: ConnectionAnsatz) -> DeterminingSystem:
    """Conditions for ``dΓ + Γ∧Γ`` to lie in the ideal with Lie-valued multipliers."""
    jets = list(ideal.jets)
    coords = [X, T] + jets
    table = None
    atoms = {}
    if ansatz.formal:
        atoms, table = _formal_atoms(jets)
        bx, bt = LieElement.generator(_BX), LieElement.generator(_BT)
    else:
        bx, bt = ansatz.bx, ansatz.bt
    gamma = LieForm(1, {(X,): bx, (T,): bt})
    omega = lie_exterior_derivative(gamma, coords, table) + half_bracket(gamma)

    gs = multiplier_generators(len(ideal.generators))
    ideal_part = LieForm(2)
    for g, alpha in zip(gs, ideal.generators):
        ideal_part = ideal_part + LieForm.from_form(alpha, LieElement.generator(g))

    monos = sorted(set(omega.terms) | set(ideal_part.terms), key=_eq_order)
    equations = []
    for m in monos:
        lhs, rhs, sign = _oriented(omega.coefficient(m), ideal_part.coefficient(m))
        equations.append(DeterminingEquation(lhs, rhs, m, _eq_kind(m), sign))
    recombined = LieForm(2)
    for e in equations:
        recombined = recombined + LieForm(2, {e.monomial: e.lhs * e.sign})
    if (recombined - omega).terms:
        raise AssertionError("determining equations do not recombine to the curvature")

    g_values, residual = _eliminate_multipliers(equations, gs)
    return DeterminingSystem(ideal, ansatz, gamma, omega, gs, equations, g_values, residual, atoms)


def _g_part(x: LieElement, gs: set) -> tuple[dict, LieElement]:
    """Split x into {G: coefficient} and the G-free remainder."""
    coeffs = {}
    rest = {}
    for m, c in x.items():
        if m.degree == 1 and m.word[0] in gs:
            coeffs[m.word[0]] = c
        else:
            rest[m] = c
    return coeffs, LieElement(rest)


def _eliminate_multipliers(equations: list[DeterminingEquation], gs: list[Generator]):
    gset = set(gs)
    solved: dict[Generator, LieElement] = {}
    used = set()
    progress = True
    while progress:
        progress = False
        for i, e in enumerate(equations):
            if i in used:
                continue
            rhs = substitute_generators(e.rhs, solved) if solved else e.rhs
            coeffs, rest = _g_part(rhs, gset)
            open_gs = [g for g in coeffs if g not in solved]
            if len(open_gs) != 1 or _g_part(e.lhs, gset)[0]:
                continue
            g = open_gs[0]
            k = coeffs[g]
            if not k.is_constant():
                continue
            solved[g] = (e.lhs - rest) / k.constant_value()
            used.add(i)
            progress = True
    residual = []
    for i, e in enumerate(equations):
        if i in used:
            continue
        rhs = substitute_generators(e.rhs, solved) if solved else e.rhs
        lhs, rhs, sign = _oriented(e.lhs, rhs)
        ne = DeterminingEquation(lhs, rhs, e.monomial, e.kind, sign * e.sign)
        if not ne.is_trivial():
            residual.append(ne)
    order = {g: k for k, g in enumerate(gs)}
    return dict(sorted(solved.items(), key=lambda kv: order[kv[0]])), residual


# ---------------------------------------------------------------------------
# solving


@dataclass
class ProlongationSolution:
    jets: list[Coordinate]
    bx: LieElement
    bt: LieElement
    relations: RelationSet
    unsolved: list[LieElement]
    generators: list[Generator]
    multipliers: list[LieElement]
    system: DeterminingSystem | None = None
    verified: bool = True

    @property
    def gamma(self) -> LieForm:
        return LieForm(1, {(X,): self.bx, (T,): self.bt})

    def to_json(self) -> dict:
        return {
            "bx": self.bx.to_text(),
            "bt": self.bt.to_text(),
            "generators": [g.name for g in self.generators],
            "relations": self.relations.to_json(),
            "unsolved": [u.to_text() for u in self.unsolved],
            "multipliers": [g.to_text() for g in self.multipliers],
            "verified": self.verified,
        }


def _pivot(eq: LieElement, unknowns: set) -> Generator | None:
    inside = set()
    bare = {}
    for m, c in eq.items():
        if m.degree == 1:
            bare[m.word[0]] = c
        else:
            inside |= m.generators()
    cands = [g for g, c in bare.items() if g in unknowns and g not in inside and c.is_constant()]
    return max(cands) if cands else None


def solve_determining(system: DeterminingSystem, bx_degree: int | None = None,
                      bt_degree: int | None = None) -> ProlongationSolution:
    """Solve the residual determining equations over a polynomial ansatz.

    Formal systems get a polynomial ansatz with fresh generators; each jet
    monomial coefficient then gives one Lie-algebra equation.  Unknowns that
    appear bare (outside every bracket) are eliminated, the rest become
    bracket relations.  Fresh generators that survive are renamed A0, A1, ...
    in order of first appearance.
    """
    jets = list(system.ideal.jets)
    gset = set(system.multipliers)
    if system.ansatz.formal:
        bxd = system.ansatz.bx_degree if bx_degree is None else bx_degree
        btd = system.ansatz.bt_degree if bt_degree is None else bt_degree
        poly = ConnectionAnsatz.polynomial(jets, bxd, btd)
        expand = _atom_expansions(system, poly)
        bx, bt = poly.bx, poly.bt
        unknowns = poly.unknowns()
        fresh = True
    else:
        expand = {}
        bx, bt = system.ansatz.bx, system.ansatz.bt
        unknowns = system.ansatz.unknowns()
        fresh = False

    pieces: list[LieElement] = []
    unsolved: list[LieElement] = []
    for e in system.residual:
        r = substitute_generators(e.residual, expand) if expand else e.residual
        if r.generators() & gset:
            unsolved.append(r)
            continue
        for mono in sorted(r.split(jets), key=lambda m: _mono_key(m)):
            piece = r.split(jets)[mono]
            if piece:
                pieces.append(piece)

    open_u = set(unknowns)
    while True:
        best = None
        for i, p in enumerate(pieces):
            g = _pivot(p, open_u)
            if g is not None and (best is None or g > best[0]):
                best = (g, i)
        if best is None:
            break
        g, i = best
        p = pieces.pop(i)
        k = p.coefficient(LieMonomial((g,))).constant_value()
        value = -(p - LieElement.generator(g, k)) / k
        sub = {g: value}
        pieces = [q for q in (substitute_generators(q, sub) for q in pieces) if q]
        bx, bt = substitute_generators(bx, sub), substitute_generators(bt, sub)
        open_u.discard(g)

    # what is left constrains the generators; bare terms that could not be
    # pivoted make a relation inhomogeneous but it is still a relation
    relations = []
    for p in pieces:
        if p not in relations and -p not in relations:
            relations.append(p)

    if fresh:
        rename = _first_use_names(bx, bt, relations + unsolved, jets, set(unknowns))
        if rename:
            bx, bt = substitute_generators(bx, rename), substitute_generators(bt, rename)
            relations = [substitute_generators(r, rename) for r in relations]
            unsolved = [substitute_generators(u, rename) for u in unsolved]
    gens = sorted(bx.generators() | bt.generators() | {g for r in relations for g in r.generators()})
    rels = RelationSet(relations)
    sol = ProlongationSolution(jets, bx, bt, rels, unsolved, gens, [], system)
    sol.multipliers, sol.verified = _recombine(system, sol)
    return sol


def _mono_key(m):
    return (sum(e for _, e in m), tuple((c.key, -e) for c, e in m))


def _atom_expansions(system: DeterminingSystem, poly: ConnectionAnsatz) -> dict:
    exp = {_BX: poly.bx, _BT: poly.bt}
    for (slot, c), g in system.atoms.items():
        src = poly.bx if slot == _BX else poly.bt
        exp[g] = src.diff(c)
    return exp


def _first_use_names(bx, bt, extra, jets, fresh: set) -> dict:
    order = []
    for e in [bx, bt] + list(extra):
        split = e.split(jets)
        for mono in sorted(split, key=_mono_key):
            for m in sorted(split[mono].monomials()):
                for g in m.word:
                    if g in fresh and g not in order:
                        order.append(g)
    return {g: LieElement.generator(Generator(i, f"A{i}")) for i, g in enumerate(order)}


def _recombine(system: DeterminingSystem, sol: ProlongationSolution) -> tuple[list[LieElement], bool]:
    """Multipliers on the solution and whether Ω - Σ g_k α_k vanishes modulo the relations."""
    jets = sol.jets
    coords = [X, T] + jets
    omega = lie_exterior_derivative(sol.gamma, coords) + half_bracket(sol.gamma)
    expand = {_BX: sol.bx, _BT: sol.bt}
    for (slot, c), g in system.atoms.items():
        expand[g] = (sol.bx if slot == _BX else sol.bt).diff(c)
    mults = []
    for g in system.multipliers:
        v = system.g_values.get(g)
        mults.append(substitute_generators(v, expand) if v is not None else LieElement())
    if any(g not in system.g_values for g in system.multipliers):
        return mults, False
    total = omega
    for k, alpha in zip(mults, system.ideal.generators):
        total = total - LieForm.from_form(alpha, k)
    ok = True
    for x in total.terms.values():
        for piece in x.split(jets).values():
            if normalize_modulo(piece, sol.relations):
                ok = False
    return mults, ok


# ---------------------------------------------------------------------------
# holonomy


def covariant_derivative(gamma_z: LieElement, x: LieElement, z: Coordinate) -> LieElement:
    """∂x/∂z + [Γ_z, x]."""
    return x.diff(z) + bracket(gamma_z, x)


def _canonical(x: LieElement) -> LieElement:
    m = x.monomials()[0]
    _, q = x.coefficient(m).leading()
    return -x if q < 0 else x


@dataclass
class NamedElement:
    name: str
    element: LieElement
    definition: tuple[str, str] | None = None  # (p, q) meaning [p, q]
    level: int = 0

    def to_json(self) -> dict:
        out = {"name": self.name, "element": self.element.to_text(), "level": self.level}
        if self.definition:
            out["definition"] = f"[{self.definition[0]},{self.definition[1]}]"
        return out


@dataclass
class HolonomyFiltration:
    level: int
    basis: list[NamedElement]
    reduced_basis: list[LieElement]
    perfect: bool | None
    notes: list[str] = field(default_factory=list)
    span: SpanReport | None = None

    @property
    def elements(self) -> list[LieElement]:
        return [b.element for b in self.basis]

    @property
    def names(self) -> list[str]:
        return [b.name for b in self.basis]

    def at_level(self, p: int) -> list[NamedElement]:
        return [b for b in self.basis if b.level <= p]

    def definition_lines(self) -> list[str]:
        return [f"{b.name} = [{b.definition[0]},{b.definition[1]}]" for b in self.basis if b.definition]

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "dimension": len(self.basis),
            "basis": [b.to_json() for b in self.basis],
            "reduced_basis": [r.to_text() for r in self.reduced_basis],
            "perfect": self.perfect,
            "notes": list(self.notes),
        }


class _Namer:
    def __init__(self, generators: Iterable[Generator]):
        self.by_elem: dict[LieElement, str] = {}
        self.gens: dict[str, Generator] = {}
        top = -1
        for g in generators:
            self.by_elem[LieElement.generator(g)] = g.name
            self.gens[g.name] = g
            top = max(top, g.index)
        self.next = top + 1

    def index(self, name: str) -> int:
        return self.gens[name].index

    def lookup(self, x: LieElement) -> tuple[str, int] | None:
        if x in self.by_elem:
            return self.by_elem[x], 1
        if -x in self.by_elem:
            return self.by_elem[-x], -1
        return None

    def name(self, x: LieElement) -> tuple[str, LieElement, tuple | None]:
        hit = self.lookup(x)
        if hit and hit[1] == 1:
            return hit[0], x, None
        definition = None
        named = sorted(self.by_elem.items(), key=lambda kv: self.index(kv[1]))
        for a, (ea, pa) in enumerate(named):
            for eb, pb in named[a + 1:]:
                b = bracket(ea, eb)
                if b == x or b == -x:
                    x, definition = b, (pa, pb)
                    break
            if definition:
                break
        if definition is None:
            x = _canonical(x)
        name = f"A{self.next}"
        g = Generator(self.next, name)
        self.next += 1
        self.gens[name] = g
        self.by_elem[x] = name
        return name, x, definition



def holonomy_seeds(sol: ProlongationSolution) -> list[LieElement]:
    """Constant pieces of the curvature components, ordered by degree then Lyndon order."""
    pieces = []
    for g in sol.multipliers:
        for mono in sorted(g.split(sol.jets), key=_mono_key):
            pieces.append(g.split(sol.jets)[mono])
    return pieces


def holonomy_filtration(sol: ProlongationSolution, level: int = 0, degree_cap: int | None = None,
                        budget: int = 10_000) -> HolonomyFiltration:
    """Span of the curvature and its covariant derivatives up to ``level``.

    The basis lives in the free Lie algebra on the solution's generators;
    ``reduced_basis`` is its image modulo the relations, and ``perfect``
    reports whether the level's span is bracket-closed modulo the relations.
    """
    jets = sol.jets
    namer = _Namer(sol.generators)
    ech = _Echelon()
    basis: list[NamedElement] = []
    notes = []

    def absorb(x: LieElement, lvl: int) -> NamedElement | None:
        if not x or not ech.add(x):
            return None
        name, elem, definition = namer.name(x)
        ne = NamedElement(name, elem, definition, lvl)
        basis.append(ne)
        return ne

    seeds = [_canonical(s) for s in holonomy_seeds(sol) if s]
    seeds.sort(key=lambda s: (s.degree(), [m.sort_key() for m in s.monomials()]))
    frontier = [ne for s in seeds if (ne := absorb(s, 0))]
    steps = 0
    for p in range(1, level + 1):
        new = []
        for z, gz in ((X, sol.bx), (T, sol.bt)):
            for ne in frontier:
                steps += 1
                if steps > budget:
                    notes.append(f"budget of {budget} covariant derivatives exhausted")
                    break
                y = covariant_derivative(gz, ne.element, z)
                split = y.split(jets)
                for mono in sorted(split, key=_mono_key):
                    piece = split[mono]
                    if piece:
                        got = absorb(_canonical(piece), p)
                        if got:
                            new.append(got)
        frontier = new
    if level >= 1 and jets and any(c.degree_in(jets[0]) >= 2 for _, c in sol.bt.items()):
        notes.append(f"t-derivatives use the solved b^t, including its {jets[0].name}^2 term")
        if any(b.definition for b in basis):
            notes.append("composite elements are named as [earlier, later]; [A0,A1] = -[A1,A0] flips the sign of that element only")

    reduced: list[LieElement] = []
    rech = _Echelon()
    for b in basis:
        r = normalize_modulo(b.element, sol.relations)
        if r and rech.add(r):
            reduced.append(_canonical(r))
    cap = degree_cap or max([b.element.degree() for b in basis] + [sol.relations.max_degree()]) + 1
    span = subalgebra_span([b.element for b in basis], sol.relations, degree_cap=cap, budget=budget, extend=False)
    return HolonomyFiltration(level, basis, reduced, span.closed, notes, span)


# ---------------------------------------------------------------------------
# closing the algebra over the filtration basis


LAMBDA = parameter("lambda")


@dataclass
class HolonomyClosure:
    basis: list[str]
    unknowns: list[Coordinate]
    equations: list[ScalarPoly]
    branch: Branch | None
    branches: list[Branch]
    q_values: dict[Coordinate, ScalarPoly]
    brackets: dict[tuple[str, str], dict[str, ScalarPoly]]
    expansions: dict[Generator, LieElement]
    free: list[Coordinate]
    certificate: ScalarPoly | None
    unsolved: list[ScalarPoly]
    perfect: bool | None
    notes: list[str] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.branch is not None and self.certificate is None

    @property
    def closed(self) -> bool:
        return self.consistent and not self.unsolved

    def bracket_lines(self) -> list[str]:
        out = []
        for (i, j), vec in self.brackets.items():
            out.append(f"[{i},{j}] = {_vec_text(vec, self.basis)}")
        return out

    def expansion_lines(self) -> list[str]:
        return [f"{g.name} = {e.to_text()}" for g, e in self.expansions.items()]

    def presentation(self) -> "Presentation":
        gens = {n: gen(n) for n in self.basis}
        rels = []
        for (i, j), vec in self.brackets.items():
            rhs = sum((LieElement.generator(gens[k]) * c for k, c in vec.items()), LieElement())
            rels.append(bracket(LieElement.generator(gens[i]), LieElement.generator(gens[j])) - rhs)
        return Presentation([gens[n] for n in self.basis], rels, dict(self.expansions))

    def structure_constants(self) -> StructureConstants:
        idx = {n: k for k, n in enumerate(self.basis)}
        table = {}
        for (i, j), vec in self.brackets.items():
            for k, c in vec.items():
                table[(idx[k], idx[i], idx[j])] = c
                table[(idx[k], idx[j], idx[i])] = -c
        return StructureConstants(len(self.basis), table)

    def to_json(self) -> dict:
        out = {
            "consistent": self.consistent,
            "closed": self.closed,
            "basis": list(self.basis),
            "q_values": {c.name: v.to_text() for c, v in sorted(self.q_values.items(), key=lambda kv: kv[0].name)},
            "free": [c.name for c in self.free],
            "brackets": self.bracket_lines(),
            "expansions": self.expansion_lines(),
            "unsolved": [e.to_text() for e in self.unsolved],
            "perfect": self.perfect,
            "branches": len(self.branches),
            "notes": list(self.notes),
        }
        if self.certificate is not None:
            out["certificate"] = f"{self.certificate.to_text()} = 0"
        return out


def _vec_text(vec: Mapping[str, ScalarPoly], order: Sequence[str]) -> str:
    e = LieElement()
    for k in order:
        c = vec.get(k)
        if c:
            e = e + LieElement.generator(gen(k)) * c
    return e.to_text()


@dataclass
class Presentation:
    """Basis generators, relations among them, and expansions of the other generators."""

    basis: list[Generator]
    relations: list[LieElement]
    expansions: dict[Generator, LieElement] = field(default_factory=dict)

    def all_relations(self) -> list[LieElement]:
        return list(self.relations) + [LieElement.generator(g) - e for g, e in self.expansions.items()]

    def to_json(self) -> dict:
        return {
            "basis": [g.name for g in self.basis],
            "relations": [r.to_text() for r in self.relations],
            "expansions": {g.name: e.to_text() for g, e in self.expansions.items()},
        }


class _Evaluator:
    """Coordinates over a named basis, with unknown structure constants."""

    def __init__(self, names: list[str], expansions: Mapping[Generator, LieElement], consts: dict):
        self.names = names
        self.expansions = {g.name: e for g, e in expansions.items()}
        self.consts = consts
        self.cache = {}

    def vec_of_name(self, n: str) -> dict:
        if n in self.names:
            return {n: ScalarPoly.const(1)}
        if n in self.expansions:
            if n not in self.cache:
                self.cache[n] = {}
                self.cache[n] = self.element(self.expansions[n])
            return self.cache[n]
        raise KeyError(f"generator {n} is neither in the basis nor expanded")

    def tree(self, t) -> dict:
        if isinstance(t, Generator):
            return self.vec_of_name(t.name)
        return self.br(self.tree(t[0]), self.tree(t[1]))

    def element(self, x: LieElement) -> dict:
        out: dict = {}
        for m, c in x.items():
            for k, v in self.tree(m.tree()).items():
                out[k] = out.get(k, ScalarPoly()) + v * c
        return {k: v for k, v in out.items() if v}

    def br(self, a: dict, b: dict) -> dict:
        out: dict = {}
        for i, ci in a.items():
            for j, cj in b.items():
                if i == j:
                    continue
                ii, jj = self.names.index(i), self.names.index(j)
                sign = 1 if ii < jj else -1
                key = (i, j) if ii < jj else (j, i)
                for k, s in self.consts[key].items():
                    out[k] = out.get(k, ScalarPoly()) + ci * cj * s * sign
        return {k: v for k, v in out.items() if v}


def holonomy_close(sol: ProlongationSolution, filtration: HolonomyFiltration,
                   expansions: Mapping[Generator, LieElement], free_parameter: str = "lambda",
                   budget: int = 10_000) -> HolonomyClosure:
    """Solve for expansion coefficients and brackets that close the algebra.

    Unknowns are the coefficients appearing in ``expansions`` and one
    structure constant per (basis pair, basis element).  Equations come from
    the definitions of composite basis elements, the solution's relations,
    and the Jacobi identity.
    """
    names = filtration.names
    expansions = dict(expansions)
    q_coords = sorted({c for e in expansions.values() for c in e.variables()}, key=lambda c: c.name)
    consts = {}
    c_coords = []
    for i, j in combinations(names, 2):
        row = {}
        for k in names:
            c = parameter(f"c{k[1:]}_{i[1:]}_{j[1:]}")
            c_coords.append(c)
            row[k] = ScalarPoly.var(c)
        consts[(i, j)] = row
    ev = _Evaluator(names, expansions, consts)
    eqs: list[ScalarPoly] = []

    def emit(vec: dict):
        for k in names:
            v = vec.get(k)
            if v:
                eqs.append(v)

    for b in filtration.basis:
        if b.definition:
            p, q = b.definition
            target = {b.name: ScalarPoly.const(1)}
            got = ev.br(ev.vec_of_name(p), ev.vec_of_name(q))
            emit({k: target.get(k, ScalarPoly()) - got.get(k, ScalarPoly()) for k in set(target) | set(got)})
    for r in sol.relations:
        emit(ev.element(r))
    units = [{n: ScalarPoly.const(1)} for n in names]
    for a, b, c in combinations(range(len(names)), 3):
        x, y, z = units[a], units[b], units[c]
        parts = [ev.br(x, ev.br(y, z)), ev.br(y, ev.br(z, x)), ev.br(z, ev.br(x, y))]
        total: dict = {}
        for part in parts:
            for k, v in part.items():
                total[k] = total.get(k, ScalarPoly()) + v
        emit(total)

    unknowns = q_coords + c_coords
    solution = solve_polynomial(unknowns, eqs, budget)
    usable = [b for b in solution.branches if b.complete]
    branch = usable[0] if usable else (solution.consistent[0] if solution.consistent else None)
    notes = []
    if len(usable) > 1:
        notes.append(f"{len(usable)} solution branches; reporting the first")
    if branch is None:
        cert = solution.certificate
        return HolonomyClosure(names, unknowns, eqs, None, solution.branches, {}, {}, {}, [], cert, [],
                               filtration.perfect, notes)
    values = dict(branch.values)
    free = [u for u in unknowns if u in branch.free]
    rename = {}
    if len(free) == 1 and free[0] in q_coords:
        lam = parameter(free_parameter)
        rename = {free[0]: ScalarPoly.var(lam)}
        notes.append(f"{free[0].name} renamed {free_parameter}")
        values = {k: v.subs(rename) for k, v in values.items()}
        values[free[0]] = ScalarPoly.var(lam)
        free = [lam]
    full = {u: values.get(u, ScalarPoly.var(u)) for u in unknowns}
    q_values = {q: full[q] for q in q_coords}
    brackets = {}
    for key, row in consts.items():
        vec = {k: v.subs(full) for k, v in row.items()}
        brackets[key] = {k: v for k, v in vec.items() if v}
    exps = {g: e.subs(full) for g, e in expansions.items()}
    unsolved = [e.subs(rename) for e in branch.unsolved]
    return HolonomyClosure(names, unknowns, eqs, branch, solution.branches, q_values, brackets, exps, free,
                           None, unsolved, filtration.perfect, notes)


# ---------------------------------------------------------------------------
# adjoint coefficients


def adjoint_xi(sc: StructureConstants, y: Sequence[Coordinate]) -> Matrix:
    """ξ^j_i(y) = Σ_k c^j_{ik} y^k as a matrix indexed [j][i]."""
    r = sc.dimension
    if len(y) != r:
        raise ValueError("need one coordinate per basis element")
    rows = []
    for j in range(r):
        row = []
        for i in range(r):
            s = ScalarPoly()
            for k in range(r):
                c = sc.c(j, i, k)
                if c:
                    s = s + c * ScalarPoly.var(y[k])
            row.append(s)
        rows.append(row)
    return Matrix(rows)
