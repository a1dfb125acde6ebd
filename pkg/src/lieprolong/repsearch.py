"""Matrix representations, Lax pairs and the zero-curvature check."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .liealg import Generator, LieElement, RelationSet
from .matrix import Matrix, commutator
from .polysolve import solve_polynomial
from .prolongation import EvolutionPDE, Presentation, ProlongationSolution
from .symscalar import Coordinate, LinearSystem, ScalarPoly, parameter, solve_linear

TEMPLATES = ("upper", "lower", "diagonal", "full")


class MissingGenerator(KeyError):
    pass


class UnverifiedRepresentation(ValueError):
    def __init__(self, report: "RepReport"):
        super().__init__("representation does not satisfy the relations")
        self.report = report


@dataclass
class MatrixRep:
    dim: int
    matrices: dict[Generator, Matrix]

    def __post_init__(self):
        for g, m in self.matrices.items():
            if m.shape != (self.dim, self.dim):
                raise ValueError(f"matrix for {g.name} is not {self.dim}x{self.dim}")

    def __getitem__(self, g: Generator) -> Matrix:
        try:
            return self.matrices[g]
        except KeyError:
            raise MissingGenerator(f"no matrix assigned to {g.name}") from None

    def _tree(self, t, cache) -> Matrix:
        if isinstance(t, Generator):
            return self[t]
        if t not in cache:
            cache[t] = commutator(self._tree(t[0], cache), self._tree(t[1], cache))
        return cache[t]

    def evaluate(self, x: LieElement) -> Matrix:
        cache: dict = {}
        out = Matrix.zeros(self.dim)
        for m, c in x.items():
            out = out + self._tree(m.tree(), cache).scale(c)
        return out

    def map(self, fn) -> "MatrixRep":
        return MatrixRep(self.dim, {g: fn(m) for g, m in self.matrices.items()})

    def subs(self, bindings) -> "MatrixRep":
        return self.map(lambda m: m.subs(bindings))

    def conjugate(self, p: Matrix, p_inv: Matrix) -> "MatrixRep":
        return self.map(lambda m: p @ m @ p_inv)

    def variables(self) -> set[Coordinate]:
        out = set()
        for m in self.matrices.values():
            for _, _, v in m.entries():
                out |= v.variables()
        return out

    def to_json(self) -> dict:
        return {g.name: m.to_json() for g, m in sorted(self.matrices.items())}

    def lines(self) -> list[str]:
        return [f"{g.name} = {m.to_text()}" for g, m in sorted(self.matrices.items())]


@dataclass
class RepReport:
    residuals: list[tuple[LieElement, Matrix]]
    missing: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.missing and all(m.is_zero() for _, m in self.residuals)

    def failures(self) -> list[tuple[LieElement, Matrix]]:
        return [(r, m) for r, m in self.residuals if not m.is_zero()]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "checked": len(self.residuals),
            "missing": list(self.missing),
            "failures": [{"relation": r.to_text(), "residual": m.to_json()} for r, m in self.failures()],
        }


def _relations_of(presentation) -> list[LieElement]:
    if isinstance(presentation, Presentation):
        return presentation.all_relations()
    if isinstance(presentation, RelationSet):
        return list(presentation.relations)
    return list(presentation)


def verify_rep(presentation: Presentation | RelationSet | Iterable[LieElement], rep: MatrixRep) -> RepReport:
    """Evaluate every relation with matrix commutators; exact zero required."""
    rels = _relations_of(presentation)
    needed = set()
    for r in rels:
        needed |= r.generators()
    if isinstance(presentation, Presentation):
        needed |= set(presentation.basis)
    missing = sorted(g.name for g in needed if g not in rep.matrices)
    if missing:
        return RepReport([], missing)
    return RepReport([(r, rep.evaluate(r)) for r in rels])


# ---------------------------------------------------------------------------
# templated search


def _template_cells(n: int, template: str) -> list[tuple[int, int]]:
    if template == "upper":
        return [(i, j) for i in range(n) for j in range(i, n)]
    if template == "lower":
        return [(i, j) for i in range(n) for j in range(i + 1)]
    if template == "diagonal":
        return [(i, i) for i in range(n)]
    if template == "full":
        return [(i, j) for i in range(n) for j in range(n)]
    raise ValueError(f"unknown template {template!r}; expected one of {', '.join(TEMPLATES)}")


def _entry_name(g: Generator, i: int, j: int) -> str:
    tag = g.name[1:] if g.name[:1].isalpha() and g.name[1:].isdigit() else g.name
    return f"a{tag}_{i + 1}{j + 1}"


@dataclass
class RepCandidate:
    rep: MatrixRep
    free: list[Coordinate]
    faithful: bool
    assumptions: dict[str, str]

    def to_json(self) -> dict:
        return {
            "matrices": self.rep.to_json(),
            "free": [c.name for c in self.free],
            "faithful": self.faithful,
            "assumptions": dict(self.assumptions),
        }


@dataclass
class RepSearchResult:
    dim: int
    template: str
    candidates: list[RepCandidate]
    notes: list[str] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return bool(self.candidates)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "template": self.template,
            "found": len(self.candidates),
            "candidates": [c.to_json() for c in self.candidates],
            "notes": list(self.notes),
        }


def _independent(mats: Sequence[Matrix]) -> bool:
    """Linear independence over the field of rational functions in the free entries."""
    if not mats:
        return True
    ks = [parameter(f"k{i}") for i in range(len(mats))]
    eqs = []
    n = mats[0].shape[0]
    for i in range(n):
        for j in range(n):
            e = ScalarPoly()
            for k, m in zip(ks, mats):
                e = e + m[i, j] * ScalarPoly.var(k)
            if e:
                eqs.append(e)
    sol = solve_linear(LinearSystem(ks, eqs))
    return not sol.free


def complete_rep(presentation: Presentation, basis_rep: Mapping[Generator, Matrix], dim: int) -> MatrixRep:
    """Add matrices for the expanded generators."""
    rep = MatrixRep(dim, dict(basis_rep))
    for g, e in presentation.expansions.items():
        rep.matrices[g] = rep.evaluate(e)
    return rep


def search_rep(presentation: Presentation, dim: int, template: str = "upper",
               budget: int = 10_000) -> RepSearchResult:
    """Solve the relations for matrices of the given shape.

    Every basis generator gets a template matrix of unknown entries; the
    relations give polynomial equations in those entries.  Each consistent
    branch becomes a family whose remaining free entries stay symbolic.
    """
    if dim < 1 or dim > 4:
        raise ValueError("representation dimension must be between 1 and 4")
    cells = _template_cells(dim, template)
    unknowns = []
    basis_rep = {}
    for g in presentation.basis:
        rows = [[ScalarPoly() for _ in range(dim)] for _ in range(dim)]
        for i, j in cells:
            c = parameter(_entry_name(g, i, j))
            unknowns.append(c)
            rows[i][j] = ScalarPoly.var(c)
        basis_rep[g] = Matrix(rows)
    trial = MatrixRep(dim, basis_rep)
    eqs = []
    for r in presentation.relations:
        for _, _, v in trial.evaluate(r).entries():
            if v:
                eqs.append(v)
    solution = solve_polynomial(unknowns, eqs, budget)
    notes = []
    candidates = []
    for br in solution.branches:
        if not br.consistent:
            continue
        if br.unsolved:
            notes.append("a branch with unsolved entry equations was skipped: "
                         + "; ".join(e.to_text() for e in br.unsolved))
            continue
        values = {u: br.values.get(u, ScalarPoly.var(u)) for u in unknowns}
        mats = {g: m.subs(values) for g, m in basis_rep.items()}
        rep = complete_rep(presentation, mats, dim)
        if not verify_rep(presentation, rep).passed:
            raise AssertionError("search produced a representation that fails verification")
        faithful = _independent([mats[g] for g in presentation.basis])
        assumptions = {c.name: str(v) for c, v in br.assumptions}
        candidates.append(RepCandidate(rep, list(br.free), faithful, assumptions))
    candidates.sort(key=lambda c: (not c.faithful, "\n".join(c.rep.lines())))
    return RepSearchResult(dim, template, candidates, notes)


# ---------------------------------------------------------------------------
# Lax pairs


@dataclass
class LaxPair:
    u: Matrix
    v: Matrix
    jets: list[Coordinate]

    def subs(self, bindings) -> "LaxPair":
        return LaxPair(self.u.subs(bindings), self.v.subs(bindings), self.jets)

    def __add__(self, other: "LaxPair") -> "LaxPair":
        return LaxPair(self.u + other.u, self.v + other.v, self.jets)

    def to_json(self) -> dict:
        return {"U": self.u.to_json(), "V": self.v.to_json()}


def assemble_lax(sol: ProlongationSolution, rep: MatrixRep) -> LaxPair:
    """Evaluate b^x and b^t in the representation."""
    report = verify_rep(sol.relations, rep)
    if not report.passed:
        raise UnverifiedRepresentation(report)
    return LaxPair(rep.evaluate(sol.bx), rep.evaluate(sol.bt), list(sol.jets))


CONVENTION = "D_x V - D_t U + [U,V]"


@dataclass
class ZeroCurvatureReport:
    residual: Matrix
    pde: str
    convention: str = CONVENTION

    @property
    def passed(self) -> bool:
        return self.residual.is_zero()

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "pde": self.pde,
            "convention": self.convention,
            "residual": self.residual.to_json(),
        }


def verify_zero_curvature(pair: LaxPair, pde: EvolutionPDE) -> ZeroCurvatureReport:
    """Flatness of ``dy + (U dx + V dt) y = 0`` on solutions of the equation.

    Compatibility of ``y_x = -U y`` and ``y_t = -V y`` is
    ``D_x V - D_t U + [U, V] = 0`` with total derivatives, where ``u_t`` and
    its x-derivatives are replaced through the equation.
    """
    dxv = pair.v.map(pde.total_x)
    dtu = pair.u.map(pde.total_t)
    res = dxv - dtu + commutator(pair.u, pair.v)
    return ZeroCurvatureReport(res, pde.to_text())


@dataclass
class LinearProblem:
    x_lines: list[str]
    t_lines: list[str]

    def lines(self) -> list[str]:
        return self.x_lines + self.t_lines

    def to_json(self) -> dict:
        return {"x": list(self.x_lines), "t": list(self.t_lines)}


def linear_problem_report(pair: LaxPair) -> LinearProblem:
    """``y_x = -U y`` and ``y_t = -V y`` written out componentwise."""
    n = pair.u.shape[0]
    ys = [ScalarPoly.var(parameter(f"y{i + 1}")) for i in range(n)]

    def rows(m: Matrix, z: str) -> list[str]:
        out = []
        for i in range(n):
            e = ScalarPoly()
            for j in range(n):
                e = e - m[i, j] * ys[j]
            out.append(f"y{i + 1}_{z} = {e.to_text()}")
        return out

    return LinearProblem(rows(pair.u, "x"), rows(pair.v, "t"))
