"""Left-invariant Maurer-Cartan forms from structure constants.

For a = exp(sum a^i e_i) the form a^{-1} da has components
omega^j = sum_k W^j_k da^k with W = sum_{n>=1} A^{n-1}/n! and
A^j_k = sum_i c^j_{ki} a^i.  For nilpotent algebras the series stops and
everything is exact; otherwise it is truncated and the Maurer-Cartan
residual is only guaranteed to vanish below a-degree N-1.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

from .grassmann import DiffForm, d, exterior_derivative, wedge
from .liealg import StructureConstants, validate_structure_constants
from .matrix import Matrix
from .symscalar import Coordinate, ScalarPoly, group

DEFAULT_ORDER = 6


class InvalidStructureConstants(ValueError):
    def __init__(self, report):
        super().__init__(f"invalid structure constants: {report.violation} at {report.indices}")
        self.report = report


def group_coordinates(r: int) -> list[Coordinate]:
    return [group(i + 1) for i in range(r)]


@dataclass
class AMatrix:
    matrix: Matrix
    coordinates: list[Coordinate]


@dataclass
class WMatrix:
    matrix: Matrix
    order: int
    exact: bool
    nilpotency: int | None = None  # smallest m with A^m = 0, when found

    def to_json(self) -> dict:
        return {"order": self.order, "exact": self.exact, "nilpotency": self.nilpotency,
                "W": self.matrix.to_json()}


@dataclass
class MCForm:
    components: list[DiffForm]
    w: WMatrix

    @property
    def exact(self) -> bool:
        return self.w.exact

    def to_json(self) -> dict:
        return {"components": [c.to_text() for c in self.components], "W": self.w.to_json()}


def build_a_matrix(sc: StructureConstants) -> AMatrix:
    rep = validate_structure_constants(sc)
    if not rep.valid:
        raise InvalidStructureConstants(rep)
    r = sc.dimension
    a = group_coordinates(r)
    rows = []
    for j in range(r):
        row = []
        for k in range(r):
            s = ScalarPoly()
            for i in range(r):
                c = sc.c(j, k, i)
                if c:
                    s = s + c * ScalarPoly.var(a[i])
            row.append(s)
        rows.append(row)
    return AMatrix(Matrix(rows), a)


def w_series(a: AMatrix, order: int = DEFAULT_ORDER) -> WMatrix:
    """Partial sum sum_{n=1..order} A^{n-1}/n!, flagged exact when A^m = 0 for some m <= order."""
    if order < 1:
        raise ValueError("series order must be >= 1")
    r = a.matrix.shape[0]
    total = Matrix.zeros(r)
    power = Matrix.identity(r)
    nil = None
    for n in range(1, order + 1):
        if power.is_zero():
            nil = n - 1
            break
        total = total + power / factorial(n)
        power = power @ a.matrix
    if nil is None and power.is_zero():
        nil = order
    return WMatrix(total, order, nil is not None, nil)


def mc_form(sc: StructureConstants, order: int | None = None) -> MCForm:
    """Assemble omega^j = sum_k W^j_k da^k.

    ``order=None`` means: exact when the algebra is nilpotent (detected up to
    the default order), otherwise the default truncation.
    """
    a = build_a_matrix(sc)
    w = w_series(a, order or DEFAULT_ORDER)
    r = sc.dimension
    comps = []
    for j in range(r):
        f = DiffForm(1)
        for k in range(r):
            if w.matrix[j, k]:
                f = f + d(a.coordinates[k]) * w.matrix[j, k]
        comps.append(f)
    return MCForm(comps, w)


@dataclass
class MCResidualReport:
    residuals: list[DiffForm]
    exact: bool
    order: int
    coordinates: tuple = ()

    @property
    def min_degree(self) -> int | None:
        degs = [f.min_degree_in(self.coordinates) for f in self.residuals if f]
        return min(degs) if degs else None

    @property
    def passed(self) -> bool:
        if all(f.is_zero() for f in self.residuals):
            return True
        if self.exact:
            return False
        return self.min_degree >= self.order - 1

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "exact": self.exact,
            "order": self.order,
            "min_residual_degree": self.min_degree,
            "residuals": [f.to_text() for f in self.residuals],
        }


def verify_mc_equation(omega: MCForm, sc: StructureConstants, order: int | None = None) -> MCResidualReport:
    """Residual d(omega^j) + 1/2 sum_{i,k} c^j_{ik} omega^i ^ omega^k per component."""
    r = sc.dimension
    res = []
    for j in range(r):
        f = exterior_derivative(omega.components[j])
        for i in range(r):
            for k in range(r):
                c = sc.c(j, i, k)
                if c:
                    f = f + wedge(omega.components[i], omega.components[k]) * (c / 2)
        res.append(f)
    return MCResidualReport(res, omega.exact, order or omega.w.order, tuple(group_coordinates(r)))
