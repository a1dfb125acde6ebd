import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from lieprolong.liealg import gen
from lieprolong.matrix import Matrix, inverse
from lieprolong.prolongation import LAMBDA, EvolutionPDE
from lieprolong.repsearch import (
    MatrixRep,
    UnverifiedRepresentation,
    assemble_lax,
    linear_problem_report,
    search_rep,
    verify_rep,
    verify_zero_curvature,
)
from lieprolong.symscalar import ScalarPoly

from .conftest import U0, U1, U2, small_fraction, wide_fraction


@pytest.fixture(scope="module")
def given_rep(burgers_spec):
    return MatrixRep(2, burgers_spec.rep_map())


@pytest.fixture(scope="module")
def presentation(burgers_closure):
    return burgers_closure.presentation()


@pytest.fixture(scope="module")
def lax(burgers_solution, given_rep):
    return assemble_lax(burgers_solution, given_rep)


def test_given_matrices_satisfy_both_relation_sets(given_rep, presentation, burgers_solution):
    assert verify_rep(presentation, given_rep).passed
    assert verify_rep(burgers_solution.relations, given_rep).passed


def test_missing_matrix_reported(given_rep, presentation):
    partial = MatrixRep(2, {g: m for g, m in given_rep.matrices.items() if g.name != "A3"})
    rep = verify_rep(presentation, partial)
    assert not rep.passed and rep.missing == ["A3"]


def test_wrong_matrix_fails(given_rep, presentation):
    bad = dict(given_rep.matrices)
    bad[gen("A3")] = Matrix([[0, 0], [1, 0]])
    rep = verify_rep(presentation, MatrixRep(2, bad))
    assert not rep.passed and rep.failures()


def test_search_upper_two_by_two(presentation):
    res = search_rep(presentation, 2, "upper")
    assert res.found
    assert res.candidates[0].faithful
    for c in res.candidates:
        assert verify_rep(presentation, c.rep).passed


@settings(max_examples=50, deadline=None)
@given(st.lists(small_fraction, min_size=3, max_size=3))
def test_search_family_members_verify(presentation, values):
    fam = search_rep(presentation, 2, "upper").candidates[0]
    binding = dict(zip(fam.free, values))
    assert verify_rep(presentation, fam.rep.subs(binding)).passed


def test_search_diagonal_only_abelian(presentation):
    res = search_rep(presentation, 2, "diagonal")
    assert all(not c.faithful for c in res.candidates)


def test_unknown_template(presentation):
    with pytest.raises(ValueError):
        search_rep(presentation, 2, "banded")


def invertible():
    return st.lists(wide_fraction, min_size=4, max_size=4).filter(lambda v: v[0] * v[3] - v[1] * v[2] != 0)


@settings(max_examples=200, deadline=None)
@given(invertible(), st.booleans())
def test_verify_rep_is_conjugation_invariant(given_rep, presentation, p_entries, perturb):
    rep = given_rep
    if perturb:
        mats = dict(rep.matrices)
        mats[gen("A3")] = mats[gen("A3")] + Matrix.identity(2)
        rep = MatrixRep(2, mats)
    p = Matrix([p_entries[:2], p_entries[2:]])
    before = verify_rep(presentation, rep).passed
    after = verify_rep(presentation, rep.conjugate(p, inverse(p))).passed
    assert before == after == (not perturb)


# -- Lax pair and zero curvature ----------------------------------------------------------


def test_lax_pair_entries(lax):
    assert lax.u.to_text() == "[[1/4*u0 + 1/4*lambda, -2], [0, -1/4*u0 - 1/4*lambda]]"
    assert verify_zero_curvature(lax, EvolutionPDE.from_rhs("u", burgers_rhs())).passed


def burgers_rhs():
    return ScalarPoly.var(U0) * ScalarPoly.var(U1) + ScalarPoly.var(U2)


def test_heat_residual_is_proportional_to_u_ux(lax):
    rep = verify_zero_curvature(lax, EvolutionPDE.from_rhs("u", ScalarPoly.var(U2)))
    assert not rep.passed
    uux = ScalarPoly.var(U0) * ScalarPoly.var(U1)
    assert rep.residual == Matrix([[uux / 4, 0], [0, -uux / 4]])


def _sympy_matrix(m: Matrix, u):
    x, t = u.args
    subs = {"u0": u, "u1": sympy.diff(u, x), "u2": sympy.diff(u, x, 2), "lambda": sympy.Symbol("lambda")}
    rows = []
    for i in range(m.shape[0]):
        row = []
        for j in range(m.shape[1]):
            e = sympy.Integer(0)
            for mono, c in m[i, j].items():
                term = sympy.Rational(c.numerator, c.denominator)
                for v, k in mono:
                    term *= subs[v.name] ** k
                e += term
            row.append(e)
        rows.append(row)
    return sympy.Matrix(rows)


def test_zero_curvature_against_sympy(lax):
    # independent check with u(x, t) as an unknown function and u_t eliminated by hand
    x, t = sympy.symbols("x t")
    u = sympy.Function("u")(x, t)
    U, V = _sympy_matrix(lax.u, u), _sympy_matrix(lax.v, u)
    curv = sympy.diff(V, x) - sympy.diff(U, t) + U * V - V * U
    ut = u * sympy.diff(u, x) + sympy.diff(u, x, 2)
    curv = curv.subs(sympy.Derivative(u, x, x, t), sympy.diff(ut, x, 2))
    curv = curv.subs(sympy.Derivative(u, x, t), sympy.diff(ut, x)).subs(sympy.Derivative(u, t), ut)
    assert sympy.simplify(curv) == sympy.zeros(2, 2)


@settings(max_examples=200, deadline=None)
@given(wide_fraction)
def test_zero_curvature_survives_lambda_specialization(lax, value):
    pde = EvolutionPDE.from_rhs("u", burgers_rhs())
    special = lax.subs({LAMBDA: ScalarPoly.const(value)})
    assert LAMBDA not in {v for m in (special.u, special.v) for _, _, e in m.entries() for v in e.variables()}
    assert verify_zero_curvature(special, pde).passed


def test_assemble_rejects_unverified(burgers_solution, given_rep):
    mats = dict(given_rep.matrices)
    mats[gen("A1")] = Matrix([[0, 1], [0, 0]])  # [A0,A1] survives, so the last relation fails
    with pytest.raises(UnverifiedRepresentation):
        assemble_lax(burgers_solution, MatrixRep(2, mats))


def test_linear_problem_lines(lax):
    lines = linear_problem_report(lax).lines()
    assert lines[0] == "y1_x = -1/4*u0*y1 - 1/4*lambda*y1 + 2*y2"
    assert len(lines) == 4
