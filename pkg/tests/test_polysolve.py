from fractions import Fraction

import pytest
import sympy

from lieprolong.polysolve import SolverBudgetExceeded, solve_polynomial
from lieprolong.symscalar import ScalarPoly, parameter

a, b, c, lam = (parameter(n) for n in ("a", "b", "c", "lambda"))
A, B, C, L = (ScalarPoly.var(v) for v in (a, b, c, lam))


def _check(branch, equations):
    vals = {u: branch.values.get(u, ScalarPoly.var(u)) for u in (a, b, c)}
    for e in equations:
        assert not e.subs(vals) or branch.unsolved


def test_linear_system():
    eqs = [A + B - 3, A - B - 1]
    sol = solve_polynomial([a, b], eqs)
    (br,) = sol.branches
    assert br.complete and br.values == {a: ScalarPoly.const(2), b: ScalarPoly.const(1)}


def test_product_splits_into_branches():
    eqs = [A * B, A + B - 1]
    sol = solve_polynomial([a, b], eqs)
    found = sorted((br.values[a].constant_value(), br.values[b].constant_value()) for br in sol.consistent)
    assert found == [(0, 1), (1, 0)]
    for br in sol.branches:
        _check(br, eqs)


def test_rational_roots_match_sympy():
    eqs = [A**3 * 2 - A**2 * 3 + A, B - A]
    sol = solve_polynomial([a, b], eqs)
    ours = sorted(br.values[a].constant_value() for br in sol.consistent)
    x = sympy.Symbol("x")
    theirs = sorted(Fraction(str(r)) for r in sympy.solve(2 * x**3 - 3 * x**2 + x, x))
    assert ours == theirs


def test_parametric_solution_keeps_parameter_symbolic():
    # a*b = lambda, a = 1 solves to b = lambda
    sol = solve_polynomial([a, b], [A * B - L, A - 1])
    (br,) = sol.consistent
    assert br.values[b] == L and not br.free


def test_free_unknowns_reported():
    sol = solve_polynomial([a, b, c], [A - B])
    (br,) = sol.branches
    assert br.complete and len(br.free) == 2


def test_inconsistent_system_certificate():
    sol = solve_polynomial([a], [A - 1, A - 2])
    assert not sol.consistent
    assert sol.certificate.is_constant() and sol.certificate
    assert "= 0" in sol.branches[0].to_json()["certificate"]


def test_irrational_roots_left_unsolved():
    sol = solve_polynomial([a], [A**2 - 2])
    (br,) = sol.branches
    assert br.consistent and not br.complete
    assert br.unsolved[0].to_text() == "a^2 - 2"


def test_budget():
    with pytest.raises(SolverBudgetExceeded):
        solve_polynomial([a, b], [A * B, A + B - 1], budget=1)


def test_branch_order_is_deterministic():
    eqs = [A * B * C, A + B + C - 1]
    first = [br.to_json() for br in solve_polynomial([a, b, c], eqs).branches]
    second = [br.to_json() for br in solve_polynomial([a, b, c], list(reversed(eqs))).branches]
    assert first == second
