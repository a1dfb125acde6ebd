import pytest

from lieprolong.grassmann import d
from lieprolong.liealg import LieElement, bracket, gen, normalize_modulo
from lieprolong.prolongation import (
    LAMBDA,
    ConnectionAnsatz,
    EvolutionPDE,
    contact_ideal_from_pde,
    covariant_derivative,
    derive_determining,
    holonomy_close,
    holonomy_filtration,
    ideal_from_forms,
    solve_determining,
)
from lieprolong.symscalar import ScalarPoly, parameter
from lieprolong.syntax import parse_lie, parse_poly

from .conftest import U0, U1, U2, X

A = {i: LieElement.generator(gen(i)) for i in range(8)}


def flatness_defect(sol, pde):
    """D_x b^t - D_t b^x + [b^x, b^t] reduced modulo the relations."""
    dx_bt = sol.bt.map_coefficients(pde.total_x)
    dt_bx = sol.bx.map_coefficients(pde.total_t)
    return normalize_modulo(dx_bt - dt_bx + bracket(sol.bx, sol.bt), sol.relations)


def pipeline(rhs_text, bx=1, bt=2):
    rhs = parse_poly(rhs_text, [U0, U1, U2])
    pde = EvolutionPDE.from_rhs("u", rhs)
    ideal = contact_ideal_from_pde(pde)
    system = derive_determining(ideal, ConnectionAnsatz.formal_ansatz(ideal.jets, bx, bt))
    return pde, system, solve_determining(system)


# -- equations and ideals ----------------------------------------------------------


def test_evolution_pde_split():
    pde = EvolutionPDE.from_rhs("u", ScalarPoly.var(U0) * ScalarPoly.var(U1) + ScalarPoly.var(U2))
    assert pde.order == 2 and pde.f == ScalarPoly.var(U0) * ScalarPoly.var(U1)
    with pytest.raises(ValueError):
        EvolutionPDE.from_rhs("u", ScalarPoly.var(U1, 2))


def test_total_derivatives(burgers_pde):
    assert burgers_pde.total_x(ScalarPoly.var(U0) ** 2) == ScalarPoly.var(U0) * ScalarPoly.var(U1) * 2
    # D_t u1 = D_x(u0 u1 + u2) = u1^2 + u0 u2 + u3
    assert burgers_pde.total_t(ScalarPoly.var(U1)).to_text() == "u0*u2 + u1^2 + u3"


def test_burgers_ideal(burgers_ideal):
    assert burgers_ideal.closure.closed
    assert [g.to_text() for g in burgers_ideal.generators] == [
        "-u1*dx^dt - dt^du0",
        "-dx^du0 - u0*dt^du0 - dt^du1",
    ]
    cert = burgers_ideal.closure.certificates[0]
    assert [m.to_text() for m in cert.multipliers] == ["-u0*dx", "dx"]


def test_non_closed_forms_are_reported_not_raised():
    ideal = ideal_from_forms([d(X) * ScalarPoly.var(U0)], [U0])
    assert not ideal.closure.closed


# -- determining equations -----------------------------------------------------------


def test_burgers_determining_equations(burgers_system):
    assert burgers_system.lines() == [
        "Bx_u0 = G2",
        "Bx_u1 = 0",
        "Bt_u0 = G1 + u0*G2",
        "Bt_u1 = G2",
        "[Bx,Bt] = -u1*G1",
    ]
    assert burgers_system.residual_lines() == [
        "Bx_u1 = 0",
        "Bt_u1 = Bx_u0",
        "[Bx,Bt] = u0*u1*Bx_u0 - u1*Bt_u0",
    ]


# -- solution ---------------------------------------------------------------------


def test_burgers_solution(burgers_solution):
    sol = burgers_solution
    assert sol.verified and not sol.unsolved
    assert sol.bx.to_text() == "A0 + u0*A1"
    assert sol.bt.to_text() == "(1/2*u0^2 + u1)*A1 + A2 - u0*[A0,A1]"
    assert sol.relations.to_json() == ["[A0,A2]", "[A1,A2] - [A0,[A0,A1]]", "1/2*[A0,A1] + [[A0,A1],A1]"]


@pytest.mark.parametrize("rhs", ["u0*u1 + u2", "u2", "u1", "u0^2*u1 + u2", "u0 + u2"])
def test_solutions_are_flat_on_solutions(rhs):
    pde, _, sol = pipeline(rhs)
    assert sol.verified
    assert flatness_defect(sol, pde).is_zero()


def test_heat_relations():
    _, _, sol = pipeline("u2")
    assert "[[A0,A1],A1]" in sol.relations.to_json()


def test_constant_ansatz_gives_commuting_pair():
    pde, _, sol = pipeline("u0*u1 + u2", 0, 0)
    assert (sol.bx.to_text(), sol.bt.to_text()) == ("A0", "A1")
    assert sol.relations.to_json() == ["[A0,A1]"]
    assert flatness_defect(sol, pde).is_zero()


# -- holonomy ---------------------------------------------------------------------


def test_covariant_derivative():
    # nabla_x (u0 A1) with Gamma_x = A0 + u0 A1 is A1*d/dx(u0) + u0*[A0, A1]
    g = parse_lie("A0 + u0*A1", [U0])
    x = parse_lie("u0*A1", [U0])
    assert covariant_derivative(g, x, U0) == A[1] + bracket(A[0], A[1]) * ScalarPoly.var(U0)


def test_level_zero_filtration(burgers_solution):
    f = holonomy_filtration(burgers_solution, 0)
    assert f.names == ["A1", "A3"]
    assert f.elements == [A[1], bracket(A[0], A[1])]
    assert f.perfect is True


def test_level_one_filtration(burgers_solution):
    f = holonomy_filtration(burgers_solution, 1)
    assert f.names == ["A1", "A3", "A4", "A5", "A6", "A7"]
    defs = {b.name: b.definition for b in f.basis if b.definition}
    assert defs == {"A3": ("A0", "A1"), "A4": ("A0", "A3"), "A5": ("A1", "A3"),
                    "A6": ("A1", "A2"), "A7": ("A2", "A3")}
    a3 = bracket(A[0], A[1])
    by_name = {b.name: b.element for b in f.basis}
    assert by_name["A7"] == bracket(A[2], a3)
    assert by_name["A5"] == bracket(A[1], a3)
    assert f.perfect is False
    assert len(f.reduced_basis) == 4
    assert any("sign" in n for n in f.notes)


def test_closure_values(burgers_closure):
    c = burgers_closure
    assert c.closed and c.perfect
    q = {k.name: v.to_text() for k, v in c.q_values.items()}
    assert q == {"q01": "lambda", "q03": "-2", "q21": "-1/2*lambda^2", "q23": "lambda"}
    assert c.free == [LAMBDA]
    assert c.bracket_lines() == ["[A1,A3] = 1/2*A3"]
    sc = c.structure_constants()
    assert sc.dimension == 2


def test_overconstrained_closure_is_inconsistent(burgers_solution):
    f = holonomy_filtration(burgers_solution, 0)
    q01, q21 = parameter("q01"), parameter("q21")
    exp = {gen("A0"): parse_lie("q01*A1", [q01]), gen("A2"): parse_lie("q21*A1", [q21])}
    c = holonomy_close(burgers_solution, f, exp)
    assert not c.consistent
    assert c.to_json()["certificate"] == "1 = 0"


def test_abelian_solution_has_empty_filtration():
    _, _, sol = pipeline("u0*u1 + u2", 0, 0)
    f = holonomy_filtration(sol, 1)
    assert f.basis == [] and not f.notes
