import pytest

from lieprolong.grassmann import DiffForm
from lieprolong.liealg import LieElement, bracket, gen
from lieprolong.matrix import Matrix
from lieprolong.specfile import bundled_specs, load_bundled, parse_spec, render
from lieprolong.symscalar import Context, ScalarPoly, parameter
from lieprolong.syntax import Namespace, ParseError, parse, parse_form, parse_lie, parse_matrix, parse_poly

from .conftest import COORDS, U0, U1, U2

CTX = Context(COORDS + [parameter("lambda")])


# -- expression grammar ---------------------------------------------------------


def test_power_versus_wedge():
    assert parse_poly("u0^2", CTX) == ScalarPoly.var(U0, 2)
    f = parse("du0^dt", Namespace(CTX))
    assert isinstance(f, DiffForm) and f.degree == 2


def test_lie_bracket_and_coefficients():
    x = parse_lie("u0*[A0,A1] + 1/2*A2", CTX)
    a0, a1, a2 = (LieElement.generator(gen(i)) for i in range(3))
    assert x == bracket(a0, a1) * ScalarPoly.var(U0) + a2 / 2


def test_matrix_literal():
    m = parse_matrix("[[lambda/4, -2], [0, -lambda/4]]", CTX)
    assert isinstance(m, Matrix) and m.shape == (2, 2)
    assert m[0, 1] == ScalarPoly.const(-2)


def test_form_parse():
    f = parse_form("du0^dt - u1*dx^dt", CTX)
    assert f.degree == 2 and len(f.terms) == 2


@pytest.mark.parametrize("text, column", [("u0 + v1", 6), ("u0 +", 5), ("(u0", 4), ("u0 / u1", 6)])
def test_parse_errors_carry_columns(text, column):
    with pytest.raises(ParseError) as err:
        parse_poly(text, CTX)
    assert err.value.column == column


def test_undeclared_coordinate_named():
    with pytest.raises(ParseError, match="undeclared coordinate 'v1'"):
        parse_poly("u0 + v1", CTX)


def test_mixed_degrees_rejected():
    with pytest.raises(ParseError):
        parse_form("dx + dx^dt", CTX)


# -- problem spec files -----------------------------------------------------------


@pytest.mark.parametrize("name", bundled_specs())
def test_bundled_specs_round_trip(name):
    spec = parse_spec(load_bundled(name))
    assert parse_spec(render(spec)) == spec


def test_burgers_spec_contents():
    spec = parse_spec(load_bundled("burgers"))
    assert spec.rhs == ScalarPoly.var(U0) * ScalarPoly.var(U1) + ScalarPoly.var(U2)
    assert spec.pde.to_text() == "u_t = u0*u1 + u2"
    assert (spec.bx_degree, spec.bt_degree, spec.holonomy_level) == (1, 2, 0)
    assert [n for n, _ in spec.expansions] == ["A0", "A2"]
    assert spec.rep_dim == 2 and len(spec.rep_matrices) == 4


def test_empty_spec():
    with pytest.raises(ParseError, match="no PDE or generators declared"):
        parse_spec("")
    with pytest.raises(ParseError, match="no PDE or generators declared"):
        parse_spec("# only a comment\n")


def test_undeclared_coordinate_in_form():
    text = "[forms]\njets = u0\nalpha1 = v0*dx^dt\n"
    with pytest.raises(ParseError, match="undeclared coordinate 'v0'") as err:
        parse_spec(text)
    assert err.value.line == 3


def test_unknown_key_and_section():
    with pytest.raises(ParseError, match="unknown key 'foo' in \\[pde\\]") as err:
        parse_spec("[pde]\nfoo = 1\n")
    assert (err.value.line, err.value.column) == (2, 1)
    with pytest.raises(ParseError, match="unknown section"):
        parse_spec("[nonsense]\n")


def test_duplicate_key():
    with pytest.raises(ParseError, match="duplicate key"):
        parse_spec("[pde]\nrhs = u2\nrhs = u1\n")


def test_jet_order_must_be_consistent():
    with pytest.raises(ParseError, match="in order"):
        parse_spec("[forms]\njets = u1, u0\nalpha1 = du0^dx\n")


def test_rhs_must_be_linear_in_top_jet():
    with pytest.raises(ParseError, match="linear"):
        parse_spec("[pde]\nrhs = u1^2\n")


def test_non_closed_forms_spec_parses():
    spec = parse_spec(load_bundled("nonclosed"))
    assert spec.rhs is None and len(spec.forms) == 1
