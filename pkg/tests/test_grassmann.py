import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lieprolong.grassmann import DiffForm, FormIdeal, d, exterior_derivative, ideal_reduce, is_closed, wedge
from lieprolong.symscalar import Context, ScalarPoly
from lieprolong.syntax import parse_form

from .conftest import COORDS, T, U0, U1, X, forms

CTX = Context(COORDS)
BURGERS = [parse_form(s, CTX) for s in ("du0^dt - u1*dx^dt", "du0^dx + u0*du0^dt + du1^dt")]
BURGERS_IDEAL = FormIdeal(BURGERS, (X, T, U0, U1))


def test_text_grammar_round_trip():
    for text in ["du0^dt - u1*dx^dt", "-dx^du0 - u0*dt^du0 - dt^du1", "x*dx", "0"]:
        f = parse_form(text, CTX)
        assert parse_form(f.to_text(), CTX) == f


def test_wedge_sign_and_nilpotency():
    assert wedge(d(X), d(T)) == -wedge(d(T), d(X))
    assert wedge(d(U0), d(U0)).is_zero()


def test_exterior_derivative_of_contact_form():
    # d(du0^dt - u1 dx^dt) = -du1^dx^dt
    f = exterior_derivative(BURGERS[0])
    assert f == -(d(U1) ^ d(X) ^ d(T))


def test_burgers_ideal_closed_with_certificates():
    rep = is_closed(BURGERS_IDEAL)
    assert rep.closed
    c1, c2 = rep.certificates
    assert c1.recombine() == c1.form and c2.recombine() == c2.form
    # d(alpha1) = -u0 dx ^ alpha1 + dx ^ alpha2 checked by hand
    assert c1.multipliers == [-(d(X) * ScalarPoly.var(U0)), d(X)]
    assert c2.form.is_zero()


def test_non_closed_ideal_has_remainder():
    gen_form = d(X) * ScalarPoly.var(U0)
    rep = is_closed(FormIdeal([gen_form], (X, T, U0)))
    assert not rep.closed
    cert = rep.certificates[0]
    assert cert.form == (d(U0) ^ d(X))
    assert not cert.remainder.is_zero()
    assert cert.recombine() == cert.form


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2).flatmap(forms))
def test_d_squared_is_zero(f):
    assert exterior_derivative(exterior_derivative(f)).is_zero()


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2).flatmap(forms), st.integers(0, 2).flatmap(forms))
def test_graded_anticommutativity(a, b):
    sign = -1 if a.degree * b.degree % 2 else 1
    assert wedge(a, b) == wedge(b, a) * sign


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2).flatmap(forms), st.integers(0, 2).flatmap(forms))
def test_leibniz_rule(a, b):
    sign = -1 if a.degree % 2 else 1
    lhs = exterior_derivative(wedge(a, b))
    rhs = wedge(exterior_derivative(a), b) + wedge(a, exterior_derivative(b)) * sign
    assert lhs == rhs


@settings(max_examples=200, deadline=None)
@given(forms(3, COORDS[:4]))
def test_certificate_recombination(f):
    cert = ideal_reduce(f, BURGERS_IDEAL)
    assert cert.recombine() == f


@settings(max_examples=200, deadline=None)
@given(forms(1, COORDS[:4], max_terms=2), forms(1, COORDS[:4], max_terms=2))
def test_constructed_members_reduce_to_zero(m1, m2):
    f = wedge(m1, BURGERS[0]) + wedge(m2, BURGERS[1])
    # membership is complete once the bound covers the multipliers used
    bound = max(m1.coefficient_degree(), m2.coefficient_degree())
    cert = ideal_reduce(f, BURGERS_IDEAL, max_coeff_degree=bound)
    assert cert.member
    assert cert.recombine() == f


def test_zero_generator_rejected():
    with pytest.raises(ValueError):
        FormIdeal([DiffForm(2)])
