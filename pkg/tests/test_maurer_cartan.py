from fractions import Fraction

import pytest

from lieprolong.liealg import StructureConstants
from lieprolong.matrix import Matrix
from lieprolong.maurer_cartan import (
    InvalidStructureConstants,
    build_a_matrix,
    mc_form,
    verify_mc_equation,
    w_series,
)

AFFINE2 = StructureConstants.from_brackets(2, {(0, 1): {1: Fraction(1, 2)}})


def test_heisenberg_series_terminates():
    sc = StructureConstants.heisenberg()
    a = build_a_matrix(sc)
    w = w_series(a)
    assert w.exact and w.nilpotency == 2
    assert w.matrix == Matrix.identity(3) + a.matrix / 2


def test_heisenberg_mc_equation_exact():
    sc = StructureConstants.heisenberg()
    rep = verify_mc_equation(mc_form(sc), sc)
    assert rep.passed and rep.exact
    assert all(f.is_zero() for f in rep.residuals)


def test_heisenberg_components_by_hand():
    # d(omega3) = -da1^da2 cancels 1/2*(c3_12 + c3_21 terms) = da1^da2
    comps = mc_form(StructureConstants.heisenberg()).components
    assert [c.to_text() for c in comps] == ["da1", "da2", "1/2*a2*da1 - 1/2*a1*da2 + da3"]


def test_abelian_is_trivial():
    sc = StructureConstants.abelian(3)
    form = mc_form(sc)
    assert form.exact and form.w.nilpotency == 1
    assert verify_mc_equation(form, sc).passed


@pytest.mark.parametrize("order", [3, 4, 5, 6])
def test_truncation_consistency_sweep(order):
    rep = verify_mc_equation(mc_form(AFFINE2, order), AFFINE2)
    assert not rep.exact
    assert any(not f.is_zero() for f in rep.residuals)
    assert rep.min_degree >= order - 1
    assert rep.passed


def test_residual_degree_grows_with_order():
    degs = [verify_mc_equation(mc_form(AFFINE2, n), AFFINE2).min_degree for n in range(3, 7)]
    assert degs == sorted(degs) and degs[-1] > degs[0]


def test_invalid_constants_rejected():
    bad = StructureConstants(2, {(0, 0, 1): Fraction(1)})
    with pytest.raises(InvalidStructureConstants):
        mc_form(bad)


def test_order_must_be_positive():
    with pytest.raises(ValueError):
        w_series(build_a_matrix(AFFINE2), 0)
