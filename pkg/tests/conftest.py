from __future__ import annotations

import sys
import time
from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import strategies as st

from lieprolong.grassmann import DiffForm, d
from lieprolong.liealg import LieElement, bracket, gen
from lieprolong.prolongation import (
    ConnectionAnsatz,
    EvolutionPDE,
    contact_ideal_from_pde,
    derive_determining,
    holonomy_close,
    holonomy_filtration,
    solve_determining,
)
from lieprolong.specfile import load_bundled, parse_spec
from lieprolong.symscalar import ScalarPoly, base, jet

X, T = base("x", 0), base("t", 1)
U0, U1, U2 = jet("u", 0), jet("u", 1), jet("u", 2)
COORDS = [X, T, U0, U1, U2]

# -- strategies ---------------------------------------------------------------

small_fraction = st.builds(Fraction, st.integers(-5, 5), st.integers(1, 3))
wide_fraction = st.fractions(min_value=-100, max_value=100, max_denominator=50)


@st.composite
def polys(draw, coords=COORDS, max_terms=4, max_exp=2):
    p = ScalarPoly()
    for _ in range(draw(st.integers(0, max_terms))):
        mono = ScalarPoly.const(draw(small_fraction))
        for c in coords:
            e = draw(st.integers(0, max_exp))
            if e:
                mono = mono * ScalarPoly.var(c, e)
        p = p + mono
    return p


@st.composite
def forms(draw, degree, coords=COORDS, max_terms=3):
    f = DiffForm(degree)
    basis = list(combinations(coords, degree))
    for _ in range(draw(st.integers(0, max_terms))):
        factors = draw(st.sampled_from(basis))
        w = DiffForm.scalar(1)
        for c in factors:
            w = w ^ d(c)
        f = f + w * draw(polys(max_terms=2, max_exp=1))
    return f


GENS = [gen("A0"), gen("A1"), gen("A2")]


@st.composite
def lie_trees(draw, max_degree=4):
    """Random bracket tree over A0..A2 with degree <= max_degree."""
    n = draw(st.integers(1, max_degree))

    def build(k):
        if k == 1:
            return LieElement.generator(draw(st.sampled_from(GENS)))
        left = draw(st.integers(1, k - 1))
        return bracket(build(left), build(k - left))

    return build(n)


@st.composite
def lie_elements(draw, max_degree=4, max_terms=3):
    x = LieElement()
    for _ in range(draw(st.integers(0, max_terms))):
        x = x + draw(lie_trees(max_degree)) * draw(small_fraction)
    return x


# -- shared Burgers objects ---------------------------------------------------


@pytest.fixture(scope="session")
def burgers_spec():
    return parse_spec(load_bundled("burgers"))


@pytest.fixture(scope="session")
def burgers_pde():
    return EvolutionPDE.from_rhs("u", ScalarPoly.var(U0) * ScalarPoly.var(U1) + ScalarPoly.var(U2))


@pytest.fixture(scope="session")
def burgers_ideal(burgers_pde):
    return contact_ideal_from_pde(burgers_pde)


@pytest.fixture(scope="session")
def burgers_system(burgers_ideal):
    return derive_determining(burgers_ideal, ConnectionAnsatz.formal_ansatz(burgers_ideal.jets, 1, 2))


@pytest.fixture(scope="session")
def burgers_solution(burgers_system):
    return solve_determining(burgers_system)


@pytest.fixture(scope="session")
def burgers_closure(burgers_spec, burgers_solution):
    filt = holonomy_filtration(burgers_solution, 0)
    return holonomy_close(burgers_solution, filt, burgers_spec.expansion_map())


# -- acceptance summary ---------------------------------------------------------

_SESSION_START = time.perf_counter()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("tests.test_acceptance")
    lines = list(getattr(mod, "RESULTS", []))
    if not lines:
        return
    elapsed = time.perf_counter() - _SESSION_START
    verdict = "PASS" if elapsed < 120 else "FAIL"
    lines.append(f"AC9 full suite runtime {elapsed:.1f} s (< 120 s): {verdict}")
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
