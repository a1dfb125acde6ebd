"""Small exact solver for polynomial systems in a handful of unknowns.

Strategy, repeated until nothing changes:

1. equations linear in the unknowns with constant coefficients are solved
   together by :func:`solve_linear`;
2. an unknown occurring linearly with a constant coefficient in some
   equation is eliminated by substitution;
3. an equation whose unknown-monomial content is nontrivial, or which is
   univariate with rational roots, splits the computation into branches.

Whatever is left is reported as unsolved.  Branches are returned in a
deterministic order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from math import gcd
from typing import Iterable, Sequence

from .symscalar import Coordinate, LinearSystem, ScalarPoly, solve_linear


class SolverBudgetExceeded(RuntimeError):
    pass


@dataclass
class Branch:
    values: dict[Coordinate, ScalarPoly] = field(default_factory=dict)
    free: list[Coordinate] = field(default_factory=list)
    unsolved: list[ScalarPoly] = field(default_factory=list)
    certificate: ScalarPoly | None = None
    assumptions: list[tuple[Coordinate, Fraction]] = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return self.certificate is None

    @property
    def complete(self) -> bool:
        return self.consistent and not self.unsolved

    def sort_key(self):
        return (
            not self.consistent,
            bool(self.unsolved),
            len(self.assumptions),
            [(c.name, v) for c, v in self.assumptions],
        )

    def to_json(self) -> dict:
        out = {
            "consistent": self.consistent,
            "values": {c.name: v.to_text() for c, v in sorted(self.values.items())},
            "free": [c.name for c in self.free],
            "unsolved": [e.to_text() for e in self.unsolved],
            "assumptions": {c.name: str(v) for c, v in self.assumptions},
        }
        if self.certificate is not None:
            out["certificate"] = f"{self.certificate.to_text()} = 0"
        return out


@dataclass
class PolySolution:
    unknowns: list[Coordinate]
    branches: list[Branch]

    @property
    def consistent(self) -> list[Branch]:
        return [b for b in self.branches if b.consistent]

    @property
    def certificate(self) -> ScalarPoly | None:
        """Contradiction when every branch is inconsistent."""
        if self.branches and not self.consistent:
            return self.branches[0].certificate
        return None


def _normalize(e: ScalarPoly) -> ScalarPoly:
    """Divide by rational content and fix the sign of the leading term."""
    if not e:
        return e
    e = e / e.content()
    _, c = e.leading()
    return -e if c < 0 else e


def _degree_in(e: ScalarPoly, us: set) -> int:
    return max((sum(x for c, x in m if c in us) for m, _ in e.items()), default=0)


def _linear_const(e: ScalarPoly, us: set) -> bool:
    for m, _ in e.items():
        inside = [(c, x) for c, x in m if c in us]
        if sum(x for _, x in inside) > 1:
            return False
        if inside and len(inside) != len(m):
            return False
    return True


def _isolatable(e: ScalarPoly, u: Coordinate) -> Fraction | None:
    """Constant coefficient of ``u`` when ``e = k*u + (terms free of u)``."""
    if e.degree_in(u) != 1:
        return None
    cu = e.coefficient(u, 1)
    if not cu.is_constant():
        return None
    return cu.constant_value()


def _rational_roots(e: ScalarPoly, u: Coordinate) -> list[Fraction]:
    coeffs: dict[int, Fraction] = {}
    for m, c in e.items():
        coeffs[dict(m).get(u, 0)] = c
    low = min(coeffs)
    coeffs = {k - low: v for k, v in coeffs.items()}
    n = max(coeffs)
    den = 1
    for v in coeffs.values():
        den = den * v.denominator // gcd(den, v.denominator)
    ints = {k: int(v * den) for k, v in coeffs.items()}
    a0, an = ints.get(0, 0), ints[n]
    roots = {Fraction(0)} if low > 0 else set()
    if a0 == 0:
        return sorted(roots)

    def divisors(k):
        k = abs(k)
        return [d for d in range(1, k + 1) if k % d == 0]

    for p, q in product(divisors(a0), divisors(an)):
        for s in (1, -1):
            r = Fraction(s * p, q)
            if sum(v * r**k for k, v in ints.items()) == 0:
                roots.add(r)
    return sorted(roots)


class _State:
    def __init__(self, unknowns, equations, values, assumptions):
        self.unknowns = unknowns
        self.equations = equations
        self.values = values
        self.assumptions = assumptions

    def bind(self, u: Coordinate, value: ScalarPoly):
        b = {u: value}
        self.values = {k: v.subs(b) for k, v in self.values.items()}
        self.values[u] = value
        self.equations = [e.subs(b) for e in self.equations]

    def open_unknowns(self) -> list[Coordinate]:
        return [u for u in self.unknowns if u not in self.values]


def solve_polynomial(unknowns: Sequence[Coordinate], equations: Iterable[ScalarPoly],
                     budget: int = 10_000) -> PolySolution:
    unknowns = list(unknowns)
    out: list[Branch] = []
    steps = [0]
    stack = [_State(unknowns, [ScalarPoly.lift(e) for e in equations], {}, [])]
    while stack:
        st = stack.pop()
        res = _run(st, stack, steps, budget)
        if res is not None:
            out.append(res)
    out.sort(key=Branch.sort_key)
    return PolySolution(unknowns, out)


def _run(st: _State, stack: list, steps: list, budget: int) -> Branch | None:
    while True:
        steps[0] += 1
        if steps[0] > budget:
            raise SolverBudgetExceeded(f"polynomial solver exceeded {budget} steps")
        eqs = []
        seen = set()
        for e in st.equations:
            e = _normalize(e)
            if not e or e in seen:
                continue
            seen.add(e)
            eqs.append(e)
        st.equations = sorted(eqs, key=lambda e: (e.degree(), len(e), e.to_text()))
        open_u = st.open_unknowns()
        us = set(open_u)
        for e in st.equations:
            if not (e.variables() & us):
                return Branch(dict(st.values), [], [], e, list(st.assumptions))
        if not st.equations:
            return Branch(dict(st.values), open_u, [], None, list(st.assumptions))

        linear = [e for e in st.equations if _linear_const(e, us) and _degree_in(e, us) == 1]
        if linear:
            sol = solve_linear(LinearSystem(open_u, linear))
            if not sol.consistent:
                return Branch(dict(st.values), [], [], sol.certificate, list(st.assumptions))
            # bind in unknown order so later values may reference earlier ones
            for u in open_u:
                if u in sol.values:
                    st.bind(u, sol.values[u])
            continue

        pick = None
        for e in st.equations:
            for u in reversed(open_u):
                k = _isolatable(e, u)
                if k:
                    pick = (u, (ScalarPoly.var(u) * k - e) / k)
                    break
            if pick:
                break
        if pick:
            st.bind(*pick)
            continue

        split = _split(st, us)
        if split:
            stack.extend(reversed(split))
            return None
        return Branch(dict(st.values), open_u, list(st.equations), None, list(st.assumptions))


def _split(st: _State, us: set) -> list[_State] | None:
    for e in st.equations:
        mono = [(c, x) for c, x in e.monomial_content() if c in us]
        if mono:
            cof = e
            for c, x in mono:
                cof = cof / ScalarPoly.var(c, x)
            kids = []
            for c, _ in mono:
                s = _State(st.unknowns, list(st.equations), dict(st.values), st.assumptions + [(c, Fraction(0))])
                s.bind(c, ScalarPoly())
                kids.append(s)
            s = _State(st.unknowns, [cof] + [x for x in st.equations if x != e], dict(st.values), list(st.assumptions))
            kids.append(s)
            return kids
    for e in st.equations:
        vs = e.variables() & us
        if len(vs) == 1 and e.variables() == vs:
            (u,) = vs
            roots = _rational_roots(e, u)
            if roots:
                kids = []
                for r in roots:
                    s = _State(st.unknowns, list(st.equations), dict(st.values), st.assumptions + [(u, r)])
                    s.bind(u, ScalarPoly.const(r))
                    kids.append(s)
                cof = e
                for r in roots:
                    lin = ScalarPoly.var(u) - r
                    while True:
                        q, rem = cof.divmod(lin)
                        if rem:
                            break
                        cof = q
                if cof.degree_in(u) > 0:
                    rest = [x for x in st.equations if x != e]
                    kids.append(_State(st.unknowns, [cof] + rest, dict(st.values), list(st.assumptions)))
                return kids
    return None
