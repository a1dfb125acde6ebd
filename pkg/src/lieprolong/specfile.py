"""Problem-spec files: a small sectioned plain-text format.

::

    # comment
    [coordinates]
    base = x, t
    variable = u
    parameters = lambda

    [pde]
    rhs = u0*u1 + u2

    [ansatz]
    bx_degree = 1
    bt_degree = 2

    [holonomy]
    level = 0
    unknowns = q01, q03, q21, q23
    free_parameter = lambda
    A0 = q01*A1 + q03*A3
    A2 = q21*A1 + q23*A3

    [representation]
    dim = 2
    template = upper
    A1 = [[1/4, 0], [0, -1/4]]

Instead of ``[pde]`` a ``[forms]`` section may list the generators of the
ideal directly (``jets = u0, u1`` followed by ``name = form`` lines).
Upper-case keys in ``[holonomy]`` and ``[representation]`` name generators.
Values use the expression grammar of :mod:`lieprolong.syntax`.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .grassmann import DiffForm
from .liealg import Generator, LieElement, gen
from .matrix import Matrix
from .prolongation import EvolutionPDE
from .repsearch import TEMPLATES
from .symscalar import Context, Coordinate, ScalarPoly, base, jet, parameter
from .syntax import Namespace, ParseError, parse_form, parse_lie, parse_matrix, parse_poly

SECTIONS = {
    "coordinates": {"base", "variable", "parameters"},
    "pde": {"rhs"},
    "forms": {"jets"},
    "ansatz": {"bx_degree", "bt_degree"},
    "holonomy": {"level", "unknowns", "free_parameter"},
    "representation": {"dim", "template"},
}
OPEN_SECTIONS = {"forms", "holonomy", "representation"}  # extra keys allowed there

_SECTION = re.compile(r"^\[([A-Za-z_]+)\]\s*$")
_KEY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$")


@dataclass
class ProblemSpec:
    base: tuple[str, str] = ("x", "t")
    variable: str = "u"
    parameters: tuple[str, ...] = ()
    rhs: ScalarPoly | None = None
    form_jets: tuple[str, ...] = ()
    forms: tuple[tuple[str, DiffForm], ...] = ()
    bx_degree: int = 1
    bt_degree: int = 2
    holonomy_level: int = 0
    unknowns: tuple[str, ...] = ()
    free_parameter: str = "lambda"
    expansions: tuple[tuple[str, LieElement], ...] = ()
    rep_dim: int | None = None
    rep_template: str = "upper"
    rep_matrices: tuple[tuple[str, Matrix], ...] = ()

    # -- derived objects -----------------------------------------------------
    @property
    def pde(self) -> EvolutionPDE | None:
        return EvolutionPDE.from_rhs(self.variable, self.rhs) if self.rhs is not None else None

    def jets(self) -> list[Coordinate]:
        if self.rhs is not None:
            return self.pde.jets()
        return [_jet_of(n, self.variable) for n in self.form_jets]

    def parameter_coords(self) -> list[Coordinate]:
        return [parameter(p) for p in self.parameters]

    def expansion_map(self) -> dict[Generator, LieElement]:
        return {gen(n): e for n, e in self.expansions}

    def rep_map(self) -> dict[Generator, Matrix]:
        return {gen(n): m for n, m in self.rep_matrices}

    @property
    def has_representation(self) -> bool:
        return bool(self.rep_matrices)


def _jet_of(name: str, variable: str) -> Coordinate:
    m = re.fullmatch(re.escape(variable) + r"(\d+)", name)
    if not m:
        raise ValueError(f"{name!r} is not a jet coordinate of {variable!r}")
    return jet(variable, int(m.group(1)))


@dataclass
class _Line:
    number: int
    key: str
    value: str
    value_col: int
    key_col: int = 1


def _names(line: _Line) -> tuple[str, ...]:
    parts = [p.strip() for p in line.value.split(",")] if line.value.strip() else []
    for p in parts:
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", p):
            raise ParseError(f"invalid name {p!r}", line.value_col, line.number)
    return tuple(parts)


def _int(line: _Line, low: int = 0) -> int:
    try:
        v = int(line.value)
    except ValueError:
        raise ParseError(f"expected an integer, found {line.value!r}", line.value_col, line.number) from None
    if v < low:
        raise ParseError(f"{line.key} must be at least {low}", line.value_col, line.number)
    return v


def _wrap(fn, line: _Line):
    try:
        return fn()
    except ParseError as e:
        raise e.at_line(line.number, line.value_col - 1) from None
    except ValueError as e:
        raise ParseError(str(e), line.value_col, line.number) from None


def _split_sections(text: str) -> dict[str, list[_Line]]:
    sections: dict[str, list[_Line]] = {}
    header_lines: dict[str, int] = {}
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].rstrip()
        if not stripped.strip():
            continue
        indent = len(stripped) - len(stripped.lstrip())
        body = stripped.strip()
        m = _SECTION.match(body)
        if m:
            name = m.group(1)
            if name not in SECTIONS:
                raise ParseError(f"unknown section [{name}]", indent + 2, n)
            if name in sections:
                raise ParseError(f"section [{name}] appears twice (first on line {header_lines[name]})", indent + 1, n)
            sections[name] = []
            header_lines[name] = n
            current = name
            continue
        m = _KEY.match(body)
        if not m:
            raise ParseError("expected 'key = value' or '[section]'", indent + 1, n)
        if current is None:
            raise ParseError("key outside of any section", indent + 1, n)
        key = m.group(1)
        value_col = indent + body.index("=") + 2
        value_col += len(body[body.index("=") + 1:]) - len(body[body.index("=") + 1:].lstrip())
        if key not in SECTIONS[current] and not _extra_ok(current, key):
            raise ParseError(f"unknown key {key!r} in [{current}]", indent + 1, n)
        if any(line.key == key for line in sections[current]):
            raise ParseError(f"duplicate key {key!r} in [{current}]", indent + 1, n)
        sections[current].append(_Line(n, key, m.group(2), value_col, indent + 1))
    return sections


def _extra_ok(section: str, key: str) -> bool:
    if section == "forms":
        return True
    if section in ("holonomy", "representation"):
        return key[:1].isupper()
    return False


def parse_spec(text: str) -> ProblemSpec:
    sections = _split_sections(text)
    if "pde" not in sections and "forms" not in sections:
        raise ParseError("no PDE or generators declared")
    if "pde" in sections and "forms" in sections:
        line = sections["forms"][0].number if sections["forms"] else None
        raise ParseError("declare either [pde] or [forms], not both", 1, line)
    spec = ProblemSpec()
    for line in sections.get("coordinates", []):
        if line.key == "base":
            names = _names(line)
            if names != ("x", "t"):
                raise ParseError("base coordinates must be 'x, t'", line.value_col, line.number)
            spec.base = names
        elif line.key == "variable":
            names = _names(line)
            if len(names) != 1:
                raise ParseError("exactly one dependent variable is supported", line.value_col, line.number)
            spec.variable = names[0]
        elif line.key == "parameters":
            spec.parameters = _names(line)

    params = [parameter(p) for p in spec.parameters]
    base_coords = [base("x", 0), base("t", 1)]

    if "pde" in sections:
        lines = {line.key: line for line in sections["pde"]}
        if "rhs" not in lines:
            raise ParseError("[pde] needs an 'rhs' key")
        line = lines["rhs"]
        ctx = _jet_context(spec.variable, line.value, base_coords + params)
        rhs = _wrap(lambda: parse_poly(line.value, Namespace(ctx, allow_generators=False)), line)
        spec.rhs = rhs
        _wrap(lambda: spec.pde, line)
        if rhs.variables() & set(base_coords + params):
            raise ParseError("the right-hand side may only depend on jet coordinates", line.value_col, line.number)
    else:
        lines = sections["forms"]
        jets_line = next((x for x in lines if x.key == "jets"), None)
        if jets_line is None:
            raise ParseError("[forms] needs a 'jets' key")
        names = _names(jets_line)
        jets = [_wrap(lambda n=n: _jet_of(n, spec.variable), jets_line) for n in names]
        if [j.order for j in jets] != list(range(len(jets))):
            raise ParseError(f"jets must be {spec.variable}0, {spec.variable}1, ... in order",
                             jets_line.value_col, jets_line.number)
        spec.form_jets = names
        ns = Namespace(Context(base_coords + jets + params), allow_generators=False)
        forms = []
        for line in lines:
            if line.key == "jets":
                continue
            f = _wrap(lambda line=line: parse_form(line.value, ns), line)
            if not f:
                raise ParseError("ideal generators must be nonzero", line.value_col, line.number)
            forms.append((line.key, f))
        if not forms:
            raise ParseError("no PDE or generators declared")
        spec.forms = tuple(forms)

    for line in sections.get("ansatz", []):
        setattr(spec, line.key, _int(line))

    lie_ctx = Context(base_coords + params)
    hol = sections.get("holonomy", [])
    for line in hol:
        if line.key == "level":
            spec.holonomy_level = _int(line)
        elif line.key == "unknowns":
            spec.unknowns = _names(line)
        elif line.key == "free_parameter":
            names = _names(line)
            if len(names) != 1:
                raise ParseError("free_parameter takes one name", line.value_col, line.number)
            spec.free_parameter = names[0]
    q_ctx = Context(list(lie_ctx) + [parameter(q) for q in spec.unknowns])
    exps = []
    for line in hol:
        if line.key[:1].isupper():
            e = _wrap(lambda line=line: parse_lie(line.value, Namespace(q_ctx)), line)
            exps.append((line.key, e))
    spec.expansions = tuple(exps)

    rep = sections.get("representation", [])
    mats = []
    for line in rep:
        if line.key == "dim":
            spec.rep_dim = _int(line, 1)
        elif line.key == "template":
            if line.value not in TEMPLATES:
                raise ParseError(f"unknown template {line.value!r}", line.value_col, line.number)
            spec.rep_template = line.value
        else:
            mats.append((line.key, _wrap(lambda line=line: parse_matrix(line.value, Namespace(lie_ctx, allow_generators=False)), line)))
    spec.rep_matrices = tuple(mats)
    if mats:
        shapes = {m.shape for _, m in mats}
        n = spec.rep_dim or next(iter(shapes))[0]
        bad = [(k, m) for k, m in mats if m.shape != (n, n)]
        if bad:
            line = next(x for x in rep if x.key == bad[0][0])
            raise ParseError(f"matrix {bad[0][0]} is not {n}x{n}", line.value_col, line.number)
        spec.rep_dim = n
    return spec


def _jet_context(variable: str, text: str, others) -> Context:
    """Declare u0..uN for every jet name that occurs in ``text``."""
    orders = [int(m.group(1)) for m in re.finditer(r"\b" + re.escape(variable) + r"(\d+)\b", text)]
    top = max(orders, default=0)
    return Context(list(others) + [jet(variable, i) for i in range(top + 1)])


def render(spec: ProblemSpec) -> str:
    out = ["[coordinates]", f"base = {', '.join(spec.base)}", f"variable = {spec.variable}"]
    if spec.parameters:
        out.append(f"parameters = {', '.join(spec.parameters)}")
    out.append("")
    if spec.rhs is not None:
        out += ["[pde]", f"rhs = {spec.rhs.to_text()}", ""]
    else:
        out += ["[forms]", f"jets = {', '.join(spec.form_jets)}"]
        out += [f"{k} = {f.to_text()}" for k, f in spec.forms]
        out.append("")
    out += ["[ansatz]", f"bx_degree = {spec.bx_degree}", f"bt_degree = {spec.bt_degree}", ""]
    out += ["[holonomy]", f"level = {spec.holonomy_level}"]
    if spec.unknowns:
        out.append(f"unknowns = {', '.join(spec.unknowns)}")
    out.append(f"free_parameter = {spec.free_parameter}")
    out += [f"{k} = {e.to_text()}" for k, e in spec.expansions]
    if spec.rep_dim is not None or spec.rep_matrices:
        out += ["", "[representation]"]
        if spec.rep_dim is not None:
            out.append(f"dim = {spec.rep_dim}")
        out.append(f"template = {spec.rep_template}")
        out += [f"{k} = {m.to_text()}" for k, m in spec.rep_matrices]
    return "\n".join(out) + "\n"


def bundled_specs() -> list[str]:
    return sorted(p.name[:-5] for p in resources.files("lieprolong.specs").iterdir() if p.name.endswith(".spec"))


def load_bundled(name: str) -> str:
    return resources.files("lieprolong.specs").joinpath(f"{name}.spec").read_text()
