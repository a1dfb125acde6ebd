"""Exact prolongation structures, holonomy algebras and Lax pairs for evolution equations."""
from .grassmann import DiffForm, FormIdeal, MembershipCertificate, d, exterior_derivative, ideal_reduce, is_closed, wedge
from .liealg import (
    Generator,
    LieElement,
    RelationSet,
    StructureConstants,
    bracket,
    gen,
    normalize_modulo,
    subalgebra_span,
    validate_structure_constants,
)
from .matrix import Matrix, commutator
from .maurer_cartan import build_a_matrix, mc_form, verify_mc_equation, w_series
from .polysolve import solve_polynomial
from .prolongation import (
    ConnectionAnsatz,
    EvolutionPDE,
    contact_ideal_from_pde,
    derive_determining,
    holonomy_close,
    holonomy_filtration,
    ideal_from_forms,
    solve_determining,
)
from .repsearch import MatrixRep, assemble_lax, search_rep, verify_rep, verify_zero_curvature
from .specfile import ProblemSpec, load_bundled, parse_spec, render
from .symscalar import Context, Coordinate, ScalarPoly, base, jet, parameter, solve_linear
from .syntax import ParseError, parse_form, parse_lie, parse_matrix, parse_poly

__version__ = "0.1.0"

__all__ = [
    "ConnectionAnsatz", "Context", "Coordinate", "DiffForm", "EvolutionPDE", "FormIdeal", "Generator",
    "LieElement", "Matrix", "MatrixRep", "MembershipCertificate", "ParseError", "ProblemSpec", "RelationSet",
    "ScalarPoly", "StructureConstants", "assemble_lax", "base", "bracket", "build_a_matrix", "commutator",
    "contact_ideal_from_pde", "d", "derive_determining", "exterior_derivative", "gen", "holonomy_close",
    "holonomy_filtration", "ideal_from_forms", "ideal_reduce", "is_closed", "jet", "load_bundled", "mc_form",
    "normalize_modulo", "parameter", "parse_form", "parse_lie", "parse_matrix", "parse_poly", "parse_spec",
    "render", "search_rep", "solve_determining", "solve_linear", "solve_polynomial", "subalgebra_span",
    "validate_structure_constants", "verify_mc_equation", "verify_rep", "verify_zero_curvature", "w_series",
    "wedge",
]
