"""symcrit: local principle-of-symmetric-criticality tests.

Given a Lie group action by vector-field generators, the package decides the
local symmetric-criticality conditions (relative Lie algebra cohomology in
the orbit dimension, and the invariant/annihilator fiber intersection) and
demonstrates the verdict by reducing Lagrangians and comparing the reduced
Euler-Lagrange equations against the reduced field equations.
"""

from .expr import (
    AssumptionSet,
    Bindings,
    EMPTY_ASSUMPTIONS,
    EvalError,
    Expr,
    ExprError,
    differentiate,
    eval_exact,
    eval_float,
    fnapp,
    free_symbols,
    function_atoms,
    instantiate_functions,
    integer,
    rational,
    substitute,
    sym,
    syms,
)
from .parse import ParseError, parse, to_source
from .simplify import equals, is_zero, normalize, probably_equal, random_bindings
from .linalg import (
    adjugate_inverse,
    determinant,
    eliminate,
    in_span,
    independent_rows,
    intersect_spans,
    nullspace,
    rank,
    solve,
)
from .liealg import (
    AlgForm,
    CohomologyResult,
    LieAlgebra,
    Subalgebra,
    ce_d,
    ce_matrix,
    is_unimodular,
    lie_algebra_from_fields,
    relative_cochain_basis,
    relative_cohomology,
    trivial_subalgebra,
)
from .tensor import (
    Chart,
    CurvatureBundle,
    TensorField,
    coordinate_form,
    coordinate_vector,
    curvature_suite,
    exterior_derivative,
    interior_product,
    lie_bracket,
    lie_derivative,
    metric_field,
    one_form,
    sym_product,
    vector_field,
    wedge,
    wedge_all,
)
from .action import (
    ActionSpec,
    FiberBasis,
    IsotropyData,
    PointSpec,
    condition2_check,
    invariant_metric_fiber,
    isotropy_subalgebra,
    orbit_dimension,
    verify_invariant_ansatz,
)
from .reduce import (
    BoundaryForm,
    ChiSpec,
    Discrepancy,
    ReducedEquations,
    ReducedLagrangian,
    boundary_form,
    boundary_form_jets,
    einstein_hilbert_form,
    euler_operator,
    psc_compare,
    reduce_lagrangian,
    reduced_field_equations,
    verify_chi,
)
from .problem import ProblemError, ProblemSpec, apply_substitutions, build_problem, load_problem
from .pipeline import Report, render_text, run_problem

__version__ = "0.1.0"
