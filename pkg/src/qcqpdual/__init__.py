"""Canonical duality for quadratically constrained quadratic programs.

Build the canonical dual of a QCQP, solve it, recover the candidate primal
point, and audit the claimed zero-gap and uniqueness theorems against an
independent brute-force oracle.
"""
from .audit import AuditReport, check_c1, check_c2, full_audit, report_to_json
from .dual import (
    NEG_INFINITY,
    classify,
    dual_gradient,
    dual_value,
    f_vector,
    g_matrix,
    lagrangian_value,
    recover_x,
)
from .errors import (
    DimensionTooLarge,
    EmptySPlus,
    EmptyY,
    InfeasibleEverywhere,
    InputError,
    MNotOne,
    NoCompactConstraint,
    SingularG,
)
from .instance import (
    Constraint,
    ProblemInstance,
    constraint_values,
    is_feasible,
    load_instance,
    make_instance,
    objective_value,
    slater_check,
    validate,
)
from .oracle import count_distinct_minimizers, global_min_brute, search_box
from .regions import IntervalUnion, psi_roots, s_regions, singularities, variation_table, y_regions
from .solver import maximize_over_S_plus, maximize_over_Y, maximize_over_Y_1d, maximize_over_Y_multistart

__version__ = "0.1.0"
