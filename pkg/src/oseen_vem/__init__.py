"""Lowest-order divergence-conforming virtual elements for Oseen eigenproblems."""

from .assembly import GlobalSystem, ProblemConfig, assemble, infsup_diagnostic
from .eigensolver import EigenRequest, EigenSolution, Mode, Solver, cross_validate, solve_gevp
from .errors import *  # noqa: F401,F403
from .mesh import (
    DOMAINS,
    Domain,
    EdgeTag,
    FamilyTag,
    MeshFamily,
    PolygonalMesh,
    check_assumptions,
    generate_mesh,
    read_mesh,
    side_rule,
    tag_boundary,
    write_mesh,
)
from .study import (
    RateFit,
    SpuriousCriteria,
    export_eigenfunction,
    fit_rate,
    run_convergence,
    run_spurious_sweep,
)
from .vem_local import PhysicalParams, local_forms

__version__ = "0.1.0"
