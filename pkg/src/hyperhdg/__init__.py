"""Hybridized DG solver for steady diffusion on geometric hypergraphs."""

from .analysis import (
    ExactSolution,
    StudyReport,
    catalog,
    convergence_study,
    eoc,
    filling_plan,
    l2_error,
    l2_flux_error,
    refinement_plan,
)
from .basis import QuadratureRule, ReferenceBasis, gauss_rule, reference_basis
from .hypergraph import (
    HyperEdge,
    HyperGraph,
    HyperNode,
    IncidenceRecord,
    NodeKind,
    build_hypergraph,
    graph_from_dict,
    graph_to_dict,
    jump_residual,
    load_graph,
    save_graph,
)
from .local import (
    CondensedOperator,
    LocalMatrices,
    assemble_local,
    condense,
    flux_functionals,
    project_edge_field,
    reconstruct,
)
from .meshes import FillingSpec, cube_filling, path_graph, star_graph
from .skeletal import (
    DofMap,
    SkeletalSystem,
    assemble_global,
    dump_matrix_market,
    enumerate_dofs,
    project_node_field,
    solve_skeletal,
)
from .solver import DiffusionResult, ProblemData, solve_diffusion
from .thin import ThinDomainSpec, ThinSolution, build_thin_mesh, epsilon_sweep, solve_thin

__version__ = "0.1.0"
