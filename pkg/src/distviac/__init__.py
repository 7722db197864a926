"""Distance fields on triangular meshes via a screened-Poisson transform."""

from .assembly import (
    ElementMatrix,
    FemSystem,
    assemble_boundary_mass,
    assemble_global,
    element_gradients,
    element_mass,
    element_stiffness,
    element_stiffness_cot,
    global_matrices,
)
from .errors import (
    DegenerateElementError,
    DimensionMismatchError,
    DistviacError,
    EmptyDirichletSetError,
    MeshMismatchError,
    NonFiniteError,
    NonPositivePhiError,
    OutsideDomainError,
    ParseError,
    TagError,
    TopologyError,
    UnreachableVertexError,
)
from .mesh import (
    BoundaryTag,
    MeshQualityReport,
    TriMesh,
    VertexClass,
    load_mesh,
    validate_mesh,
    vertex_classification,
    write_native,
)
from .oracles import (
    ErrorReport,
    ExactCase,
    annulus_exact,
    error_norms,
    graph_geodesic_oracle,
    slit_annulus_exact,
    strip_exact,
)
from .solver import (
    ScalarField,
    SolveReport,
    SolverConfig,
    recover_distance,
    solve,
    solve_dirichlet,
    solve_robin,
    solve_soner,
    soner_update,
)
from .sparse import SolveStats, SparseSymMatrix, dense_solve, spd_solve, spmv

__version__ = "0.1.0"
