"""Generalized sphere packings on ideally triangulated 3-manifolds with boundary."""

import os

# cap BLAS threads before numpy loads
_threads = os.environ.get("HYPERFLOW_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

from .curvature import (  # noqa: E402
    CurvatureState,
    curvature_energy,
    curvature_jacobian,
    curvature_state,
    edge_ricci,
    scalar_curvature,
    scalar_curvature_gb,
)
from .fixtures import load_fixture  # noqa: E402
from .flows import (  # noqa: E402
    FlowOptions,
    FlowTrace,
    bounds,
    calabi_flow,
    newton_solve,
    ricci_flow,
    solve,
)
from .tetkernel import (  # noqa: E402
    tet_area_jacobian,
    tet_dihedral_angles,
    tet_dihedral_partials,
    tet_geometry,
    tet_q2,
    tet_vertex_areas,
)
from .triangulation import (  # noqa: E402
    Triangulation,
    TriangulationError,
    load_triangulation,
    parse_triangulation,
    vertex_link,
)

__version__ = "0.1.0"
