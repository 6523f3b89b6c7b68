"""resonbie: complex resonances of 2D Helmholtz transmission problems.

Boundary integral equations (Mueller / PMCHWT) on flat-panel meshes,
free space or Neumann waveguide, with a rectangle-contour moment-based
eigensolver, semi-analytic circle oracles, and a forward solver with
waveguide transmittance.
"""

from .errors import (
    BranchCutError,
    ConfigError,
    ContourHitsEigenvalueError,
    ConvergenceError,
    DomainError,
    EnergyViolationError,
    IncompleteRootsError,
    ResonbieError,
    SingularMatrixError,
    SingularityError,
)
from .geometry import (
    BoundaryMesh,
    Circle,
    Polyline,
    build_scene_mesh,
    dump_mesh_csv,
    mesh_circle,
    mesh_polyline,
)
from .kernels import (
    DomainKind,
    KernelMode,
    greens_free,
    greens_free_dnx,
    greens_free_dny,
    greens_free_hyper,
    greens_waveguide,
    greens_waveguide_dnx,
    greens_waveguide_dny,
    greens_waveguide_hyper,
)
from .special import bessel_j, bessel_y, hankel1, hankel2, mode_gamma

__version__ = "0.1.0"
