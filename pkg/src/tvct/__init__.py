"""Total-variation CT reconstruction with inequality constraints on sinogram entries.

The top-level namespace re-exports the most used names; the submodules hold
the rest (``tvct.solvers``, ``tvct.precond``, ``tvct.prox``, ...).
"""

__version__ = "0.1.0"

from ._accel import BACKEND, HAVE_NUMBA  # noqa: E402
from .fbp import FilterKind, fbp_reconstruct  # noqa: E402
from .grid import ConstraintMask, Image, ImageGeom, SinoGeom, Sinogram  # noqa: E402
from .radon import RadonOp, norm_bound, power_iteration  # noqa: E402
from .solvers import ProblemSpec, SolverParams, run_solver  # noqa: E402

__all__ = [
    "__version__",
    "BACKEND",
    "HAVE_NUMBA",
    "ImageGeom",
    "SinoGeom",
    "Image",
    "Sinogram",
    "ConstraintMask",
    "RadonOp",
    "norm_bound",
    "power_iteration",
    "FilterKind",
    "fbp_reconstruct",
    "ProblemSpec",
    "SolverParams",
    "run_solver",
]
