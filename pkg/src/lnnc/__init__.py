"""Mini-batch Lanczos subspace descent with negative-curvature steps.

The optimizer combines a Galerkin Newton step and a Ritz direction of
negative curvature, both taken from a short Lanczos factorisation of a
component Hessian, with an Armijo line search on the same component.
"""
__version__ = "0.1.0"

from .problems import (  # noqa: E402
    ComponentObjective,
    ProblemSpec,
    UnsupportedHVP,
    full_gradient,
    full_value,
    make_indefinite_quadratic,
    make_layered_gaussian_mixture,
    make_mlp_least_squares,
    make_problem,
    make_quartic_sum,
    make_rosenbrock_sum,
)
from .hvp import HvpOperator, exact_hvp, fd_hvp, make_hvp  # noqa: E402
from .lanczos import (  # noqa: E402
    LanczosFactorization,
    lanczos,
    tridiag_min_eigenpair,
    tridiag_solve,
)
from .directions import (  # noqa: E402
    DirectionBundle,
    assemble_step,
    compute_directions,
    filtered_direction,
    negative_curvature_direction,
    newton_direction,
)
from .optimizers import (  # noqa: E402
    IndexSchedule,
    RunConfig,
    RunResult,
    TraceRecord,
    armijo_linesearch,
    run,
    run_lnnc,
    run_sgd,
)
