"""Interior-point online convex optimization with self-concordant barriers."""
from ._kernels import BACKEND
from .barrier import (
    Barrier,
    BarrierEval,
    Domain,
    check_derivatives,
    check_self_concordance,
    eval_ball_barrier,
    eval_polytope_barrier,
    hessian_solve,
    interval,
)
from .errors import (
    BadInterval,
    ConfigParse,
    LengthMismatch,
    NotInterior,
    NotPositiveDefinite,
    NotPSD,
    NotUnit,
    PreconditionError,
    StepUnsafe,
    Unbounded,
    UnsupportedComposition,
)
from .geometry import (
    bregman_divergence,
    comparator_shift,
    diameter,
    local_norm,
    ray_to_boundary,
    verify_boundary_growth,
    verify_dikin_and_hessian_bounds,
)
from .harness import (
    ExperimentConfig,
    LearnerSpec,
    hindsight_optimum,
    regret_curve,
    run_experiment,
    subinterval_regret,
    theorem_bounds,
    verify_trajectory_inequalities,
)
from .learners import IPLearner, ftl_step, ip_step, ogd_step, project, tune_rate
from .losses import (
    AdversaryScript,
    alternating_adversary,
    fixed_quadratic_adversary,
    grad_bound,
    iid_linear_adversary,
    make_linear_loss,
    make_quadratic_loss,
    piecewise_linear_adversary,
)

__version__ = "0.1.0"
