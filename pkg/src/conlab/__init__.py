"""conlab: a laboratory for nonlinear constitutive models.

Solves thermodynamics-based material models (1D elastoplasticity with
saturating hardening, 1D interface damage, 3D cohesive zones) two ways:
classical return-mapping / explicit integration, and feed-forward
networks trained purely on the models' governing equations.  Both
routes plug into the same trajectory driver and a small truss solver,
so they can be compared point-wise along arbitrary loading paths.
"""

__version__ = "0.1.0"

from .materials import (  # noqa: F401
    Cz3dParams,
    DamageParams,
    DamageState,
    DEFAULT_CZ3D,
    DEFAULT_DAMAGE,
    DEFAULT_PLASTICITY,
    PlasticityParams,
    PlasticState,
    Response,
)
from .solvers import (  # noqa: F401
    SolverConfig,
    StepResult,
    explicit_damage_step,
    solve_cz3d_step,
    solve_damage_step,
    solve_plastic_step,
)
from .network import Network, TrainingConfig, init_network  # noqa: F401
from .losses import LossReport, LossWeights, TUNED_PLASTIC_WEIGHTS  # noqa: F401
from .paths import LoadingPath, make_loading_path  # noqa: F401
from .driver import (  # noqa: F401
    ErrorStats,
    Trajectory,
    benchmark,
    compare,
    run_path,
    timestep_study,
)
from .training import make_task_nets, train, train_ode_demo  # noqa: F401
from .truss import Truss, fe_solve, make_cantilever_truss  # noqa: F401
from .checkpoint import load_checkpoint, save_checkpoint  # noqa: F401
