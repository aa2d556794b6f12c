"""Stochastic bridges of linear time-varying systems.

Exact statistics of a linear diffusion pinned at both ends of an interval,
the controlled SDE that generates it, and Monte Carlo tools to check one
against the other.
"""

from .errors import (
    BridgeError,
    InsufficientSamples,
    NonFiniteResult,
    OutOfInterval,
    ShapeMismatch,
    SingularGramian,
    Unbridgeable,
    UnknownPreset,
)
from .gramians import (
    BridgeabilityReport,
    GramianTable,
    backward_gramian,
    check_bridgeability,
    forward_gramian,
    gramian_table,
    gramians_at,
)
from .montecarlo import EnsembleStats, MomentAccumulator, ValidationReport, ensemble_stats, run_ensemble, validate
from .sde import ControlledDrift, SamplePath, SimulationPlan, bridge_drift, feedback_gain, simulate_bridge
from .stats import (
    BridgeSpec,
    BridgeStatistics,
    bridge_statistics,
    conditioning_oracle,
    ou_closed_forms,
    pinned_cov,
    pinned_mean,
)
from .system import (
    LinearSystem,
    PiecewisePolyMatrix,
    TimeGrid,
    double_integrator,
    eval_dynamics,
    state_transition,
    wiener_system,
)

__version__ = "0.1.0"
