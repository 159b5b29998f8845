"""Security bounds for random-access-code QKD under detector blinding.

The package computes the eavesdropper's maximal post-selected guessing
probability against 2->1 and 3->1 random-access-code protocols as a
function of observed detection efficiency, three ways: closed forms,
derivative-free optimization over attack families, and Monte Carlo
simulation.  Critical detection efficiencies follow by bisection.
"""

from .qmath import (
    BlochAngles,
    DensityOperator,
    ProjectorPair,
    bloch_vector_of_matrix,
    born_probability,
    generator_from_hermitian,
    hermitian_from_generator,
    partial_trace,
    projector_pair_from_bloch,
    state_from_bloch,
    tensor,
    unitary_from_generator,
)
from .protocol import (
    Fixed2to1,
    Fixed3to1,
    GeneralEncoding,
    RacProtocol,
    Tampered3to1Symmetric,
    build_states,
    classical_max,
    honest_bob_measurements,
    honest_protocol,
    key_rate,
    quantum_max,
    success_probability,
)
from .attack import (
    DmAttack,
    EfficiencyModel,
    IrAttack,
    ObservedStats,
    dm_from_ir,
    eta_avg,
    postselected_stats_dm,
    postselected_stats_ir,
    postselection_weights,
    security_margin,
)
from .bounds import (
    CurvePoint,
    CurveSpec,
    OptimizerConfig,
    TargetUnreachableError,
    analytic_curve,
    analytic_pe_max,
    critical_efficiency,
    default_grid,
    optimize_dm,
    optimize_ir,
    pe_max_at_eta_avg,
)
from .sim import SimConfig, SimReport, chi_square_consistency, predicted_stats, run

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BlochAngles",
    "DensityOperator",
    "ProjectorPair",
    "bloch_vector_of_matrix",
    "born_probability",
    "generator_from_hermitian",
    "hermitian_from_generator",
    "partial_trace",
    "projector_pair_from_bloch",
    "state_from_bloch",
    "tensor",
    "unitary_from_generator",
    "Fixed2to1",
    "Fixed3to1",
    "GeneralEncoding",
    "RacProtocol",
    "Tampered3to1Symmetric",
    "build_states",
    "classical_max",
    "honest_bob_measurements",
    "honest_protocol",
    "key_rate",
    "quantum_max",
    "success_probability",
    "DmAttack",
    "EfficiencyModel",
    "IrAttack",
    "ObservedStats",
    "dm_from_ir",
    "eta_avg",
    "postselected_stats_dm",
    "postselected_stats_ir",
    "postselection_weights",
    "security_margin",
    "CurvePoint",
    "CurveSpec",
    "OptimizerConfig",
    "TargetUnreachableError",
    "analytic_curve",
    "analytic_pe_max",
    "critical_efficiency",
    "default_grid",
    "optimize_dm",
    "optimize_ir",
    "pe_max_at_eta_avg",
    "SimConfig",
    "SimReport",
    "chi_square_consistency",
    "predicted_stats",
    "run",
]
