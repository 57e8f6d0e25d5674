"""Collision-model simulator for structured thermal ancillae."""

from .qcore import (
    POLICY,
    DensityMatrix,
    HilbertSpace,
    Operator,
    SpectralDecomposition,
    collision_unitary,
    gibbs_state,
    hermitian_eig,
    partial_trace,
    relative_entropy,
    tensor_product,
    vn_entropy,
)
from .ancilla import (
    AncillaSpec,
    CorrelationSet,
    ExchangeTerm,
    FreeTerm,
    InteractionTerm,
    StructuredAncilla,
    build_ancilla,
    corr_first,
    corr_he,
    corr_second,
    correlation_set,
    thermal_state,
)
from .engine import (
    CollisionModel,
    CollisionOutcome,
    PropagatorKind,
    Trajectory,
    exact_collision,
    l1_coherence,
    run_trajectory,
    steady_state,
    truncated_step,
)
from .models import (
    Example2Coefficients,
    TwoQubitAncillaParams,
    TwoQubitSpectrum,
    example1_closed_g,
    example1_model,
    example1_steady,
    example2_analytic_steady,
    example2_closed_coeffs,
    example2_map_step,
    example2_model,
    two_qubit_spectrum,
)
from .thermo import (
    ThermoRecord,
    collision_thermo,
    example2_thermo_closed,
    internal_energy,
    perturbative_thermo,
    steady_state_balance,
)

__version__ = "0.1.0"
