"""Numerical laboratory for a 1D thermoelastic system with an internal time
delay compensated by Kelvin-Voigt damping.

The delayed strain is carried as a transport unknown on an auxiliary
interval, turning the system into an autonomous first-order evolution whose
generator is discretized on a staggered grid.  The package verifies the
stability machinery numerically: dissipation inequality, coercivity of the
resolvent form, spectrum location, resolvent boundedness, and measured
exponential energy decay under the damping-dominance condition
alpha * tau <= beta.
"""

from .coercivity import (
    Branch,
    PhysicalParams,
    ScanReport,
    coercivity_lower_bound,
    coercivity_scan,
    coercivity_value,
    derived_constants,
    stability_condition,
)
from .errors import (
    DeflationError,
    DimensionGuardError,
    EigensolverError,
    NoDecayDataError,
    NumericalError,
    SingularSystemError,
    ThermodelayError,
    ValidationError,
)
from .generator import (
    GeneratorMatrix,
    apply,
    apply_blocks,
    assemble,
    resolvent_solve,
    resolvent_solve_reduced,
    transport_resolvent,
)
from .grid import (
    GridSpec,
    StateVector,
    ThetaBC,
    build_grid,
    diff_node_to_mid,
    div_mid_to_node,
    h_inner,
    theta_flux,
)
from .spectral import (
    ResolventScan,
    SpectrumReport,
    eigenvalues,
    resolvent_norm,
    resolvent_scan,
    spectral_abscissa,
    spectrum_report,
    stability_sweep,
)
from .timestepper import (
    DecayFit,
    InitialData,
    Scheme,
    Trajectory,
    dissipation_residual,
    energy,
    fit_decay,
    simulate,
    simulate_history,
    step,
)

__version__ = "0.1.0"
