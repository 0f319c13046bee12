"""Exact Gaussian dynamics of a harmonic oscillator coupled to a harmonic bath."""

from .bath import (
    BathPreparation,
    DiscreteBath,
    SpectralDensity,
    box_spectral_density,
    damping_kernel,
    discretize,
    energy_distribution,
    nonthermal_equivalent_preparation,
    positivity_check,
    thermal_preparation,
)
from .chain import (
    ChainParams,
    chain_spectral_density,
    homogeneous_stationary,
    parameter_scan,
    quench_preparation,
    quench_stationary,
    weak_damping_temperature,
)
from .equilibrium import classify, stationary_covariance, stationary_state, weak_damping_state
from .estimators import MomentPropagator, ResponseFunctionEstimator, StationaryStateEstimator
from .exceptions import (
    AliasingError,
    ConfigError,
    DQHOError,
    InvalidPreparationError,
    NotEquilibratingError,
    NumericalError,
    PoleHitError,
    PositivityError,
    QuadratureError,
    RootFindingError,
    SingularRepresentationError,
    VolterraInstabilityError,
)
from .io import VERSION as __version__
from .oracle import build_finite, evolve_exact, revival_time_estimate
from .propagation import (
    PhaseMoments,
    gaussian_propagator,
    propagate_moments,
    propagate_trajectory,
)
from .response import compute_u_fourier, compute_u_volterra, equilibrates, find_poles
