"""Entropy production of Markovian open quantum systems.

The entropy production rate ``sigma = dS/dt + J`` is computed two ways:
from the density matrix of a Lindblad master equation, and from an ensemble
of quantum-jump trajectories, where each emitted or absorbed quantum carries
entropy ``omega/T`` into the reservoir.

Modules
-------
operators
    Small dense linear algebra: Hermitian eigensolver, entropy, logarithms.
lindblad
    Model construction, master-equation integration, entropy functionals.
pdp
    Quantum-jump trajectories (compiled kernel with a Python fallback).
ensemble
    Monte Carlo aggregation and the entropy-production estimator.
models
    The driven qubit and the Lambda system.
cli
    ``jumpentropy run`` / ``jumpentropy validate``.
"""
from .exceptions import (
    ImpossibleJumpError,
    IntegrationError,
    InvalidStateError,
    JumpEntropyError,
    ModelValidationError,
    NoStationaryStateError,
    NumericalError,
    StepSizeError,
    ValidationError,
)
from .lindblad import (
    DecayChannel,
    LindbladModel,
    build_model,
    dissipator,
    entropy_curves,
    entropy_flux,
    entropy_production_functional,
    gibbs_state,
    integrate_master,
    stationary_state,
)
from .models import (
    LambdaParams,
    QubitParams,
    dark_state,
    driven_qubit,
    lambda_system,
    mix_channels,
    stationary_sigma_lambda,
    stationary_sigma_qubit,
)
from .pdp import BACKEND, RngStream, TrajectoryRecord, simulate_trajectory
from .ensemble import (
    EnsembleAccumulator,
    EnsembleStats,
    ensemble_stats,
    estimate_density,
    estimate_flux,
    estimate_sigma,
    run_ensemble,
)

__version__ = "0.1.0"
