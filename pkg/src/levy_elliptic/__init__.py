"""Simulation and verification toolkit for noise-driven Dirichlet problems.

Simulates the problem (-Laplace)^gamma u = white Levy noise with zero
boundary values on hyperrectangles, where the eigenbasis is explicit, and
verifies the solver against closed-form oracles and Monte Carlo property
tests: characteristic functionals, jump-integral isometry, weak/mild
duality, Sobolev-norm thresholds, a continuity dichotomy, and spectral
counting bounds.
"""

from .diagnostics import (
    TestReport,
    continuity_probe,
    empirical_cf_test,
    isometry_test,
    sobolev_sweep,
    spectral_bound_check,
    weak_identity_test,
)
from .domain import (
    EigenSystem,
    HyperBox,
    QuadratureError,
    eigenfunction_eval,
    enumerate_eigen,
    weyl_count,
)
from .functions import (
    AxisPower,
    CallableFunction,
    Constant,
    Eigenfunction,
    GridFunction,
    Indicator,
    Polynomial,
    Scaled,
    SpectralFunction,
    UncertifiedFunctionError,
    fourier_coeff,
)
from .integrability import (
    GREEN_BOUND_MODE,
    ExistenceVerdict,
    IntegrabilityReport,
    existence_verdict,
    rr_integrability,
)
from .measures import (
    AlphaStable,
    LevyTriplet,
    NullMeasure,
    SymmetricTwoPoint,
    VarianceGamma,
    characteristic_exponent,
    nu_stats,
    sample_jump_sizes,
)
from .noise import (
    JumpAtomSet,
    NoiseRealization,
    pair_eigen,
    pair_with_function,
    sample_noise,
    sample_prm_large,
)
from .solver import (
    RegimeRefusalError,
    SpectralField,
    eval_field,
    eval_field_grid,
    green_convolve,
    green_gamma_eval,
    sobolev_norm,
    solve_mild,
    torsion_solution,
)

__version__ = "0.1.0"
