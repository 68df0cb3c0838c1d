"""Simulation of joint smeared position/momentum measurements and recovery of
the sharp distributions from the measured statistics."""

from .errors import (
    ConfigError,
    DivergenceError,
    GridResolutionError,
    IllPosedError,
    InvalidMomentSequenceError,
    PhaseMomentsError,
    TruncationError,
    UnreliableDerivativeError,
    UnsupportedModelError,
)
from .hilbert import (
    ChirpedGaussianProbe,
    FockProbe,
    GaussianProbe,
    Grid,
    GridDensity,
    GridFunction,
    StateVector,
    chirped_gaussian_densities,
    chirped_gaussian_state,
    coherent_state,
    default_grid,
    exact_moment,
    fourier_transform,
    hermite_wavefunction,
    momentum_density,
    position_density,
    probe_moment,
)
from .models import (
    ArthursKelly,
    BalancedHomodyne,
    CoefficientTable,
    EightPort,
    GeneratingOperator,
    SequentialVN,
    coefficient_table,
    detector_kernels,
    geometric_distance,
    homodyne_moment12,
    intrinsic_noise_vn,
    measured_marginal_density,
    measured_moment,
    measured_moments,
    smear_density,
    uncertainty_product,
)
from .sampling import MomentSequence, SampleSet, empirical_moments, sample_outcomes
from .inference import (
    DeterminacyVerdict,
    density_from_moments,
    determinacy_check,
    recover_moments,
)
from .deconv import fourier_deconvolve, gaussian_differential_deconvolve
from .husimi import (
    DensityMatrix,
    HusimiQ,
    angular_coefficient,
    husimi_q,
    reconstruct_element,
    reconstruct_elements,
)
from .povm import (
    FiniteJointPOM,
    adversarial_search,
    make_projective_product_pom,
    marginals,
    verify_product_form,
)

__version__ = "0.1.0"
