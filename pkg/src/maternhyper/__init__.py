"""Non-stationary Matern-type field priors with length-scale hypermodels
and a Gibbs / Metropolis-within-Gibbs sampler for linear Bayesian
inverse problems."""

__version__ = "0.1.0"

from .grid import Boundary, Field, Grid, interpolate_to, make_grid, stencil
from .spde import (
    AnisoSpec,
    PrecisionFactor,
    Row,
    assemble_anisotropic_factor,
    assemble_precision_factor,
    replace_row,
    sample_realization,
    sample_white_noise,
)
from .hyper import (
    BoundedExpLink,
    CauchyLink,
    CauchyNoiseHyper,
    CauchyWalkHyper,
    ExpLink,
    GaussianMaternHyper,
    apply_link,
    log_density,
    log_density_delta,
    sample_hyper,
)
from .sampler import (
    ChainOutput,
    ChainState,
    adapt_scales,
    det_ratio_exact,
    det_ratio_windowed,
    gibbs_v_step,
    kde,
    mwg_sweep,
    run_chain,
)
from .forward import (
    ForwardProblem,
    heaviside_operator,
    interp_operator,
    phantom_2d,
    phantom_diff_1d,
    phantom_diff_integral,
    phantom_interp_1d,
    synth_data,
)
from .oracle import (
    DenseGaussian,
    conditional_gaussian,
    constant_ell_baseline,
    dense_covariance,
    dense_logdet,
    matern_cov,
    metrics,
    power_spectrum,
    stationary_amplitude,
)
