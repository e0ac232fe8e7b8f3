"""Measurement-constrained posterior sampling laboratory.

Guided ancestral samplers over analytic Gaussian-mixture priors, linear
degradation operators with exact adjoints and pseudo-inverses, a
bit-deterministic synthetic degradation pipeline, and exact posterior
oracles to judge every sampler against.
"""

from .diffusion import (
    NoiseSchedule,
    estimate_x0,
    forward_noise,
    make_linear_schedule,
    posterior_mean,
    posterior_sigma,
    posterior_step_from_x0,
    posterior_step_unguided,
)
from .operators import (
    AvgPoolOperator,
    CompositeOperator,
    DenseOperator,
    GaussianBlurOperator,
    LinearOperator,
    OperatorTooLarge,
    adjoint_mismatch,
    avgpool_op,
    compose,
    gaussian_blur_op,
    projection_apply,
    pseudo_apply,
)
from .wavelets import WaveletBands, detail_energy, haar_decompose, haar_reconstruct
from .gmm import (
    GaussianMixture,
    GmmPrior,
    component_assign,
    condition_restrict,
    denoiser_from_prior,
    gmm_eps_pred,
    gmm_exact_posterior,
    gmm_sample,
    gmm_x0_mean,
)
from .priors import (
    checker_prior,
    collision_prior,
    load_prior,
    point_prior,
    save_prior,
    scalar_pair_prior,
    smooth_base,
    stripe_pattern,
)
from .rng import CounterRng
from .degrade import (
    DegradationSpec,
    degradation_operator,
    jpeg_quantize,
    sample_spec,
    synthesize_lq,
)
from .guidance import (
    FORWARD,
    REVERSE,
    GuidanceConfig,
    NumericalAbort,
    Trajectory,
    TrajectoryStep,
    coarse_restore,
    ddnm_sample,
    dps_sample,
    fidelity_loss_grad,
    forward_loss_grad,
    mcs_sample,
    noise_blend_init,
    reverse_loss_grad,
    select_measurement,
    unguided_sample,
)
from .harness import (
    ConfigError,
    ExperimentConfig,
    RunReport,
    SeedResult,
    load_experiment_config,
    run_experiment,
    sweep,
    trajectory_stats,
)
from .fileio import read_pgm, write_pgm

__version__ = "0.1.0"
