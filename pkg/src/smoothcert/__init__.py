"""Noise-smoothed attribution maps with certified top-k robustness.

The pipeline: perturb an input with generalized normal noise, rank-rescale
each noisy attribution with a nonincreasing scoring vector, and average.
The averaged map admits closed-form certificates: a maximum input
perturbation size (in any l_d norm, d in [1, inf]) under which at least a
beta fraction of its top-k entries provably survives, plus finite-sample
variants when the map is a Monte-Carlo estimate.
"""

from .attack import AttackConfig, AttackResult, project_ball, topk_attack
from .certify import (
    InfeasibleSpecError,
    RobustnessCertificate,
    TopKSpec,
    WorstCaseSolution,
    certify_beta,
    certify_max_attack,
    eps_robust,
    k0_and_boundary,
    select_shape,
    worst_case_map,
)
from .concentration import (
    ConcentrationBound,
    certify_max_attack_lower,
    delta_coordinate,
    finite_sample_certificate,
    gradient_l1_budget,
    lipschitz_constant,
    phi_value,
)
from .evaluation import (
    PointingGameCase,
    PointingScore,
    SweepRow,
    SweepSpec,
    SweepResult,
    pointing_score,
    run_sweep,
    synthetic_case,
)
from .gnd import (
    ONE_PLUS,
    GaussianRenyi,
    GndKl,
    GndParams,
    LaplaceRenyi,
    QuadratureError,
    eps_alpha_laplace,
    eps_gaussian,
    eps_kl_gnd,
    invert_divergence,
    numeric_renyi_divergence,
    pdf,
    sample_noise,
)
from .mapio import (
    BadMagicError,
    DimMismatchError,
    MapFormatError,
    TruncatedFileError,
    UnsupportedVersionError,
    read_map,
    write_map,
)
from .models import (
    ConvModel,
    FileBackedInterpreter,
    GradientInterpreter,
    LinearModel,
    MlpModel,
    QuadraticModel,
    load_saliency,
    random_model,
)
from .scoring import (
    ScoringVector,
    build_scoring_vector,
    rank_rescale,
    renyi_robustness_divergence,
    top_k_overlap,
    top_k_set,
)
from .smoothing import (
    InterpreterFailure,
    SmoothingConfig,
    expected_map_reference,
    sample_rng,
    smooth,
)
from .types import Image, MapProvenance, RawMap, SmoothedMap

__version__ = "0.1.0"
