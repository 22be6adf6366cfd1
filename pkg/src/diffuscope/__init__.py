"""Multiscale diffusion geometry for point clouds and weighted networks."""

from .measures import (
    EmpiricalMeasure,
    EmptySupport,
    IndexOutOfRange,
    VertexDistribution,
    ZeroTotal,
    frequency_distribution,
    point_mass,
    uniform_empirical,
)
from .euclid import (
    FrechetField,
    GridSpec,
    NonFiniteIterate,
    diffusion_distance_sq,
    evaluate_field,
    frechet_function,
    frechet_gradient,
    gaussian_normalizer,
    gradient_flow,
    heat_kernel,
    local_minima,
)
from .networks import (
    DiffusionFrechetVector,
    DisconnectedNetwork,
    EigensolverError,
    SpectralDecomposition,
    WeightedNetwork,
    commute_time_distance,
    dfv,
    diffusion_distance,
    heat_kernel_matrix,
    laplacian,
    spectrum,
)
from .transport import (
    Coupling,
    TransportResult,
    wasserstein_euclidean,
    wasserstein_network,
)
from .stability import (
    BoundReport,
    check_dfv_stability,
    check_frechet_stability,
    check_gradient_stability,
    check_lemma_gauss_a,
    check_lemma_gauss_b,
)
from .cooccurrence import (
    AbundanceTable,
    LansDecision,
    ZeroVarianceColumn,
    build_pipeline,
    correlation_network,
    lans_sparsify,
)
from .biomarker import (
    DegenerateSeparation,
    LdaModel,
    RocCurve,
    features_beta,
    features_gamma,
    fit_lda,
    roc,
    score,
    select_parameters,
)

__version__ = "0.1.0"
