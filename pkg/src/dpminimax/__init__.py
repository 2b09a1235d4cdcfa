"""Differentially private estimators, minimax lower-bound evaluators, and
the Monte Carlo harness that stress-tests them at desk scale."""

from .bounds import (
    BoundReport,
    assouad_bound,
    fano_bound,
    fano_sample_complexity,
    group_privacy_factor,
    le_cam_bound,
    packing_bound,
    sample_complexity_table,
)
from .codes import Code, code_from_json, gv_constant_weight, gv_qary, min_distance
from .core import (
    Dataset,
    GaussianMixtureSpec,
    Metric,
    PrivacyBudget,
    ProbVector,
    ProductDist,
    dist_from_json,
    distance,
    gaussian_component_kl,
    mixture_tv_mc,
    product_kl,
    product_tv_exact,
    sample_dataset,
)
from .couplings import (
    CouplingSampler,
    assouad_kary_coupling,
    dataset_hamming,
    empirical_hamming,
    marginal_check,
    maximal_coupling_iid,
    product_flip_coupling,
)
from .harness import (
    ExperimentConfig,
    RiskReport,
    build_family,
    family_bounds,
    monte_carlo_risk,
    required_n,
    run_experiment,
    scaling_check,
)
from .mechanisms import (
    EstimatorConfig,
    FiniteMechanism,
    check_dp,
    discretized_laplace_estimator,
    empirical_estimator,
    group_dp_check,
    laplace_estimator,
    mechanism_from_json,
    project_simplex,
    randomized_response,
)
from .packings import (
    HypercubeFamily,
    PackingFamily,
    assouad_kary_family,
    assouad_product_family,
    family_from_json,
    gaussian_mixture_packing,
    kary_l2_packing,
    kary_tv_packing,
    product_event_gap,
    product_packing,
    verify_family,
    verify_hypercube,
)

__version__ = "0.1.0"
