"""Bayesian workbench for technology-acceptance surveys.

Fit the UTAUT-style acceptance graph to Likert survey data by MCMC,
diagnose convergence, chain posteriors into priors across study waves,
and simulate what-if interventions to rank actions by their expected
effect on actual use.
"""

from .model import (
    AcceptanceGraph,
    Construct,
    Edge,
    InstrumentSpec,
    MeasurementItem,
    default_graph,
    default_instrument,
    validate_graph,
)
from .survey import (
    ScoredDataset,
    SurveyResponse,
    apply_missing_policy,
    parse_responses,
    reverse_code,
    score_constructs,
)
from .priors import PriorSpec, compress_posterior, default_priors
from .inference import (
    DensityModel,
    PosteriorSamples,
    SamplerConfig,
    build_model,
    log_likelihood,
    sample_posterior,
    structural_parameter_names,
)
from .diagnostics import Diagnostics, compute_diagnostics
from .oracles import conjugate_posterior, grid_posterior
from .whatif import (
    Intervention,
    PredictiveSummary,
    RankingResult,
    Scenario,
    baseline,
    compare,
    rank,
    simulate,
)

__version__ = "0.1.0"

__all__ = [
    "AcceptanceGraph",
    "Construct",
    "DensityModel",
    "Diagnostics",
    "Edge",
    "InstrumentSpec",
    "Intervention",
    "MeasurementItem",
    "PosteriorSamples",
    "PredictiveSummary",
    "PriorSpec",
    "RankingResult",
    "SamplerConfig",
    "Scenario",
    "ScoredDataset",
    "SurveyResponse",
    "apply_missing_policy",
    "baseline",
    "build_model",
    "compare",
    "compress_posterior",
    "compute_diagnostics",
    "conjugate_posterior",
    "default_graph",
    "default_instrument",
    "default_priors",
    "grid_posterior",
    "log_likelihood",
    "parse_responses",
    "rank",
    "reverse_code",
    "sample_posterior",
    "score_constructs",
    "simulate",
    "structural_parameter_names",
    "validate_graph",
]
