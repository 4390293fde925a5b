"""Fit orchestration shared by the CLI and the HTTP service.

Both interfaces must produce byte-identical posterior payloads for
identical inputs and seeds, so the fit -> diagnose -> embed-summary step
lives here once.
"""

from __future__ import annotations

from dataclasses import replace

from .diagnostics import Diagnostics, compute_diagnostics
from .errors import HashMismatchError
from .inference import PosteriorSamples, SamplerConfig, build_model, sample_posterior
from .model import AcceptanceGraph, default_graph, graph_hash
from .priors import PriorSpec
from .survey import ScoredDataset

RHAT_THRESHOLD = 1.05
ESS_THRESHOLD = 100.0


def check_prior_compatibility(prior: PriorSpec, graph: AcceptanceGraph, data: ScoredDataset) -> None:
    """A chained prior must come from the same graph and instrument."""
    if prior.provenance.startswith("chained"):
        if prior.graph_hash and prior.graph_hash != graph_hash(graph):
            raise HashMismatchError("chained prior was compressed under a different graph")
        if prior.instrument_hash and prior.instrument_hash != data.instrument_id:
            raise HashMismatchError("chained prior was compressed under a different instrument")


def fit_posterior(
    data: ScoredDataset,
    prior: PriorSpec | None = None,
    cfg: SamplerConfig | None = None,
    graph: AcceptanceGraph | None = None,
) -> tuple[PosteriorSamples, Diagnostics]:
    """Fit the structural model and embed the diagnostics summary."""
    g = graph or default_graph()
    config = cfg or SamplerConfig()
    if prior is not None:
        check_prior_compatibility(prior, g, data)
    model = build_model(data, prior, g)
    samples = sample_posterior(model, config)
    diag = compute_diagnostics(samples)
    samples = replace(
        samples,
        diagnostics_summary=diag.to_summary(RHAT_THRESHOLD, ESS_THRESHOLD),
    )
    return samples, diag
