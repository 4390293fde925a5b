"""Shared fixtures: small synthetic datasets and fitted posteriors."""

from __future__ import annotations

import pytest

from uptake.inference import SamplerConfig
from uptake.synthetic import FIXTURE_TRUTH, synthetic_dataset
from uptake.workflow import fit_posterior


@pytest.fixture(scope="session")
def small_dataset():
    ds, implied = synthetic_dataset(FIXTURE_TRUTH, n=60, seed=19)
    return ds, implied


@pytest.fixture(scope="session")
def small_fit(small_dataset):
    ds, _ = small_dataset
    samples, diag = fit_posterior(ds, cfg=SamplerConfig(chains=2, warmup_draws=400, kept_draws=400, seed=23))
    return ds, samples, diag
