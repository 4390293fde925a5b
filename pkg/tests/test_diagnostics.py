"""Split R-hat and ESS behavior on constructed chains."""

from __future__ import annotations

import math

import numpy as np
import pytest

from uptake.diagnostics import compute_diagnostics, ess, split_rhat
from uptake.inference import PosteriorSamples


def _samples(draws: np.ndarray, names=None) -> PosteriorSamples:
    c, d, p = draws.shape
    return PosteriorSamples(
        names=tuple(names or (f"p{i}" for i in range(p))),
        draws=draws,
        seed=0,
        acceptance=(0.3,) * c,
        positive=(False,) * p,
    )


def test_rhat_near_one_for_iid_chains():
    rng = np.random.default_rng(0)
    draws = rng.normal(size=(4, 1000))
    r = split_rhat(draws)
    assert 0.999 <= r <= 1.01


def test_rhat_large_for_disjoint_chains():
    rng = np.random.default_rng(1)
    a = rng.normal(0.0, 1.0, size=(1, 1000))
    b = rng.normal(5.0, 1.0, size=(1, 1000))
    r = split_rhat(np.concatenate([a, b]))
    assert r > 1.2


def test_rhat_numeric_lower_bound():
    rng = np.random.default_rng(2)
    for seed in range(10):
        draws = np.random.default_rng(seed).normal(size=(4, 500))
        assert split_rhat(draws) >= 1.0 - 1e-3


def test_rhat_constant_chains():
    same = np.full((4, 100), 2.5)
    assert split_rhat(same) == 1.0
    different = np.concatenate([np.full((2, 100), 0.0), np.full((2, 100), 1.0)])
    assert split_rhat(different) == math.inf


def test_ess_iid_close_to_total():
    rng = np.random.default_rng(3)
    draws = rng.normal(size=(4, 1000))
    e = ess(draws)
    assert 2000 <= e <= 4000


def test_ess_capped_at_total_draws():
    rng = np.random.default_rng(4)
    for seed in range(5):
        draws = np.random.default_rng(seed).normal(size=(2, 200))
        assert ess(draws) <= 400


def test_ess_low_for_autocorrelated_chain():
    rng = np.random.default_rng(5)
    chains = []
    for _ in range(4):
        x = np.empty(1000)
        x[0] = rng.normal()
        for t in range(1, 1000):
            x[t] = 0.95 * x[t - 1] + math.sqrt(1 - 0.95**2) * rng.normal()
        chains.append(x)
    e = ess(np.array(chains))
    assert e < 400  # an AR(0.95) chain is worth far fewer independent draws


def test_ess_constant_draws_degenerate_not_infinite():
    same = np.full((4, 100), 1.0)
    assert math.isnan(ess(same))


def test_compute_diagnostics_flags_degenerate():
    rng = np.random.default_rng(6)
    draws = np.stack(
        [
            np.column_stack([rng.normal(size=50), np.full(50, 3.0)]),
            np.column_stack([rng.normal(size=50), np.full(50, 3.0)]),
        ]
    )
    samples = _samples(draws, names=("good", "flat"))
    diag = compute_diagnostics(samples)
    assert "flat" in diag.degenerate
    assert math.isnan(diag.ess["flat"])
    assert diag.max_rhat() == diag.rhat["good"]


def test_single_chain_rejected():
    rng = np.random.default_rng(7)
    with pytest.raises(ValueError):
        split_rhat(rng.normal(size=(1, 100)))
    with pytest.raises(ValueError):
        compute_diagnostics(_samples(rng.normal(size=(1, 100, 2))))


def test_converged_thresholds():
    rng = np.random.default_rng(8)
    good = _samples(rng.normal(size=(4, 500, 2)))
    assert compute_diagnostics(good).converged(1.05, 100)
    split = np.concatenate([rng.normal(0, 1, (2, 500, 1)), rng.normal(8, 1, (2, 500, 1))])
    assert not compute_diagnostics(_samples(split)).converged(1.05, 100)


def test_summary_structure():
    rng = np.random.default_rng(9)
    diag = compute_diagnostics(_samples(rng.normal(size=(2, 300, 2))))
    doc = diag.to_summary()
    assert set(doc) == {"perParameter", "rhatMax", "essMin", "acceptanceRates", "degenerate", "converged"}
    assert doc["converged"] is True
