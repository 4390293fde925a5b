"""Prior evaluation, coverage validation, and posterior compression."""

from __future__ import annotations

import math

import numpy as np
import pytest

from uptake.errors import ConvergenceError, PriorCoverageError
from uptake.inference import PosteriorSamples
from uptake.priors import (
    GaussianBlock,
    HalfNormalPrior,
    NormalPrior,
    PriorSpec,
    compress_posterior,
    default_priors,
    prior_from_json,
    prior_to_json,
)

LOG_2PI = math.log(2.0 * math.pi)


def test_default_prior_families():
    names = ("alpha[BI]", "beta[PE->BI]", "sigma[BI]")
    p = default_priors(names)
    assert p.marginals["alpha[BI]"] == NormalPrior(0.0, 2.0)
    assert p.marginals["beta[PE->BI]"] == NormalPrior(0.0, 1.0)
    assert p.marginals["sigma[BI]"] == HalfNormalPrior(1.0)
    p.validate_for(names)


def test_standard_normal_log_density_at_zero():
    p = PriorSpec(marginals={"b": NormalPrior(0.0, 1.0)})
    assert p.log_density({"b": 0.0}) == pytest.approx(-0.5 * LOG_2PI, abs=1e-15)


def test_identity_block_factorizes():
    names = ("a", "b", "c")
    block = GaussianBlock(names=names, mean=np.zeros(3), cov=np.eye(3))
    joint = PriorSpec(block=block)
    independent = PriorSpec(marginals={n: NormalPrior(0.0, 1.0) for n in names})
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = {n: float(v) for n, v in zip(names, rng.normal(size=3))}
        assert joint.log_density(x) == pytest.approx(independent.log_density(x), abs=1e-10)


def test_chained_prior_peaks_at_source_mean():
    mean = np.array([0.4, -0.2])
    cov = np.array([[0.04, 0.01], [0.01, 0.09]])
    block = GaussianBlock(names=("a", "b"), mean=mean, cov=cov)
    prior = PriorSpec(block=block, provenance="chained:src")
    at_mean = prior.log_density({"a": 0.4, "b": -0.2})
    shifted = prior.log_density({"a": 0.4 + 3 * 0.2, "b": -0.2})
    assert at_mean > shifted


def test_coverage_missing_parameter():
    p = default_priors(("alpha[BI]",))
    with pytest.raises(PriorCoverageError, match="without prior"):
        p.validate_for(("alpha[BI]", "sigma[BI]"))


def test_coverage_extra_entry():
    p = default_priors(("alpha[BI]", "sigma[BI]"))
    with pytest.raises(PriorCoverageError, match="without model parameter"):
        p.validate_for(("alpha[BI]",))


def test_coverage_double_entry():
    block = GaussianBlock(names=("alpha[BI]",), mean=np.zeros(1), cov=np.eye(1))
    p = PriorSpec(marginals={"alpha[BI]": NormalPrior(0, 1)}, block=block)
    with pytest.raises(PriorCoverageError, match="two prior entries"):
        p.validate_for(("alpha[BI]",))


def test_halfnormal_moments_and_jacobian():
    hn = HalfNormalPrior(sd=2.0)
    mean, sd = hn.moments()
    assert mean == pytest.approx(2.0 * math.sqrt(2.0 / math.pi))
    assert sd == pytest.approx(2.0 * math.sqrt(1.0 - 2.0 / math.pi))
    x = 1.3
    assert hn.log_density(x, jacobian=True) == pytest.approx(hn.log_density(x) + math.log(x))
    assert hn.log_density(-1.0) == -math.inf


def test_block_requires_symmetric_psd():
    with pytest.raises(ValueError, match="symmetric"):
        GaussianBlock(names=("a", "b"), mean=np.zeros(2), cov=np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="positive semi-definite"):
        GaussianBlock(names=("a", "b"), mean=np.zeros(2), cov=np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_prior_serialization_round_trip():
    block = GaussianBlock(
        names=("alpha[BI]", "beta[PE->BI]"),
        mean=np.array([0.1, 0.2]),
        cov=np.array([[0.05, 0.01], [0.01, 0.02]]),
    )
    prior = PriorSpec(
        marginals={"sigma[BI]": HalfNormalPrior(0.7)},
        block=block,
        provenance="chained:abc",
        graph_hash="g1",
        instrument_hash="i1",
    )
    text = prior_to_json(prior)
    back = prior_from_json(text)
    assert back.marginals == prior.marginals
    assert back.block.names == block.names
    assert np.allclose(back.block.mean, block.mean)
    assert np.allclose(back.block.cov, block.cov)
    assert back.provenance == "chained:abc"
    assert prior_to_json(back) == text


def _fake_samples(draws: np.ndarray, names, positive) -> PosteriorSamples:
    return PosteriorSamples(
        names=tuple(names),
        draws=draws,
        seed=0,
        acceptance=(0.3,) * draws.shape[0],
        positive=tuple(positive),
        graph_hash="g",
        dataset_hash="d",
        instrument_hash="i",
    )


def test_compress_recovers_known_gaussian():
    rng = np.random.default_rng(42)
    mean = np.array([0.5, -0.3, 1.2])
    cov = np.array([[0.09, 0.02, 0.0], [0.02, 0.04, 0.01], [0.0, 0.01, 0.16]])
    chol = np.linalg.cholesky(cov)
    total = 40000
    raw = mean + rng.standard_normal((total, 3)) @ chol.T
    sigma_draws = np.abs(rng.normal(0.0, 1.0, size=(total, 1)))
    draws = np.concatenate([raw, sigma_draws], axis=1).reshape(4, total // 4, 4)
    samples = _fake_samples(draws, ("a", "b", "c", "sigma[BI]"), (False, False, False, True))
    prior = compress_posterior(samples, source_id="src1")
    assert prior.provenance == "chained:src1"
    assert np.max(np.abs(prior.block.mean - mean)) < 0.02
    for i in range(3):
        for j in range(3):
            if cov[i, j] != 0.0:
                assert prior.block.cov[i, j] == pytest.approx(cov[i, j], rel=0.10)
    # mean-matched HalfNormal keeps E[sigma]
    hn = prior.marginals["sigma[BI]"]
    assert hn.sd * math.sqrt(2.0 / math.pi) == pytest.approx(float(sigma_draws.mean()), rel=0.01)


def test_compress_refuses_unconverged():
    # two chains stuck at different levels -> R-hat >> 1.05
    rng = np.random.default_rng(1)
    chain_a = rng.normal(0.0, 0.1, size=(1, 500, 1))
    chain_b = rng.normal(5.0, 0.1, size=(1, 500, 1))
    samples = _fake_samples(np.concatenate([chain_a, chain_b]), ("a",), (False,))
    with pytest.raises(ConvergenceError, match="R-hat"):
        compress_posterior(samples)


def test_compress_carries_hashes():
    rng = np.random.default_rng(3)
    draws = rng.normal(size=(2, 400, 1))
    samples = _fake_samples(draws, ("a",), (False,))
    prior = compress_posterior(samples)
    assert prior.graph_hash == "g"
    assert prior.instrument_hash == "i"


def test_compress_then_refit_without_data_is_a_fixed_point():
    # fit -> compress -> refit with zero evidence reproduces the source
    # posterior's location moments (and noise means) within MCMC error
    from uptake.inference import SamplerConfig, build_model, sample_posterior
    from uptake.synthetic import FIXTURE_TRUTH, synthetic_dataset
    from uptake.survey import empty_dataset

    ds, _ = synthetic_dataset(FIXTURE_TRUTH, n=120, seed=14)
    source = sample_posterior(
        build_model(ds), SamplerConfig(chains=2, warmup_draws=800, kept_draws=1200, seed=25)
    )
    chained = compress_posterior(source, source_id="wave1")

    empty = empty_dataset()
    refit_model = build_model(empty, prior=chained)
    refit = sample_posterior(
        refit_model, SamplerConfig(chains=2, warmup_draws=800, kept_draws=1200, seed=26)
    )
    for name in source.names:
        src = source.column(name)
        new = refit.column(name)
        if name.startswith("sigma["):
            assert new.mean() == pytest.approx(src.mean(), abs=0.08)
        else:
            tol = 4.0 * max(src.std(ddof=1), 0.01) / math.sqrt(200.0)
            assert new.mean() == pytest.approx(src.mean(), abs=max(tol, 0.03)), name
            assert new.std(ddof=1) == pytest.approx(src.std(ddof=1), rel=0.25), name
