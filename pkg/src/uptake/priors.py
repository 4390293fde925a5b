"""Prior specifications: defaults, evaluation, and posterior compression.

A PriorSpec assigns every model parameter exactly one prior: either an
independent Normal/HalfNormal marginal, or membership in one joint
Gaussian block (used when a prior is chained from a previous study's
posterior).  Noise scales are sampled on the log scale, so their
HalfNormal density carries the log-transform Jacobian when asked for.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConvergenceError, DataFormatError, PriorCoverageError
from .model import canonical_json, sha256_hex

LOG_2PI = math.log(2.0 * math.pi)
#: E[X] = sd * HALF_NORMAL_MEAN_FACTOR for X ~ HalfNormal(sd)
HALF_NORMAL_MEAN_FACTOR = math.sqrt(2.0 / math.pi)


@dataclass(frozen=True)
class NormalPrior:
    mean: float
    sd: float

    def __post_init__(self) -> None:
        if self.sd <= 0:
            raise ValueError("Normal prior sd must be positive")

    def log_density(self, x: float) -> float:
        return -0.5 * LOG_2PI - math.log(self.sd) - 0.5 * ((x - self.mean) / self.sd) ** 2

    def moments(self) -> tuple[float, float]:
        return (self.mean, self.sd)


@dataclass(frozen=True)
class HalfNormalPrior:
    sd: float

    def __post_init__(self) -> None:
        if self.sd <= 0:
            raise ValueError("HalfNormal prior sd must be positive")

    def log_density(self, x: float, jacobian: bool = False) -> float:
        """Density on the positive scale; with ``jacobian`` adds log(x) for
        evaluation against a log-transformed coordinate."""
        if x <= 0:
            return -math.inf
        lp = 0.5 * math.log(2.0) - 0.5 * LOG_2PI - math.log(self.sd) - 0.5 * (x / self.sd) ** 2
        if jacobian:
            lp += math.log(x)
        return lp

    def moments(self) -> tuple[float, float]:
        mean = self.sd * HALF_NORMAL_MEAN_FACTOR
        sd = self.sd * math.sqrt(1.0 - 2.0 / math.pi)
        return (mean, sd)


@dataclass(frozen=True)
class GaussianBlock:
    """Joint Normal over a subset of parameters (chained-posterior priors)."""

    names: tuple[str, ...]
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        k = len(self.names)
        if self.mean.shape != (k,) or self.cov.shape != (k, k):
            raise ValueError("block mean/cov shapes do not match names")
        if not np.allclose(self.cov, self.cov.T, atol=1e-10):
            raise ValueError("block covariance must be symmetric")
        eigs = np.linalg.eigvalsh(self.cov)
        if eigs.min() < -1e-10 * max(1.0, eigs.max()):
            raise ValueError("block covariance must be positive semi-definite")
        self.mean.setflags(write=False)
        self.cov.setflags(write=False)

    def _chol(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.cov)
        except np.linalg.LinAlgError:
            jitter = 1e-10 * max(1.0, float(np.trace(self.cov)) / len(self.names))
            return np.linalg.cholesky(self.cov + jitter * np.eye(len(self.names)))

    def log_density(self, x: np.ndarray) -> float:
        L = self._chol()
        dev = np.linalg.solve(L, x - self.mean)
        return float(-0.5 * len(self.names) * LOG_2PI - np.log(np.diag(L)).sum() - 0.5 * dev @ dev)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.mean + self._chol() @ rng.standard_normal(len(self.names))


Marginal = NormalPrior | HalfNormalPrior


@dataclass(frozen=True)
class PriorSpec:
    """Per-parameter priors; ``provenance`` is "default" or "chained:<id>"."""

    marginals: dict[str, Marginal] = field(default_factory=dict)
    block: GaussianBlock | None = None
    provenance: str = "default"
    graph_hash: str = ""
    instrument_hash: str = ""

    def parameter_names(self) -> tuple[str, ...]:
        names = list(self.marginals)
        if self.block is not None:
            names.extend(self.block.names)
        return tuple(names)

    def validate_for(self, names: tuple[str, ...]) -> None:
        """Every model parameter must have exactly one prior entry."""
        marginal_names = set(self.marginals)
        block_names = set(self.block.names) if self.block is not None else set()
        overlap = marginal_names & block_names
        if overlap:
            raise PriorCoverageError(f"parameters with two prior entries: {sorted(overlap)}")
        covered = marginal_names | block_names
        missing = set(names) - covered
        if missing:
            raise PriorCoverageError(f"parameters without prior: {sorted(missing)}")
        extra = covered - set(names)
        if extra:
            raise PriorCoverageError(f"prior entries without model parameter: {sorted(extra)}")

    def entry_for(self, name: str) -> Marginal | GaussianBlock:
        if name in self.marginals:
            return self.marginals[name]
        if self.block is not None and name in self.block.names:
            return self.block
        raise PriorCoverageError(f"parameter without prior: {name}")

    def log_density(self, values: Mapping[str, float], jacobian: bool = True) -> float:
        """Joint prior log-density at a full parameter assignment.

        ``jacobian`` adds the log-transform correction for HalfNormal
        entries (the sampler works on log-noise coordinates).
        """
        lp = 0.0
        for name, prior in self.marginals.items():
            if name not in values:
                raise PriorCoverageError(f"no value supplied for parameter {name}")
            x = values[name]
            if isinstance(prior, HalfNormalPrior):
                lp += prior.log_density(x, jacobian=jacobian)
            else:
                lp += prior.log_density(x)
        if self.block is not None:
            x = np.array([values[n] for n in self.block.names], dtype=float)
            lp += self.block.log_density(x)
        return lp

    def marginal_moments(self, name: str) -> tuple[float, float]:
        """Analytic (mean, sd) of one parameter's prior marginal."""
        entry = self.entry_for(name)
        if isinstance(entry, GaussianBlock):
            i = entry.names.index(name)
            return (float(entry.mean[i]), float(math.sqrt(entry.cov[i, i])))
        return entry.moments()


def default_priors(names: tuple[str, ...]) -> PriorSpec:
    """Weakly informative defaults on the z scale.

    Normal(0,1) for coefficients, Normal(0,2) for intercepts,
    HalfNormal(1) for noise sds.
    """
    marginals: dict[str, Marginal] = {}
    for name in names:
        if name.startswith("sigma["):
            marginals[name] = HalfNormalPrior(sd=1.0)
        elif name.startswith("alpha["):
            marginals[name] = NormalPrior(mean=0.0, sd=2.0)
        else:
            marginals[name] = NormalPrior(mean=0.0, sd=1.0)
    return PriorSpec(marginals=marginals, provenance="default")


def compress_posterior(samples, source_id: str = "", rhat_threshold: float = 1.05) -> PriorSpec:
    """Moment-match a fitted posterior into a chained PriorSpec.

    Location parameters (intercepts, coefficients) become one joint
    Gaussian block with the pooled-sample mean vector and full covariance.
    Noise parameters become HalfNormal marginals matched on the mean
    (s = mean * sqrt(pi/2)), so a chained refit with no new data keeps the
    posterior mean of each noise scale.  Refuses unconverged posteriors.

    ``samples`` is a PosteriorSamples (imported lazily to keep this module
    free of the sampler).
    """
    from .diagnostics import compute_diagnostics

    diag = compute_diagnostics(samples)
    worst = diag.max_rhat()
    if worst is not None and worst > rhat_threshold:
        raise ConvergenceError(
            f"refusing to compress: max split R-hat {worst:.4f} exceeds {rhat_threshold}"
        )

    pooled = samples.pooled()  # (total draws, params)
    location_idx = [i for i, pos in enumerate(samples.positive) if not pos]
    noise_idx = [i for i, pos in enumerate(samples.positive) if pos]

    block = None
    if location_idx:
        sub = pooled[:, location_idx]
        block = GaussianBlock(
            names=tuple(samples.names[i] for i in location_idx),
            mean=sub.mean(axis=0),
            cov=np.atleast_2d(np.cov(sub, rowvar=False, ddof=1)),
        )
    marginals: dict[str, Marginal] = {}
    for i in noise_idx:
        mean = float(pooled[:, i].mean())
        if mean <= 0:
            raise ConvergenceError(f"noise parameter {samples.names[i]} has non-positive mean")
        marginals[samples.names[i]] = HalfNormalPrior(sd=mean / HALF_NORMAL_MEAN_FACTOR)

    return PriorSpec(
        marginals=marginals,
        block=block,
        provenance=f"chained:{source_id}" if source_id else "chained:",
        graph_hash=samples.graph_hash,
        instrument_hash=samples.instrument_hash,
    )


# ---------------------------------------------------------------------------
# Serialization (covariance stored row-major).
# ---------------------------------------------------------------------------

def prior_to_dict(prior: PriorSpec) -> dict:
    marginals = {}
    for name, m in prior.marginals.items():
        if isinstance(m, HalfNormalPrior):
            marginals[name] = {"dist": "halfnormal", "sd": m.sd}
        else:
            marginals[name] = {"dist": "normal", "mean": m.mean, "sd": m.sd}
    doc = {
        "v": 1,
        "marginals": marginals,
        "provenance": prior.provenance,
        "graphHash": prior.graph_hash,
        "instrumentHash": prior.instrument_hash,
    }
    if prior.block is not None:
        doc["block"] = {
            "names": list(prior.block.names),
            "mean": [float(x) for x in prior.block.mean],
            "cov": [float(x) for x in prior.block.cov.reshape(-1)],
        }
    return doc


def prior_from_dict(doc: dict) -> PriorSpec:
    try:
        marginals: dict[str, Marginal] = {}
        for name, m in doc.get("marginals", {}).items():
            if m["dist"] == "halfnormal":
                marginals[name] = HalfNormalPrior(sd=float(m["sd"]))
            elif m["dist"] == "normal":
                marginals[name] = NormalPrior(mean=float(m["mean"]), sd=float(m["sd"]))
            else:
                raise DataFormatError(f"unknown prior distribution {m['dist']!r}")
        block = None
        if "block" in doc:
            b = doc["block"]
            k = len(b["names"])
            block = GaussianBlock(
                names=tuple(b["names"]),
                mean=np.array(b["mean"], dtype=float),
                cov=np.array(b["cov"], dtype=float).reshape(k, k),
            )
        return PriorSpec(
            marginals=marginals,
            block=block,
            provenance=doc.get("provenance", "default"),
            graph_hash=doc.get("graphHash", ""),
            instrument_hash=doc.get("instrumentHash", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataFormatError):
            raise
        raise DataFormatError(f"invalid prior document: {exc}") from None


def prior_to_json(prior: PriorSpec) -> str:
    return canonical_json(prior_to_dict(prior))


def prior_from_json(text: str) -> PriorSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}") from None
    return prior_from_dict(doc)


def prior_hash(prior: PriorSpec) -> str:
    return sha256_hex(prior_to_json(prior))
