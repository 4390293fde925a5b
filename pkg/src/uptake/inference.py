"""Structural model, log-density evaluation and MCMC posterior sampling.

The structural form is linear-Gaussian on standardized construct scores:
every graph node with parents gets one regression equation, so the default
graph yields

    BI_i  ~ Normal(alpha[BI]  + sum_k beta[k->BI]  * z_ik,  sigma[BI])
    USE_i ~ Normal(alpha[USE] + sum_p beta[p->USE] * x_ip,  sigma[USE])

where x includes the *observed* BI z-score (observed-mediator fit; latent
propagation through BI happens at simulation time in the what-if module).
Noise scales are sampled on the log scale with the Jacobian folded into
the prior term; the normalizing constant of Bayes' rule is never computed
because Metropolis acceptance ratios cancel it.

Sampling is adaptive random-walk Metropolis: component-wise proposals
whose scales adapt toward a target acceptance rate during warmup, then
freeze.  Each chain draws from an independent RNG substream keyed by
(seed, chain index), so serial and parallel execution produce bit-identical
results.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Mapping

import numpy as np

from .errors import DataFormatError, UptakeError
from .model import AcceptanceGraph, canonical_json, default_graph, graph_hash, sha256_hex
from .priors import LOG_2PI, PriorSpec, default_priors
from .survey import ScoredDataset, dataset_hash


def structural_parameter_names(graph: AcceptanceGraph, skip: tuple[str, ...] = ()) -> tuple[str, ...]:
    """Deterministic parameter layout: per regressed node (topological
    order) an intercept, one coefficient per parent in edge order, and a
    noise scale.  ``skip`` drops coefficients for degenerate parents."""
    names: list[str] = []
    for node in graph.topological_order():
        parents = graph.parents(node)
        if not parents:
            continue
        names.append(f"alpha[{node}]")
        names.extend(f"beta[{p}->{node}]" for p in parents if p not in skip)
        names.append(f"sigma[{node}]")
    return tuple(names)


def coefficient_names(names: tuple[str, ...]) -> tuple[str, ...]:
    return tuple(n for n in names if n.startswith("beta["))


def parse_coefficient(name: str) -> tuple[str, str]:
    """beta[PE->BI] -> ("PE", "BI")."""
    inner = name[len("beta[") : -1]
    src, dst = inner.split("->")
    return src, dst


@dataclass(frozen=True)
class Equation:
    """One node's regression: outcome column index plus parent columns."""

    node: str
    outcome_col: int
    parent_cols: tuple[int, ...]
    alpha_idx: int
    beta_idx: tuple[int, ...]
    sigma_idx: int


def log_likelihood(
    values: Mapping[str, float] | np.ndarray,
    data: ScoredDataset,
    graph: AcceptanceGraph | None = None,
) -> float:
    """Gaussian log-likelihood of the structural equations at one parameter
    assignment.  Empty datasets give 0 (the empty sum)."""
    g = graph or default_graph()
    names = structural_parameter_names(g, skip=data.degenerate)
    if isinstance(values, np.ndarray):
        vec = np.asarray(values, dtype=float)
        if vec.shape != (len(names),):
            raise DataFormatError(f"expected {len(names)} parameters, got {vec.shape}")
    else:
        try:
            vec = np.array([values[n] for n in names], dtype=float)
        except KeyError as exc:
            raise DataFormatError(f"missing parameter {exc}") from None
    total = 0.0
    for eq in _equations(g, data, names):
        y = data.z[:, eq.outcome_col]
        mu = vec[eq.alpha_idx] + data.z[:, list(eq.parent_cols)] @ vec[list(eq.beta_idx)]
        sigma = vec[eq.sigma_idx]
        if sigma <= 0:
            return -math.inf
        r = y - mu
        n = len(y)
        total += -0.5 * n * LOG_2PI - n * math.log(sigma) - 0.5 * float(r @ r) / (sigma * sigma)
    return total


def _equations(graph: AcceptanceGraph, data: ScoredDataset, names: tuple[str, ...]) -> list[Equation]:
    index = {n: i for i, n in enumerate(names)}
    eqs: list[Equation] = []
    for node in graph.topological_order():
        parents = [p for p in graph.parents(node) if p not in data.degenerate]
        if not graph.parents(node):
            continue
        missing = [c for c in (node, *parents) if c not in data.constructs]
        if missing:
            raise DataFormatError(f"dataset lacks columns for constructs {missing}")
        if node in data.degenerate:
            raise DataFormatError(f"outcome construct {node} is constant; cannot fit its equation")
        eqs.append(
            Equation(
                node=node,
                outcome_col=data.column(node),
                parent_cols=tuple(data.column(p) for p in parents),
                alpha_idx=index[f"alpha[{node}]"],
                beta_idx=tuple(index[f"beta[{p}->{node}]"] for p in parents),
                sigma_idx=index[f"sigma[{node}]"],
            )
        )
    return eqs


@dataclass(frozen=True)
class DensityModel:
    """Unnormalized log posterior over an unconstrained parameter vector.

    ``positive`` marks coordinates sampled on the log scale; ``constrain``
    maps the sampler's vector to the natural scale.  ``log_density`` takes
    the unconstrained vector and already includes any Jacobian terms.
    """

    names: tuple[str, ...]
    positive: tuple[bool, ...]
    log_density: Callable[[np.ndarray], float]
    sample_initial: Callable[[np.random.Generator], np.ndarray]
    graph_hash: str = ""
    dataset_hash: str = ""
    instrument_hash: str = ""

    @property
    def dim(self) -> int:
        return len(self.names)

    def constrain(self, u: np.ndarray) -> np.ndarray:
        out = np.array(u, dtype=float, copy=True)
        mask = np.asarray(self.positive)
        out[mask] = np.exp(out[mask])
        return out

    def unconstrain(self, x: np.ndarray) -> np.ndarray:
        out = np.array(x, dtype=float, copy=True)
        mask = np.asarray(self.positive)
        if np.any(out[mask] <= 0):
            raise ValueError("positive parameter must be > 0 to unconstrain")
        out[mask] = np.log(out[mask])
        return out


def build_model(
    data: ScoredDataset,
    prior: PriorSpec | None = None,
    graph: AcceptanceGraph | None = None,
) -> DensityModel:
    """Assemble prior x likelihood for the structural model on a dataset.

    The prior must cover exactly the model's parameters; pass
    ``default_priors(structural_parameter_names(graph))`` or a chained
    PriorSpec from ``compress_posterior``.
    """
    g = graph or default_graph()
    names = structural_parameter_names(g, skip=data.degenerate)
    p = prior if prior is not None else default_priors(names)
    p.validate_for(names)
    positive = tuple(n.startswith("sigma[") for n in names)
    eqs = _equations(g, data, names)

    z = data.z
    packed = [
        (z[:, eq.outcome_col], z[:, list(eq.parent_cols)], eq.alpha_idx, list(eq.beta_idx), eq.sigma_idx)
        for eq in eqs
    ]
    prior_parts = _prior_evaluator(p, names, positive)
    pos_mask = np.array(positive)

    def log_density(u: np.ndarray) -> float:
        lp = prior_parts(u)
        if not math.isfinite(lp):
            return -math.inf
        for y, X, a_i, b_i, s_i in packed:
            sigma = math.exp(u[s_i])
            mu = u[a_i] + X @ u[b_i]
            r = y - mu
            n = len(y)
            lp += -0.5 * n * LOG_2PI - n * u[s_i] - 0.5 * float(r @ r) / (sigma * sigma)
        return lp

    def sample_initial(rng: np.random.Generator) -> np.ndarray:
        vals = _sample_prior_values(p, names, rng)
        u = np.array([vals[n] for n in names], dtype=float)
        u[pos_mask] = np.log(np.maximum(u[pos_mask], 1e-8))
        return u

    return DensityModel(
        names=names,
        positive=positive,
        log_density=log_density,
        sample_initial=sample_initial,
        graph_hash=graph_hash(g),
        dataset_hash=dataset_hash(data),
        instrument_hash=data.instrument_id,
    )


def _prior_evaluator(prior: PriorSpec, names: tuple[str, ...], positive: tuple[bool, ...]):
    """Closure evaluating the prior (with Jacobians) on the unconstrained
    vector, precomputed to index arithmetic."""
    from .priors import GaussianBlock, HalfNormalPrior, NormalPrior

    normal_terms: list[tuple[int, float, float]] = []  # (idx, mean, sd)
    halfnormal_terms: list[tuple[int, float]] = []  # (idx, sd), coordinate is log(x)
    for i, name in enumerate(names):
        entry = prior.entry_for(name)
        if isinstance(entry, GaussianBlock):
            continue
        if isinstance(entry, HalfNormalPrior):
            if not positive[i]:
                raise DataFormatError(f"HalfNormal prior on unconstrained parameter {name}")
            halfnormal_terms.append((i, entry.sd))
        elif isinstance(entry, NormalPrior):
            normal_terms.append((i, entry.mean, entry.sd))
    block = prior.block
    block_idx = [names.index(n) for n in block.names] if block is not None else []

    hn_const = 0.5 * math.log(2.0) - 0.5 * LOG_2PI

    def evaluate(u: np.ndarray) -> float:
        lp = 0.0
        for i, mean, sd in normal_terms:
            lp += -0.5 * LOG_2PI - math.log(sd) - 0.5 * ((u[i] - mean) / sd) ** 2
        for i, sd in halfnormal_terms:
            x = math.exp(u[i])
            # HalfNormal density at x plus the log-transform Jacobian log(x)
            lp += hn_const - math.log(sd) - 0.5 * (x / sd) ** 2 + u[i]
        if block is not None:
            lp += block.log_density(u[block_idx])
        return lp

    return evaluate


def _sample_prior_values(prior: PriorSpec, names: tuple[str, ...], rng: np.random.Generator) -> dict[str, float]:
    from .priors import GaussianBlock, HalfNormalPrior

    values: dict[str, float] = {}
    block_done = False
    for name in names:
        entry = prior.entry_for(name)
        if isinstance(entry, GaussianBlock):
            if not block_done:
                draw = entry.sample(rng)
                for n, v in zip(entry.names, draw):
                    values[n] = float(v)
                block_done = True
        elif isinstance(entry, HalfNormalPrior):
            values[name] = abs(float(rng.normal(0.0, entry.sd)))
        else:
            values[name] = float(rng.normal(entry.mean, entry.sd))
    return values


@dataclass(frozen=True)
class SamplerConfig:
    chains: int = 4
    warmup_draws: int = 1000
    kept_draws: int = 1000
    seed: int = 0
    target_acceptance: float = 0.3
    initial_step_scale: float = 0.5
    parallel: bool = False

    def __post_init__(self) -> None:
        if self.chains < 2:
            raise ValueError("need at least 2 chains for diagnostics")
        if self.kept_draws <= 0 or self.warmup_draws < 0:
            raise ValueError("draw counts must be positive")
        if not (0.0 < self.target_acceptance < 1.0):
            raise ValueError("target acceptance must be in (0, 1)")


@dataclass(frozen=True)
class PosteriorSamples:
    """chains x draws x parameters on the natural scale, plus fit metadata."""

    names: tuple[str, ...]
    draws: np.ndarray
    seed: int
    acceptance: tuple[float, ...]
    positive: tuple[bool, ...]
    graph_hash: str = ""
    dataset_hash: str = ""
    instrument_hash: str = ""
    diagnostics_summary: dict | None = None

    def __post_init__(self) -> None:
        c, d, p = self.draws.shape
        if p != len(self.names):
            raise ValueError("draw matrix does not match parameter names")
        if not np.all(np.isfinite(self.draws)):
            raise ValueError("posterior draws contain non-finite values")
        self.draws.setflags(write=False)

    @property
    def n_chains(self) -> int:
        return self.draws.shape[0]

    @property
    def n_draws(self) -> int:
        return self.draws.shape[1]

    def pooled(self) -> np.ndarray:
        return self.draws.reshape(-1, len(self.names))

    def column(self, name: str) -> np.ndarray:
        return self.pooled()[:, self.names.index(name)]

    def parameter_values(self, name: str) -> np.ndarray:
        return self.column(name)


class InitializationError(UptakeError, RuntimeError):
    """Could not find a finite starting point for a chain."""


def sample_posterior(model: DensityModel, cfg: SamplerConfig) -> PosteriorSamples:
    """Run adaptive random-walk Metropolis chains and collect kept draws.

    Component-wise proposals; per-coordinate step scales adapt toward
    ``cfg.target_acceptance`` during warmup (Robbins-Monro on the log
    scale) and are frozen afterwards.  Warmup draws are discarded.
    Deterministic for a fixed seed, whether chains run serially or in a
    thread pool.
    """
    seeds = [np.random.SeedSequence(entropy=cfg.seed, spawn_key=(chain,)) for chain in range(cfg.chains)]

    def run_chain(chain: int) -> tuple[np.ndarray, float]:
        rng = np.random.default_rng(seeds[chain])
        u = _initial_point(model, rng)
        dim = model.dim
        kept = np.empty((cfg.kept_draws, dim), dtype=float)
        log_scales = np.full(dim, math.log(cfg.initial_step_scale), dtype=float)
        current_lp = model.log_density(u)
        accepted = 0
        proposals = 0
        total_iters = cfg.warmup_draws + cfg.kept_draws
        for t in range(total_iters):
            warming = t < cfg.warmup_draws
            for j in range(dim):
                proposal = u.copy()
                proposal[j] += math.exp(log_scales[j]) * rng.standard_normal()
                prop_lp = model.log_density(proposal)
                log_ratio = prop_lp - current_lp
                accept_prob = 1.0 if log_ratio >= 0 else math.exp(log_ratio)
                took = rng.random() < accept_prob
                if took:
                    u = proposal
                    current_lp = prop_lp
                    if not warming:
                        accepted += 1
                if not warming:
                    proposals += 1
                if warming:
                    # adapt on the realized outcome (not accept_prob), so a
                    # constant added to the log-density cannot perturb the
                    # draw path through last-ulp differences
                    gamma = (t + 1) ** -0.7
                    log_scales[j] += gamma * ((1.0 if took else 0.0) - cfg.target_acceptance)
            if not warming:
                kept[t - cfg.warmup_draws] = u
        constrained = kept.copy()
        mask = np.array(model.positive)
        constrained[:, mask] = np.exp(constrained[:, mask])
        rate = accepted / proposals if proposals else 0.0
        return constrained, rate

    if cfg.parallel:
        with ThreadPoolExecutor(max_workers=cfg.chains) as pool:
            results = list(pool.map(run_chain, range(cfg.chains)))
    else:
        results = [run_chain(c) for c in range(cfg.chains)]

    draws = np.stack([r[0] for r in results])
    rates = tuple(r[1] for r in results)
    return PosteriorSamples(
        names=model.names,
        draws=draws,
        seed=cfg.seed,
        acceptance=rates,
        positive=model.positive,
        graph_hash=model.graph_hash,
        dataset_hash=model.dataset_hash,
        instrument_hash=model.instrument_hash,
    )


def _initial_point(model: DensityModel, rng: np.random.Generator, retries: int = 100) -> np.ndarray:
    for _ in range(retries):
        u = model.sample_initial(rng)
        if math.isfinite(model.log_density(u)):
            return u
    raise InitializationError(f"no finite starting point after {retries} draws from the prior")


def fix_parameters(model: DensityModel, fixed: Mapping[str, float]) -> DensityModel:
    """Condition a model on fixed natural-scale values for some parameters,
    returning a reduced model over the remaining coordinates (used by the
    quadrature oracle)."""
    unknown = set(fixed) - set(model.names)
    if unknown:
        raise DataFormatError(f"cannot fix unknown parameters {sorted(unknown)}")
    free_idx = [i for i, n in enumerate(model.names) if n not in fixed]
    base = np.zeros(model.dim)
    for i, n in enumerate(model.names):
        if n in fixed:
            x = fixed[n]
            base[i] = math.log(x) if model.positive[i] else x

    def embed(u_free: np.ndarray) -> np.ndarray:
        full = base.copy()
        full[free_idx] = u_free
        return full

    def log_density(u_free: np.ndarray) -> float:
        return model.log_density(embed(u_free))

    def sample_initial(rng: np.random.Generator) -> np.ndarray:
        return model.sample_initial(rng)[free_idx]

    return DensityModel(
        names=tuple(model.names[i] for i in free_idx),
        positive=tuple(model.positive[i] for i in free_idx),
        log_density=log_density,
        sample_initial=sample_initial,
        graph_hash=model.graph_hash,
        dataset_hash=model.dataset_hash,
        instrument_hash=model.instrument_hash,
    )


def shift_density(model: DensityModel, constant: float) -> DensityModel:
    """Add a constant to the log-density (sampler output must not change)."""
    return replace(model, log_density=lambda u: model.log_density(u) + constant)


# ---------------------------------------------------------------------------
# Posterior serialization: canonical JSON, byte-identical across interfaces.
# ---------------------------------------------------------------------------

def posterior_to_dict(samples: PosteriorSamples) -> dict:
    return {
        "v": 1,
        "parameterNames": list(samples.names),
        "chains": samples.n_chains,
        "draws": [[[float(x) for x in draw] for draw in chain] for chain in samples.draws],
        "seed": samples.seed,
        "acceptance": [float(a) for a in samples.acceptance],
        "positive": list(samples.positive),
        "diagnosticsSummary": samples.diagnostics_summary,
        "graphHash": samples.graph_hash,
        "datasetHash": samples.dataset_hash,
        "instrumentHash": samples.instrument_hash,
    }


def posterior_from_dict(doc: dict) -> PosteriorSamples:
    try:
        draws = np.array(doc["draws"], dtype=float)
        return PosteriorSamples(
            names=tuple(doc["parameterNames"]),
            draws=draws,
            seed=int(doc["seed"]),
            acceptance=tuple(float(a) for a in doc.get("acceptance", [])),
            positive=tuple(bool(b) for b in doc["positive"]),
            graph_hash=doc.get("graphHash", ""),
            dataset_hash=doc.get("datasetHash", ""),
            instrument_hash=doc.get("instrumentHash", ""),
            diagnostics_summary=doc.get("diagnosticsSummary"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"invalid posterior document: {exc}") from None


def posterior_to_json(samples: PosteriorSamples) -> str:
    return canonical_json(posterior_to_dict(samples))


def posterior_from_json(text: str) -> PosteriorSamples:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}") from None
    return posterior_from_dict(doc)


def posterior_hash(samples: PosteriorSamples) -> str:
    return sha256_hex(posterior_to_json(samples))
