"""Counterfactual what-if simulation over posterior draws.

Interventions fix predictor construct scores (do-semantics: only the named
columns are overridden) for the observed respondents.  Effects propagate
through the graph by simulating each downstream equation in turn, so the
*simulated* intention score feeds the use equation even though the model
was fit with the observed mediator.  Per-posterior-draw RNG substreams
keyed by (seed, draw index) make results reproducible and independent of
execution order; scenario comparisons share the seed, so scenarios see
common random numbers and the empty scenario reproduces the baseline
exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, HashMismatchError
from .inference import PosteriorSamples, parse_coefficient, structural_parameter_names
from .model import AcceptanceGraph, canonical_json, default_graph, graph_hash
from .survey import ScoredDataset, dataset_hash


@dataclass(frozen=True)
class Intervention:
    construct_id: str
    value: float
    scale: str = "raw"  # "raw" (instrument units) | "z"

    def __post_init__(self) -> None:
        if self.scale not in ("raw", "z"):
            raise DataFormatError(f"unknown intervention scale {self.scale!r}")
        if not math.isfinite(self.value):
            raise DataFormatError("intervention value must be finite")


@dataclass(frozen=True)
class Scenario:
    name: str
    interventions: tuple[Intervention, ...] = ()

    def __post_init__(self) -> None:
        ids = [iv.construct_id for iv in self.interventions]
        if len(set(ids)) != len(ids):
            raise DataFormatError(f"scenario {self.name!r} intervenes twice on one construct")

    @property
    def empty(self) -> bool:
        return not self.interventions


BASELINE = Scenario(name="baseline")


@dataclass(frozen=True)
class PredictiveSummary:
    target: str
    mean: float
    sd: float
    ci_low: float
    ci_high: float
    draw_count: int
    scenario: str
    ci_level: float = 0.9

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "mean": self.mean,
            "sd": self.sd,
            "ci90": [self.ci_low, self.ci_high],
            "drawCount": self.draw_count,
            "scenario": self.scenario,
        }


@dataclass(frozen=True)
class RankedScenario:
    name: str
    expected_gain: float
    gain_ci_low: float
    gain_ci_high: float
    prob_improvement: float
    use: PredictiveSummary
    bi: PredictiveSummary

    def to_dict(self) -> dict:
        return {
            "scenario": self.name,
            "gain": self.expected_gain,
            "gainCi90": [self.gain_ci_low, self.gain_ci_high],
            "probImprove": self.prob_improvement,
            "use": self.use.to_dict(),
            "bi": self.bi.to_dict(),
        }


@dataclass(frozen=True)
class RankingResult:
    baseline: dict[str, PredictiveSummary]
    entries: tuple[RankedScenario, ...]

    def to_dict(self) -> dict:
        return {
            "v": 1,
            "baseline": {k: v.to_dict() for k, v in self.baseline.items()},
            "ranking": [e.to_dict() for e in self.entries],
        }


# ---------------------------------------------------------------------------
# Scenario JSON: {"name": "...", "set": {"TC": {"value": 6, "scale": "raw"}}}
# ---------------------------------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    return {
        "name": s.name,
        "set": {iv.construct_id: {"value": iv.value, "scale": iv.scale} for iv in s.interventions},
    }


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        name = doc["name"]
        raw = doc.get("set", {})
        interventions = tuple(
            Intervention(construct_id=cid, value=float(spec["value"]), scale=spec.get("scale", "raw"))
            for cid, spec in raw.items()
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"invalid scenario document: {exc}") from None
    return Scenario(name=str(name), interventions=interventions)


def scenario_from_json(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc)


def scenario_to_json(s: Scenario) -> str:
    return canonical_json(scenario_to_dict(s))


# ---------------------------------------------------------------------------
# Simulation core.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _ParsedEquation:
    node: str
    alpha_idx: int
    parents: tuple[str, ...]
    beta_idx: tuple[int, ...]
    sigma_idx: int


def _parse_equations(names: tuple[str, ...]) -> list[_ParsedEquation]:
    """Recover the structural equations from posterior parameter names."""
    nodes = [n[len("alpha[") : -1] for n in names if n.startswith("alpha[")]
    index = {n: i for i, n in enumerate(names)}
    eqs = []
    for node in nodes:
        parents = []
        beta_idx = []
        for i, n in enumerate(names):
            if n.startswith("beta["):
                src, dst = parse_coefficient(n)
                if dst == node:
                    parents.append(src)
                    beta_idx.append(i)
        eqs.append(
            _ParsedEquation(
                node=node,
                alpha_idx=index[f"alpha[{node}]"],
                parents=tuple(parents),
                beta_idx=tuple(beta_idx),
                sigma_idx=index[f"sigma[{node}]"],
            )
        )
    # topological order among equation nodes (parents simulated first)
    ordered: list[_ParsedEquation] = []
    remaining = {e.node: e for e in eqs}
    while remaining:
        ready = [
            e for e in remaining.values() if not any(p in remaining for p in e.parents)
        ]
        if not ready:
            raise DataFormatError("cyclic structural equations in posterior parameters")
        for e in sorted(ready, key=lambda e: e.node):
            ordered.append(e)
            del remaining[e.node]
    return ordered


def _interventions_to_z(scenario: Scenario, data: ScoredDataset, graph: AcceptanceGraph) -> dict[str, float]:
    out: dict[str, float] = {}
    for iv in scenario.interventions:
        if not graph.has_node(iv.construct_id):
            raise DataFormatError(f"unknown construct {iv.construct_id!r} in scenario {scenario.name!r}")
        if graph.construct(iv.construct_id).role != "predictor":
            raise DataFormatError(
                f"scenario {scenario.name!r} intervenes on non-predictor {iv.construct_id}"
            )
        if iv.scale == "raw":
            if not (data.scale_min <= iv.value <= data.scale_max):
                raise DataFormatError(
                    f"raw intervention {iv.construct_id}={iv.value} outside scale "
                    f"[{data.scale_min}, {data.scale_max}]"
                )
            st = data.stats[iv.construct_id]
            if st.sd == 0:
                raise DataFormatError(f"cannot intervene on degenerate construct {iv.construct_id}")
            out[iv.construct_id] = (iv.value - st.mean) / st.sd
        else:
            out[iv.construct_id] = iv.value
    return out


def _check_hashes(posterior: PosteriorSamples, data: ScoredDataset, graph: AcceptanceGraph) -> None:
    if posterior.graph_hash and posterior.graph_hash != graph_hash(graph):
        raise HashMismatchError("posterior was fit against a different graph")
    if posterior.dataset_hash and posterior.dataset_hash != dataset_hash(data):
        raise HashMismatchError("posterior was fit against a different dataset")


def _simulate_draws(
    posterior: PosteriorSamples,
    data: ScoredDataset,
    z_overrides: dict[str, float],
    draws_per_sample: int,
    seed: int,
) -> dict[str, np.ndarray]:
    """Simulated outcome draws per equation node, shape (T, N, R)."""
    if draws_per_sample <= 0:
        raise DataFormatError("draws_per_sample must be positive")
    eqs = _parse_equations(posterior.names)
    pooled = posterior.pooled()  # (T, P)
    t_draws = pooled.shape[0]
    n = data.n
    r = draws_per_sample

    static: dict[str, np.ndarray] = {}

    def static_column(construct: str) -> np.ndarray:
        if construct not in static:
            if construct in z_overrides:
                static[construct] = np.full(n, z_overrides[construct], dtype=float)
            else:
                static[construct] = data.z_column(construct)
        return static[construct]

    simulated: dict[str, np.ndarray] = {}
    # per-equation static (T, N) mean parts computed vectorized; noise added
    # with per-posterior-draw substreams
    mean_parts: dict[str, np.ndarray] = {}
    for eq in eqs:
        alpha = pooled[:, eq.alpha_idx]  # (T,)
        mu = np.repeat(alpha[:, None], n, axis=1)  # (T, N)
        for p, b_idx in zip(eq.parents, eq.beta_idx):
            if p in {e.node for e in eqs}:
                continue  # simulated parent handled in the draw loop
            mu += np.outer(pooled[:, b_idx], static_column(p))
        mean_parts[eq.node] = mu

    for eq in eqs:
        simulated[eq.node] = np.empty((t_draws, n, r), dtype=float)

    eq_nodes = {e.node for e in eqs}
    for t in range(t_draws):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(t,)))
        for eq in eqs:
            mu = np.repeat(mean_parts[eq.node][t][:, None], r, axis=1)  # (N, R)
            for p, b_idx in zip(eq.parents, eq.beta_idx):
                if p in eq_nodes:
                    mu = mu + pooled[t, b_idx] * simulated[p][t]
            sigma = pooled[t, eq.sigma_idx]
            eps = rng.standard_normal((n, r))
            simulated[eq.node][t] = mu + sigma * eps
    return simulated


def _summarize(draws: np.ndarray, target: str, scenario: str, ci_level: float = 0.9) -> PredictiveSummary:
    flat = draws.reshape(-1)
    lo, hi = np.quantile(flat, [(1 - ci_level) / 2, 1 - (1 - ci_level) / 2])
    return PredictiveSummary(
        target=target,
        mean=float(flat.mean()),
        sd=float(flat.std(ddof=1)) if flat.size > 1 else 0.0,
        ci_low=float(lo),
        ci_high=float(hi),
        draw_count=int(flat.size),
        scenario=scenario,
    )


def simulate(
    posterior: PosteriorSamples,
    data: ScoredDataset,
    scenario: Scenario,
    draws_per_sample: int = 1,
    seed: int = 0,
    graph: AcceptanceGraph | None = None,
) -> dict[str, PredictiveSummary]:
    """Posterior-predictive summaries of BI and USE under a scenario.

    Raw-scale interventions are converted to z via the dataset's column
    stats.  Refuses posteriors whose graph/dataset hashes do not match the
    supplied inputs.
    """
    g = graph or default_graph()
    _check_hashes(posterior, data, g)
    z_overrides = _interventions_to_z(scenario, data, g)
    draws = _simulate_draws(posterior, data, z_overrides, draws_per_sample, seed)
    return {node: _summarize(d, node, scenario.name) for node, d in draws.items()}


def baseline(
    posterior: PosteriorSamples,
    data: ScoredDataset,
    draws_per_sample: int = 1,
    seed: int = 0,
    graph: AcceptanceGraph | None = None,
) -> dict[str, PredictiveSummary]:
    """simulate() with the empty scenario."""
    return simulate(posterior, data, BASELINE, draws_per_sample, seed, graph)


def compare(
    posterior: PosteriorSamples,
    data: ScoredDataset,
    scenarios: list[Scenario],
    draws_per_sample: int = 1,
    seed: int = 0,
    graph: AcceptanceGraph | None = None,
) -> list[dict[str, PredictiveSummary]]:
    """One row of per-target summaries per scenario.

    Every row uses the same seed (common random numbers), so each row
    equals a standalone simulate() call with that seed.
    """
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise DataFormatError("duplicate scenario names in comparison")
    return [simulate(posterior, data, s, draws_per_sample, seed, graph) for s in scenarios]


def rank(
    posterior: PosteriorSamples,
    data: ScoredDataset,
    scenarios: list[Scenario],
    draws_per_sample: int = 1,
    seed: int = 0,
    graph: AcceptanceGraph | None = None,
) -> RankingResult:
    """Rank scenarios by expected USE gain over the baseline.

    Gains are paired per predictive draw (shared substreams), so identical
    scenarios tie exactly; ties break by scenario name.  Also reports the
    fraction of paired draws with a positive gain.
    """
    if not scenarios:
        raise DataFormatError("rank needs at least one scenario")
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise DataFormatError("duplicate scenario names in ranking")

    g = graph or default_graph()
    _check_hashes(posterior, data, g)
    base_draws = _simulate_draws(posterior, data, {}, draws_per_sample, seed)
    base_summaries = {node: _summarize(d, node, BASELINE.name) for node, d in base_draws.items()}
    if "USE" not in base_draws:
        raise DataFormatError("graph has no USE equation to rank on")

    entries = []
    for s in scenarios:
        overrides = _interventions_to_z(s, data, g)
        draws = _simulate_draws(posterior, data, overrides, draws_per_sample, seed)
        gains = (draws["USE"] - base_draws["USE"]).reshape(-1)
        lo, hi = np.quantile(gains, [0.05, 0.95])
        entries.append(
            RankedScenario(
                name=s.name,
                expected_gain=float(gains.mean()),
                gain_ci_low=float(lo),
                gain_ci_high=float(hi),
                prob_improvement=float(np.mean(gains > 0)),
                use=_summarize(draws["USE"], "USE", s.name),
                bi=_summarize(draws["BI"], "BI", s.name) if "BI" in draws else _summarize(draws["USE"], "USE", s.name),
            )
        )
    entries.sort(key=lambda e: (-e.expected_gain, e.name))
    return RankingResult(baseline=base_summaries, entries=tuple(entries))


def point_mass_posterior(
    values: dict[str, float],
    graph: AcceptanceGraph | None = None,
    data: ScoredDataset | None = None,
) -> PosteriorSamples:
    """A degenerate posterior with every draw equal to ``values``.

    Missing structural parameters default to zero.  Useful for worked
    examples and tests where effects must be exact.
    """
    g = graph or default_graph()
    names = structural_parameter_names(g, skip=data.degenerate if data is not None else ())
    unknown = set(values) - set(names)
    if unknown:
        raise DataFormatError(f"unknown parameters {sorted(unknown)}")
    vec = np.array([values.get(n, 0.0) for n in names], dtype=float)
    return PosteriorSamples(
        names=names,
        draws=vec.reshape(1, 1, -1),
        seed=0,
        acceptance=(1.0,),
        positive=tuple(n.startswith("sigma[") for n in names),
        graph_hash=graph_hash(g),
        dataset_hash=dataset_hash(data) if data is not None else "",
        instrument_hash=data.instrument_id if data is not None else "",
    )


def comparison_table(rows: list[dict[str, PredictiveSummary]]) -> str:
    """Plain-text aligned table for compare() output."""
    header = f"{'scenario':<24} {'target':<6} {'mean':>9} {'sd':>9} {'ci90 low':>10} {'ci90 high':>10}"
    lines = [header, "-" * len(header)]
    for row in rows:
        for target in sorted(row):
            s = row[target]
            lines.append(
                f"{s.scenario:<24} {s.target:<6} {s.mean:>9.4f} {s.sd:>9.4f} {s.ci_low:>10.4f} {s.ci_high:>10.4f}"
            )
    return "\n".join(lines)
