"""Synthetic survey generation for fixtures and recovery checks.

Two levels: ``synthetic_dataset`` builds a ScoredDataset directly from the
structural equations (and reports the implied ground truth after column
standardization, so recovery tests compare against exact values);
``generate_responses`` goes all the way down to integer Likert item
answers for exercising the parsing/scoring pipeline and the CLI fixture.
"""

from __future__ import annotations

import numpy as np

from .model import AcceptanceGraph, InstrumentSpec, default_graph, default_instrument, instrument_hash
from .survey import ColumnStats, ScoredDataset, SurveyResponse

#: Ground-truth coefficients used by the bundled fixture: technology
#: compatibility dominates intention, intention dominates use.
FIXTURE_TRUTH = {
    "beta[PE->BI]": 0.30,
    "beta[EE->BI]": 0.10,
    "beta[SI->BI]": 0.15,
    "beta[FC->BI]": 0.15,
    "beta[HM->BI]": 0.10,
    "beta[HB->BI]": 0.20,
    "beta[TC->BI]": 0.60,
    "beta[PI->BI]": 0.05,
    "beta[CT->BI]": -0.15,
    "beta[TR->BI]": 0.25,
    "sigma[BI]": 0.50,
    "beta[BI->USE]": 0.70,
    "beta[FC->USE]": 0.10,
    "beta[HB->USE]": 0.20,
    "sigma[USE]": 0.50,
}


def _standardize(x: np.ndarray) -> np.ndarray:
    return (x - x.mean(axis=0)) / x.std(axis=0, ddof=1)


def synthetic_dataset(
    truth: dict[str, float],
    n: int = 200,
    seed: int = 0,
    graph: AcceptanceGraph | None = None,
    scale: tuple[int, int] = (1, 7),
) -> tuple[ScoredDataset, dict[str, float]]:
    """Simulate standardized construct scores from known parameters.

    Predictor columns are exactly standardized; outcome columns are
    generated from the equations and then standardized, so the returned
    implied-truth dict rescales the generating parameters accordingly
    (the achievable exact values on the standardized data).
    """
    g = graph or default_graph()
    rng = np.random.default_rng(seed)
    predictors = g.predictors()
    cols: dict[str, np.ndarray] = {}
    x = rng.standard_normal((n, len(predictors)))
    x = _standardize(x)
    for j, p in enumerate(predictors):
        cols[p] = x[:, j]

    implied = dict(truth)
    for node in g.topological_order():
        parents = g.parents(node)
        if not parents:
            continue
        alpha = truth.get(f"alpha[{node}]", 0.0)
        sigma = truth.get(f"sigma[{node}]", 0.5)
        mu = np.full(n, alpha)
        for p in parents:
            mu = mu + truth.get(f"beta[{p}->{node}]", 0.0) * cols[p]
        raw_col = mu + sigma * rng.standard_normal(n)
        m, s = raw_col.mean(), raw_col.std(ddof=1)
        cols[node] = (raw_col - m) / s
        # implied exact parameters after standardizing this column
        implied[f"alpha[{node}]"] = (alpha - m) / s
        implied[f"sigma[{node}]"] = sigma / s
        for p in parents:
            implied[f"beta[{p}->{node}]"] = truth.get(f"beta[{p}->{node}]", 0.0) / s

    order = tuple(c.id for c in g.nodes)
    z = np.column_stack([cols[c] for c in order])
    lo, hi = scale
    mid, spread = (lo + hi) / 2.0, (hi - lo) / 6.0
    raw = np.clip(mid + spread * z, lo, hi)
    stats = {
        c: ColumnStats(mean=float(raw[:, j].mean()), sd=float(raw[:, j].std(ddof=1)))
        for j, c in enumerate(order)
    }
    ds = ScoredDataset(
        respondents=tuple(f"r{i+1}" for i in range(n)),
        waves=tuple("w1" for _ in range(n)),
        constructs=order,
        raw=raw,
        z=z,
        stats=stats,
        scale_min=lo,
        scale_max=hi,
        instrument_id=instrument_hash(default_instrument()),
        provenance={"policy": "synthetic", "seed": seed},
    )
    return ds, implied


def generate_responses(
    truth: dict[str, float] | None = None,
    n: int = 200,
    seed: int = 1,
    wave: str = "w1",
    instrument: InstrumentSpec | None = None,
    graph: AcceptanceGraph | None = None,
    construct_shift: dict[str, float] | None = None,
) -> list[SurveyResponse]:
    """Integer Likert responses consistent with the structural model.

    Construct levels follow the structural equations on a latent z scale,
    are mapped onto the instrument scale, and items scatter around the
    construct level.  ``construct_shift`` moves selected constructs'
    latent means (e.g. to make compatibility scores low for demos).
    """
    t = truth or FIXTURE_TRUTH
    g = graph or default_graph()
    inst = instrument or default_instrument()
    rng = np.random.default_rng(seed)
    shift = construct_shift or {}

    predictors = g.predictors()
    cols: dict[str, np.ndarray] = {}
    for p in predictors:
        cols[p] = rng.standard_normal(n) + shift.get(p, 0.0)
    for node in g.topological_order():
        parents = g.parents(node)
        if not parents:
            continue
        mu = np.full(n, t.get(f"alpha[{node}]", 0.0))
        for p in parents:
            mu = mu + t.get(f"beta[{p}->{node}]", 0.0) * cols[p]
        cols[node] = mu + t.get(f"sigma[{node}]", 0.5) * rng.standard_normal(n) + shift.get(node, 0.0)

    lo, hi = inst.scale_min, inst.scale_max
    mid, spread = (lo + hi) / 2.0, (hi - lo) / 6.0
    responses = []
    for i in range(n):
        answers: dict[str, float] = {}
        for item in inst.items:
            level = mid + spread * cols[item.construct_id][i]
            noisy = level + 0.35 * rng.standard_normal()
            value = int(np.clip(round(noisy), lo, hi))
            if item.reverse_coded:
                value = lo + hi - value
            answers[item.id] = value
        responses.append(SurveyResponse(respondent_id=f"r{i+1:03d}", wave=wave, answers=answers))
    return responses


def responses_to_csv(responses: list[SurveyResponse]) -> str:
    lines = ["respondent_id,wave,item_id,value"]
    for resp in responses:
        for item_id, value in resp.answers.items():
            v = int(value) if float(value) == int(value) else value
            lines.append(f"{resp.respondent_id},{resp.wave},{item_id},{v}")
    return "\n".join(lines) + "\n"
