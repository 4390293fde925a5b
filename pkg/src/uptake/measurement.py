"""Optional congeneric measurement layer (latent scores instead of parcels).

Per construct, items load on one latent factor:

    y_ij = nu_j + lambda_j * s_i + eps_ij,   lambda_1 = 1,  s_i ~ Normal(0, tau)

The latent scores are integrated out analytically, so each construct's
items are jointly Normal with covariance tau^2 * lambda lambda' + diag(psi^2)
and the small per-construct posterior (intercepts, free loadings, item
noises, latent sd) is sampled with the same random-walk machinery as the
structural model.  Scoring then replaces item-mean parcels with regression
factor scores.  Disabled by default; the default pipeline never imports
this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError
from .inference import DensityModel, SamplerConfig, sample_posterior
from .model import InstrumentSpec, default_instrument, instrument_hash
from .priors import LOG_2PI
from .survey import ColumnStats, ScoredDataset, SurveyResponse, apply_missing_policy, reverse_code, score_constructs


@dataclass(frozen=True)
class ConstructMeasurement:
    """Posterior-mean measurement parameters for one construct."""

    construct_id: str
    item_ids: tuple[str, ...]
    intercepts: np.ndarray  # nu, per item
    loadings: np.ndarray  # lambda, per item (first fixed to 1)
    item_noise_sds: np.ndarray  # psi, per item
    latent_sd: float  # tau

    def factor_scores(self, items: np.ndarray) -> np.ndarray:
        """Regression scores E[s | y]: tau^2 lambda' Sigma^-1 (y - nu)."""
        lam = self.loadings
        cov = self.latent_sd**2 * np.outer(lam, lam) + np.diag(self.item_noise_sds**2)
        weights = self.latent_sd**2 * np.linalg.solve(cov, lam)
        return (items - self.intercepts) @ weights


def _item_matrix(
    responses: list[SurveyResponse], inst: InstrumentSpec, construct_id: str
) -> tuple[np.ndarray, tuple[str, ...]]:
    items = inst.items_for(construct_id)
    ids = tuple(it.id for it in items)
    rows = []
    for resp in responses:
        row = []
        for it in items:
            v = resp.answers[it.id]
            row.append(reverse_code(v, inst.scale_min, inst.scale_max) if it.reverse_coded else v)
        rows.append(row)
    return np.array(rows, dtype=float), ids


def _measurement_model(y: np.ndarray, construct_id: str, scale_mid: float) -> DensityModel:
    n, j = y.shape
    names: list[str] = [f"nu[{construct_id}.{k+1}]" for k in range(j)]
    names += [f"lambda[{construct_id}.{k+1}]" for k in range(1, j)]
    names += [f"psi[{construct_id}.{k+1}]" for k in range(j)]
    names += [f"tau[{construct_id}]"]
    positive = tuple(n_.startswith(("psi[", "tau[")) for n_ in names)

    nu_sl = slice(0, j)
    lam_sl = slice(j, 2 * j - 1)
    psi_sl = slice(2 * j - 1, 3 * j - 1)
    tau_i = 3 * j - 1

    def log_density(u: np.ndarray) -> float:
        nu = u[nu_sl]
        lam = np.concatenate([[1.0], u[lam_sl]])
        log_psi = u[psi_sl]
        psi = np.exp(log_psi)
        log_tau = u[tau_i]
        tau = math.exp(log_tau)
        # priors: nu ~ N(mid, 2); free loadings ~ N(1, 1); psi, tau ~ HalfNormal(2)
        lp = -0.5 * float((((nu - scale_mid) / 2.0) ** 2).sum()) - j * (0.5 * LOG_2PI + math.log(2.0))
        lp += float(-0.5 * ((u[lam_sl] - 1.0) ** 2).sum()) - (j - 1) * 0.5 * LOG_2PI
        hn = 0.5 * math.log(2.0) - 0.5 * LOG_2PI - math.log(2.0)
        lp += float(j * hn - 0.5 * ((psi / 2.0) ** 2).sum() + log_psi.sum())
        lp += hn - 0.5 * (tau / 2.0) ** 2 + log_tau
        cov = tau * tau * np.outer(lam, lam) + np.diag(psi * psi)
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            return -math.inf
        dev = y - nu
        w = np.linalg.solve(chol, dev.T)
        lp += -0.5 * n * j * LOG_2PI - n * float(np.log(np.diag(chol)).sum()) - 0.5 * float((w * w).sum())
        return lp

    def sample_initial(rng: np.random.Generator) -> np.ndarray:
        u = np.empty(len(names))
        u[nu_sl] = y.mean(axis=0) + 0.1 * rng.standard_normal(j)
        u[lam_sl] = 1.0 + 0.1 * rng.standard_normal(j - 1)
        u[psi_sl] = np.log(np.maximum(y.std(axis=0, ddof=1), 0.3)) + 0.1 * rng.standard_normal(j)
        u[tau_i] = math.log(max(float(y.std(ddof=1)), 0.3)) + 0.1 * rng.standard_normal()
        return u

    return DensityModel(
        names=tuple(names),
        positive=positive,
        log_density=log_density,
        sample_initial=sample_initial,
    )


def fit_measurement(
    responses: list[SurveyResponse],
    instrument: InstrumentSpec | None = None,
    construct_ids: tuple[str, ...] | None = None,
    seed: int = 0,
    chains: int = 2,
    warmup_draws: int = 400,
    kept_draws: int = 400,
) -> dict[str, ConstructMeasurement]:
    """Fit the congeneric model per construct; returns posterior means.

    Constructs with a single item keep that item verbatim (loading 1,
    noise 0 is not estimable), so they fall back to the parcel score.
    """
    inst = instrument or default_instrument()
    targets = construct_ids or inst.measurable_constructs()
    fits: dict[str, ConstructMeasurement] = {}
    mid = (inst.scale_min + inst.scale_max) / 2.0
    for idx, construct in enumerate(targets):
        items = inst.items_for(construct)
        if len(items) < 2:
            continue
        y, ids = _item_matrix(responses, inst, construct)
        model = _measurement_model(y, construct, mid)
        cfg = SamplerConfig(
            chains=chains,
            warmup_draws=warmup_draws,
            kept_draws=kept_draws,
            seed=seed * 1000 + idx,
            initial_step_scale=0.2,
        )
        samples = sample_posterior(model, cfg)
        means = samples.pooled().mean(axis=0)
        by_name = dict(zip(samples.names, means))
        j = len(ids)
        fits[construct] = ConstructMeasurement(
            construct_id=construct,
            item_ids=ids,
            intercepts=np.array([by_name[f"nu[{construct}.{k+1}]"] for k in range(j)]),
            loadings=np.array(
                [1.0] + [by_name[f"lambda[{construct}.{k+1}]"] for k in range(1, j)]
            ),
            item_noise_sds=np.array([by_name[f"psi[{construct}.{k+1}]"] for k in range(j)]),
            latent_sd=float(by_name[f"tau[{construct}]"]),
        )
    return fits


def latent_scores(
    responses: list[SurveyResponse],
    instrument: InstrumentSpec | None = None,
    policy: str = "per-construct-item-mean",
    seed: int = 0,
    fits: dict[str, ConstructMeasurement] | None = None,
) -> ScoredDataset:
    """Score constructs with regression factor scores instead of parcels.

    The raw column is the factor score mapped to the first item's metric
    (nu_1 + s); z is its standardization, so raw<->z conversion stays
    coherent for interventions.
    """
    inst = instrument or default_instrument()
    kept, warnings = apply_missing_policy(responses, inst, policy)
    if not kept:
        raise DataFormatError("no respondents remain after missing-data policy")
    measurement = fits or fit_measurement(kept, inst, seed=seed)
    parcel = score_constructs(kept, inst, policy)

    raw = np.array(parcel.raw, copy=True)
    for construct, fit in measurement.items():
        y, _ = _item_matrix(kept, inst, construct)
        scores = fit.factor_scores(y)
        raw[:, parcel.column(construct)] = fit.intercepts[0] + scores

    z = np.zeros_like(raw)
    stats: dict[str, ColumnStats] = {}
    degenerate: list[str] = []
    for jcol, construct in enumerate(parcel.constructs):
        mean = float(raw[:, jcol].mean())
        sd = float(raw[:, jcol].std(ddof=1)) if raw.shape[0] > 1 else 0.0
        stats[construct] = ColumnStats(mean=mean, sd=sd)
        if sd > 0:
            z[:, jcol] = (raw[:, jcol] - mean) / sd
        else:
            degenerate.append(construct)

    return ScoredDataset(
        respondents=parcel.respondents,
        waves=parcel.waves,
        constructs=parcel.constructs,
        raw=raw,
        z=z,
        stats=stats,
        scale_min=inst.scale_min,
        scale_max=inst.scale_max,
        instrument_id=instrument_hash(inst),
        degenerate=tuple(degenerate),
        provenance={"policy": policy, "scoring": "latent", "seed": seed, "warnings": warnings},
    )
