"""Exact-solution oracles the sampler is verified against.

``conjugate_posterior`` is the Normal-Normal closed form (known noise sd).
``grid_posterior`` integrates any model reduced to one or two free
parameters on a uniform grid; it reports moments on the natural scale so
the result is directly comparable to MCMC output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridBoundaryError
from .inference import DensityModel
from .priors import LOG_2PI


@dataclass(frozen=True)
class NormalPosterior:
    mean: float
    var: float

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)


def conjugate_posterior(
    prior_mean: float,
    prior_var: float,
    noise_sd: float,
    observations: Sequence[float],
) -> NormalPosterior:
    """Precision-weighted Normal update for a Gaussian mean with known noise.

    posterior precision = 1/prior_var + n/noise_sd^2
    posterior mean = (prior_mean/prior_var + n*ybar/noise_sd^2) / precision
    """
    if noise_sd <= 0:
        raise ValueError("noise sd must be positive")
    if prior_var <= 0:
        raise ValueError("prior variance must be positive")
    y = np.asarray(observations, dtype=float)
    n = y.size
    if n == 0:
        return NormalPosterior(mean=prior_mean, var=prior_var)
    precision = 1.0 / prior_var + n / (noise_sd * noise_sd)
    mean = (prior_mean / prior_var + n * float(y.mean()) / (noise_sd * noise_sd)) / precision
    return NormalPosterior(mean=mean, var=1.0 / precision)


def conjugate_model(
    prior_mean: float,
    prior_var: float,
    noise_sd: float,
    observations: Sequence[float],
    name: str = "mu",
) -> DensityModel:
    """The same conjugate problem expressed as a DensityModel for MCMC."""
    y = np.asarray(observations, dtype=float)
    n = y.size
    prior_sd = math.sqrt(prior_var)
    ssq = float(y @ y) if n else 0.0
    ysum = float(y.sum()) if n else 0.0

    def log_density(u: np.ndarray) -> float:
        mu = u[0]
        lp = -0.5 * LOG_2PI - math.log(prior_sd) - 0.5 * ((mu - prior_mean) / prior_sd) ** 2
        if n:
            lp += (
                -0.5 * n * LOG_2PI
                - n * math.log(noise_sd)
                - 0.5 * (ssq - 2.0 * mu * ysum + n * mu * mu) / (noise_sd * noise_sd)
            )
        return lp

    def sample_initial(rng: np.random.Generator) -> np.ndarray:
        return np.array([rng.normal(prior_mean, prior_sd)])

    return DensityModel(
        names=(name,),
        positive=(False,),
        log_density=log_density,
        sample_initial=sample_initial,
    )


@dataclass(frozen=True)
class GridPosterior:
    names: tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    boundary_mass: float

    def moments(self, name: str) -> tuple[float, float]:
        i = self.names.index(name)
        return (float(self.mean[i]), float(self.sd[i]))


def grid_posterior(
    model: DensityModel,
    axes: Sequence[np.ndarray],
    boundary_tolerance: float = 1e-6,
) -> GridPosterior:
    """Normalize the model's density over a uniform grid and take moments.

    ``axes`` are the unconstrained coordinates (one array per free
    parameter, uniformly spaced); moments are reported on the natural
    scale.  Raises GridBoundaryError when more than ``boundary_tolerance``
    of the mass sits on the outermost grid slices.
    """
    if model.dim != len(axes):
        raise ValueError(f"model has {model.dim} free parameters, got {len(axes)} axes")
    if not (1 <= model.dim <= 2):
        raise ValueError("grid oracle supports 1 or 2 free parameters")
    for ax in axes:
        if len(ax) < 8:
            raise ValueError("grid axes need at least 8 points")
        steps = np.diff(ax)
        if not np.allclose(steps, steps[0], rtol=1e-8, atol=0):
            raise ValueError("grid axes must be uniformly spaced")

    if model.dim == 1:
        pts = np.asarray(axes[0], dtype=float).reshape(-1, 1)
        shape = (len(axes[0]),)
    else:
        a, b = np.meshgrid(axes[0], axes[1], indexing="ij")
        pts = np.column_stack([a.ravel(), b.ravel()])
        shape = (len(axes[0]), len(axes[1]))

    logp = np.array([model.log_density(p) for p in pts]).reshape(shape)
    logz = _logsumexp(logp)
    prob = np.exp(logp - logz)
    prob /= prob.sum()

    boundary = _boundary_mass(prob)
    if boundary > boundary_tolerance:
        raise GridBoundaryError(
            f"boundary mass {boundary:.3e} exceeds {boundary_tolerance:.1e}; enlarge the grid"
        )

    flat = prob.ravel()
    values = np.column_stack([model.constrain(p) for p in pts]).T  # (points, dim)
    mean = flat @ values
    second = flat @ (values - mean) ** 2
    return GridPosterior(
        names=model.names,
        mean=mean,
        sd=np.sqrt(second),
        boundary_mass=float(boundary),
    )


def _logsumexp(a: np.ndarray) -> float:
    m = float(np.max(a))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.exp(a - m).sum()))


def _boundary_mass(prob: np.ndarray) -> float:
    if prob.ndim == 1:
        return float(prob[0] + prob[-1])
    edge = prob[0, :].sum() + prob[-1, :].sum() + prob[:, 0].sum() + prob[:, -1].sum()
    corner = prob[0, 0] + prob[0, -1] + prob[-1, 0] + prob[-1, -1]
    return float(edge - corner)
