"""Convergence diagnostics: split R-hat and autocorrelation-based ESS.

Split R-hat halves every chain and compares between-half to within-half
variance.  ESS combines within-chain autocovariances in the usual
between/within mixture and truncates the autocorrelation sum at the first
negative paired sum (Geyer's initial positive sequence).  Constant draws
are flagged as degenerate rather than reported as infinitely efficient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .inference import PosteriorSamples


@dataclass(frozen=True)
class Diagnostics:
    names: tuple[str, ...]
    rhat: dict[str, float]
    ess: dict[str, float]
    acceptance: tuple[float, ...]
    degenerate: tuple[str, ...] = ()

    def max_rhat(self) -> float | None:
        vals = [v for n, v in self.rhat.items() if n not in self.degenerate]
        return max(vals) if vals else None

    def min_ess(self) -> float | None:
        vals = [v for n, v in self.ess.items() if n not in self.degenerate]
        return min(vals) if vals else None

    def converged(self, rhat_threshold: float = 1.05, ess_threshold: float = 100.0) -> bool:
        worst_rhat = self.max_rhat()
        worst_ess = self.min_ess()
        if worst_rhat is not None and worst_rhat > rhat_threshold:
            return False
        if worst_ess is not None and worst_ess < ess_threshold:
            return False
        return True

    def to_summary(self, rhat_threshold: float = 1.05, ess_threshold: float = 100.0) -> dict:
        return {
            "perParameter": {
                n: {
                    "rhat": None if np.isnan(self.rhat[n]) else float(self.rhat[n]),
                    "ess": None if np.isnan(self.ess[n]) else float(self.ess[n]),
                }
                for n in self.names
            },
            "rhatMax": self.max_rhat(),
            "essMin": self.min_ess(),
            "acceptanceRates": [float(a) for a in self.acceptance],
            "degenerate": list(self.degenerate),
            "converged": self.converged(rhat_threshold, ess_threshold),
        }


def split_chains(draws: np.ndarray) -> np.ndarray:
    """(chains, draws) -> (2*chains, draws//2); odd tail draw dropped."""
    c, d = draws.shape
    half = d // 2
    return np.concatenate([draws[:, :half], draws[:, d - half :]], axis=0)


def split_rhat(draws: np.ndarray) -> float:
    """Potential scale reduction on split chains for one parameter.

    ``draws`` has shape (chains, draws).  Returns 1.0 when every chain is
    the same constant (a converged point mass), inf when chains sit at
    different constants, nan when chains are too short.
    """
    if draws.ndim != 2 or draws.shape[0] < 2:
        raise ValueError("need draws shaped (chains >= 2, draws)")
    split = split_chains(draws)
    m, n = split.shape
    if n < 2:
        return float("nan")
    means = split.mean(axis=1)
    variances = split.var(axis=1, ddof=1)
    w = float(variances.mean())
    b = n * float(means.var(ddof=1))
    if w == 0.0:
        return 1.0 if b == 0.0 else float("inf")
    var_hat = (n - 1) / n * w + b / n
    return float(np.sqrt(var_hat / w))


def ess(draws: np.ndarray) -> float:
    """Effective sample size for one parameter across chains.

    Autocorrelations are estimated per chain, combined through the pooled
    variance estimate, and summed in consecutive pairs until the first
    negative pair.  Returns nan for constant draws (degenerate).
    """
    if draws.ndim != 2 or draws.shape[0] < 2:
        raise ValueError("need draws shaped (chains >= 2, draws)")
    split = split_chains(draws)
    m, n = split.shape
    if n < 4:
        return float("nan")
    means = split.mean(axis=1, keepdims=True)
    variances = split.var(axis=1, ddof=1)
    w = float(variances.mean())
    b = n * float(split.mean(axis=1).var(ddof=1))
    var_hat = (n - 1) / n * w + b / n
    if var_hat == 0.0 or w == 0.0:
        return float("nan")

    centered = split - means
    # per-chain autocovariance via FFT, biased (divide by n) as usual
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(centered, nfft, axis=1)
    acov = np.fft.irfft(f * np.conj(f), nfft, axis=1)[:, :n].real / n
    mean_acov = acov.mean(axis=0)

    rho = 1.0 - (w - mean_acov) / var_hat
    rho[0] = 1.0

    tau = 0.0
    max_pairs = (n - 1) // 2
    took_any = False
    for k in range(max_pairs):
        pair = rho[2 * k] + rho[2 * k + 1]
        if pair <= 0.0:
            break
        tau += pair
        took_any = True
    if not took_any:
        tau = 1.0
    tau = 2.0 * tau - 1.0
    tau = max(tau, 1.0 / (m * n))  # guard against tiny/negative tau
    total = draws.shape[0] * draws.shape[1]
    return float(min(total, m * n / tau))


def compute_diagnostics(samples: PosteriorSamples) -> Diagnostics:
    """Per-parameter split R-hat and ESS plus per-chain acceptance rates."""
    if samples.n_chains < 2:
        raise ValueError("diagnostics need at least 2 chains")
    rhat: dict[str, float] = {}
    ess_values: dict[str, float] = {}
    degenerate: list[str] = []
    for i, name in enumerate(samples.names):
        view = samples.draws[:, :, i]
        rhat[name] = split_rhat(view)
        ess_values[name] = ess(view)
        if np.isnan(ess_values[name]) or view.std() == 0.0:
            degenerate.append(name)
    return Diagnostics(
        names=samples.names,
        rhat=rhat,
        ess=ess_values,
        acceptance=samples.acceptance,
        degenerate=tuple(degenerate),
    )
