"""Convergence assessment and posterior summarization.

R-hat is the classic potential scale reduction factor: sqrt of the pooled
variance estimate over the mean within-chain variance, with the (n-1)/n
within-chain correction. Summaries are means with equal-tailed 2.5%/97.5%
percentiles by linear interpolation of order statistics (type-7), so
implementations agree to machine precision on identical samples.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChainError, InsufficientSamplesError

__all__ = ["PosteriorSummary", "RhatReport", "rhat", "summarize", "transform_summary", "RHAT_GATE"]

RHAT_GATE = 1.1


@dataclass(frozen=True)
class PosteriorSummary:
    parameter: str
    mean: float
    p2_5: float
    p97_5: float
    n_retained: int


@dataclass(frozen=True)
class RhatReport:
    parameter: str
    rhat: float
    chain_means: tuple[float, ...]
    chain_variances: tuple[float, ...]

    @property
    def converged(self) -> bool:
        return self.rhat < RHAT_GATE


def rhat(chains, parameter: str = "") -> RhatReport:
    """Gelman-Rubin potential scale reduction factor over >= 2 equal-length
    chains."""
    arrays = [np.asarray(c, dtype=float) for c in chains]
    m = len(arrays)
    if m < 2:
        raise DegenerateChainError(f"need >= 2 chains, got {m}")
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise DegenerateChainError("chains must have equal length")
    if n < 10:
        raise DegenerateChainError(f"chains too short for R-hat, length {n}")
    means = np.array([a.mean() for a in arrays])
    variances = np.array([a.var(ddof=1) for a in arrays])
    w = float(variances.mean())
    if w <= 0.0:
        raise DegenerateChainError("zero within-chain variance")
    b = n * float(means.var(ddof=1))
    var_plus = (n - 1) / n * w + b / n
    return RhatReport(
        parameter=parameter,
        rhat=float(np.sqrt(var_plus / w)),
        chain_means=tuple(float(x) for x in means),
        chain_variances=tuple(float(x) for x in variances),
    )


def summarize(samples, parameter: str = "") -> PosteriorSummary:
    """Mean and equal-tailed 95% interval of pooled retained draws."""
    s = np.asarray(samples, dtype=float)
    if len(s) < 100:
        raise InsufficientSamplesError(f"need >= 100 draws to summarize, got {len(s)}")
    lo, hi = np.percentile(s, [2.5, 97.5], method="linear")
    return PosteriorSummary(
        parameter=parameter,
        mean=float(s.mean()),
        p2_5=float(lo),
        p97_5=float(hi),
        n_retained=len(s),
    )


def transform_summary(samples, parameter: str = "", transform=np.exp) -> PosteriorSummary:
    """Summarize a monotone transform of the draws (e.g. odds ratio from the
    logistic slope); the mean is the mean of transformed draws, not the
    transformed mean."""
    s = np.asarray(samples, dtype=float)
    if len(s) < 100:
        raise InsufficientSamplesError(f"need >= 100 draws to summarize, got {len(s)}")
    return summarize(transform(s), parameter=parameter)
