"""Prior specifications for the adjustment models.

Normal priors are mean-variance; gamma priors are shape-scale. The four
measurement-error precision priors (uninformative, then increasingly
confident assertions of large error) are the experiment's key knob.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError
from .rng import GammaParams

__all__ = [
    "NormalPrior",
    "LogNormalPrior",
    "PriorSet",
    "TAU_E_PRIORS",
    "PRIOR_VARIANT_ORDER",
    "linear_priors",
    "logistic_priors",
]


@dataclass(frozen=True)
class NormalPrior:
    mean: float
    variance: float

    def __post_init__(self):
        if not (self.variance > 0):
            raise ParameterError(f"prior variance must be > 0, got {self.variance}")


@dataclass(frozen=True)
class LogNormalPrior:
    """Lognormal prior: log of the parameter is N(log_mean, log_variance)."""

    log_mean: float
    log_variance: float

    def __post_init__(self):
        if not (self.log_variance > 0):
            raise ParameterError(f"prior variance must be > 0, got {self.log_variance}")


# Measurement-error precision priors, in table order: mean/variance
# (1, 10), (1, 1), (0.5, 0.5), (0.05, 0.05).
TAU_E_PRIORS: dict[str, GammaParams] = {
    "uninformative": GammaParams(0.1, 10.0),
    "typeA": GammaParams(1.0, 1.0),
    "typeB": GammaParams(0.5, 1.0),
    "typeC": GammaParams(0.05, 1.0),
}

PRIOR_VARIANT_ORDER = ("uninformative", "typeA", "typeB", "typeC")


@dataclass(frozen=True)
class PriorSet:
    """Full prior specification for one disease-model variant.

    coeff0/coeff are the intercept/slope priors (beta for the linear model,
    alpha for the logistic). tau_eps is the linear residual precision and
    must be None for the logistic model.
    """

    coeff0: NormalPrior
    coeff: NormalPrior
    mu_x: NormalPrior | LogNormalPrior
    tau_x: GammaParams
    tau_e: GammaParams
    tau_eps: GammaParams | None = None


def _resolve_tau_e(tau_e: str | GammaParams) -> GammaParams:
    if isinstance(tau_e, GammaParams):
        return tau_e
    try:
        return TAU_E_PRIORS[tau_e]
    except KeyError:
        raise ParameterError(
            f"unknown tau_e prior variant {tau_e!r}; expected one of {PRIOR_VARIANT_ORDER}"
        ) from None


def linear_priors(
    tau_e: str | GammaParams = "uninformative",
    mu_x_normal: bool = False,
    lognormal_reads_precision: bool = False,
) -> PriorSet:
    """Priors for the linear disease model.

    Replication default keeps the lognormal prior on the exposure location
    (which confines it to positive values); ``mu_x_normal`` swaps in a
    N(0, 100) prior instead. ``lognormal_reads_precision`` selects the
    alternative reading of the lognormal prior's second parameter as a
    precision rather than a variance.
    """
    if mu_x_normal:
        mu_x: NormalPrior | LogNormalPrior = NormalPrior(0.0, 100.0)
    elif lognormal_reads_precision:
        mu_x = LogNormalPrior(0.0, 1.0 / 100.0)
    else:
        mu_x = LogNormalPrior(0.0, 100.0)
    return PriorSet(
        coeff0=NormalPrior(0.0, 100.0),
        coeff=NormalPrior(0.0, 100.0),
        mu_x=mu_x,
        tau_x=GammaParams(0.01, 10.0),
        tau_e=_resolve_tau_e(tau_e),
        tau_eps=GammaParams(0.01, 10.0),
    )


def logistic_priors(tau_e: str | GammaParams = "uninformative") -> PriorSet:
    """Priors for the logistic disease model."""
    return PriorSet(
        coeff0=NormalPrior(0.0, 10.0),
        coeff=NormalPrior(0.0, 10.0),
        mu_x=NormalPrior(0.0, 10.0),
        tau_x=GammaParams(0.1, 10.0),
        tau_e=_resolve_tau_e(tau_e),
        tau_eps=None,
    )
