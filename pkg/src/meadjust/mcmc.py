"""Hierarchical Bayesian measurement-error adjustment by MCMC.

The model has three pieces: an outcome model (normal or Bernoulli) on the
latent true exposure, a lognormal measurement model linking observed to
true exposure, and a lognormal population model for true exposure. The
latent log exposures l_i = log X_i are sampled per subject; conjugate
blocks use Gibbs draws and the rest use adaptive random-walk Metropolis
(scales tuned during burn-in only, frozen afterwards so retained draws
come from a fixed kernel).

All acceptance decisions work on log densities; nothing is exponentiated
to linear scale, so cohorts of 10^5 subjects cannot overflow.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .cohort import Cohort
from .errors import InitializationError, ParameterError
from .naive import fit_linear, fit_logistic
from .priors import LogNormalPrior, NormalPrior, PriorSet
from .rng import GammaParams, Rng, sample_gamma

__all__ = [
    "ModelSpec",
    "McmcConfig",
    "ChainState",
    "PosteriorSamples",
    "full_conditional_coeffs_linear",
    "full_conditional_precision",
    "update_latent_exposure",
    "update_logistic_coeffs",
    "update_mu_x_tau_x",
    "run_chains",
    "initial_state",
    "sample_prior_state",
    "sample_data_given_state",
    "write_traces",
]

_EXP_CAP = 700.0  # exp argument cap; overflowing proposals reject cleanly


def _safe_exp(x):
    return np.exp(np.minimum(x, _EXP_CAP))


def _normal_logpdf(x, mean, variance):
    return -0.5 * (math.log(2.0 * math.pi * variance) + (x - mean) ** 2 / variance)


def _gamma_logpdf(x, prior: GammaParams):
    if x <= 0:
        return -math.inf
    k, th = prior.shape, prior.scale
    return (k - 1.0) * math.log(x) - x / th - math.lgamma(k) - k * math.log(th)


def _mh_accept(rng: Rng, logr: float) -> bool:
    """Metropolis decision on a log ratio; NaN (invalid both ways) rejects."""
    if logr >= 0.0:
        return True
    if math.isnan(logr):
        return False
    return math.log(1.0 - rng.uniform()) < logr


# ---------------------------------------------------------------------------
# Model specification and data view


@dataclass(frozen=True)
class ModelSpec:
    """Sampler-facing view of one adjustment problem.

    Holds only the observed exposure and the outcome; true exposures never
    enter, so the sampler cannot peek at them. ``exposure_transform``
    selects the covariate the outcome model sees: the exposure itself
    ("identity", the replication default) or its log ("log", where the
    classical attenuation factor applies and signal recovery is testable).

    ``fixed_tau_e`` and ``fix_latent_at_log_w`` pin parts of the model for
    degenerate-reduction checks (no-measurement-error limit).
    """

    kind: str  # "linear" | "logistic"
    w: np.ndarray
    outcome: np.ndarray
    priors: PriorSet
    exposure_transform: str = "identity"
    fixed_tau_e: float | None = None
    fix_latent_at_log_w: bool = False

    def __post_init__(self):
        if self.kind not in ("linear", "logistic"):
            raise ParameterError(f"unknown model kind {self.kind!r}")
        if self.exposure_transform not in ("identity", "log"):
            raise ParameterError(f"unknown exposure_transform {self.exposure_transform!r}")
        w = np.asarray(self.w, dtype=float)
        out = np.asarray(self.outcome, dtype=float)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "outcome", out)
        if len(w) != len(out):
            raise ParameterError("w and outcome must have equal length")
        if np.any(w <= 0):
            raise ParameterError("observed exposures must be strictly positive")
        if self.kind == "linear" and self.priors.tau_eps is None:
            raise ParameterError("linear model requires a tau_eps prior")
        if self.kind == "logistic":
            if not set(np.unique(out)) <= {0.0, 1.0}:
                raise ParameterError("logistic outcome must be 0/1")
        if self.fixed_tau_e is not None and not (self.fixed_tau_e > 0):
            raise ParameterError("fixed_tau_e must be > 0")

    @classmethod
    def from_cohort(
        cls,
        cohort: Cohort,
        kind: str,
        priors: PriorSet,
        exposure_transform: str = "identity",
        **kwargs,
    ) -> "ModelSpec":
        outcome = cohort.y if kind == "linear" else cohort.z
        return cls(
            kind=kind,
            w=cohort.w_obs,
            outcome=np.asarray(outcome, dtype=float),
            priors=priors,
            exposure_transform=exposure_transform,
            **kwargs,
        )

    @property
    def n(self) -> int:
        return len(self.w)


class _Data:
    """Precomputed arrays for one spec (log exposure cached)."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.w = spec.w
        self.log_w = np.log(spec.w)
        self.outcome = spec.outcome
        self.n = spec.n

    def covariate(self, l):
        if self.spec.exposure_transform == "identity":
            return _safe_exp(l)
        return l


# ---------------------------------------------------------------------------
# Chain state and adaptive proposal scales


@dataclass
class AdaptiveScale:
    """Windowed Robbins-Monro tuning of one Metropolis block's step size."""

    scale: float
    target: float
    window: int = 50
    accepted: float = 0.0
    attempts: int = 0
    rounds: int = 0
    frozen: bool = False

    def record(self, accepted, attempts):
        self.accepted += float(accepted)
        self.attempts += int(attempts)

    def end_scan(self, iteration: int):
        if self.frozen or self.attempts == 0:
            return
        if (iteration + 1) % self.window == 0:
            rate = self.accepted / self.attempts
            self.rounds += 1
            step = (rate - self.target) / math.sqrt(self.rounds)
            self.scale *= math.exp(max(-0.7, min(0.7, step)))
            self.accepted = 0.0
            self.attempts = 0


class AdaptiveCov:
    """Running proposal covariance for a multivariate Metropolis block
    (Haario-style adaptive Metropolis; frozen after burn-in)."""

    def __init__(self, dim: int, init_sd: float = 0.3):
        self.dim = dim
        self.count = 0
        self.mean = np.zeros(dim)
        self.m2 = np.zeros((dim, dim))
        self.chol = init_sd * np.eye(dim)
        self.frozen = False

    def update(self, x: np.ndarray, iteration: int):
        if self.frozen:
            return
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += np.outer(delta, x - self.mean)
        if self.count >= 100 and (iteration + 1) % 25 == 0:
            cov = self.m2 / (self.count - 1) + 1e-9 * np.eye(self.dim)
            try:
                self.chol = np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                pass

    def propose_step(self, rng: Rng, scale: float) -> np.ndarray:
        return scale * (self.chol @ rng.standard_normal(self.dim))


@dataclass
class ChainState:
    """Complete MCMC state for one chain."""

    kind: str
    coeff0: float
    coeff: float
    tau_eps: float | None
    mu_x: float
    tau_x: float
    tau_e: float
    l: np.ndarray
    rng: Rng
    iteration: int = 0
    scales: dict[str, AdaptiveScale] = field(default_factory=dict)
    struct_cov: AdaptiveCov | None = None
    accept_counts: dict[str, list] = field(default_factory=dict)

    def _count(self, block: str, accepted, attempts):
        acc = self.accept_counts.setdefault(block, [0.0, 0])
        acc[0] += float(accepted)
        acc[1] += int(attempts)
        if block in self.scales:
            self.scales[block].record(accepted, attempts)

    def acceptance_rate(self, block: str) -> float:
        acc, att = self.accept_counts.get(block, (0.0, 0))
        return acc / att if att else math.nan

    def reset_acceptance(self):
        self.accept_counts = {}


def _default_scales(spec: ModelSpec) -> dict[str, AdaptiveScale]:
    scales = {"latent": AdaptiveScale(scale=1.0, target=0.44)}
    if spec.kind == "logistic":
        scales["coeffs"] = AdaptiveScale(scale=0.5, target=0.234)
    if isinstance(spec.priors.mu_x, LogNormalPrior):
        scales["mu_x"] = AdaptiveScale(scale=0.5, target=0.44)
    scales["structural"] = AdaptiveScale(scale=1.0, target=0.234)
    return scales


def _structural_cov(spec: ModelSpec) -> AdaptiveCov:
    return AdaptiveCov(dim=3 if spec.fixed_tau_e is None else 2)


# ---------------------------------------------------------------------------
# mu_x axis helpers: the lognormal-prior variant is sampled on the log axis,
# where its prior is normal and random-walk proposals are symmetric.


def _mu_axis_value(state_mu: float, prior) -> float:
    if isinstance(prior, LogNormalPrior):
        return math.log(state_mu)
    return state_mu


def _mu_from_axis(a: float, prior) -> float:
    if isinstance(prior, LogNormalPrior):
        return math.exp(min(a, _EXP_CAP))
    return a


def _mu_axis_logprior(a: float, prior) -> float:
    if isinstance(prior, LogNormalPrior):
        return _normal_logpdf(a, prior.log_mean, prior.log_variance)
    return _normal_logpdf(a, prior.mean, prior.variance)


def _mu_logprior(mu: float, prior) -> float:
    if isinstance(prior, LogNormalPrior):
        if mu <= 0:
            return -math.inf
        return _normal_logpdf(math.log(mu), prior.log_mean, prior.log_variance) - math.log(mu)
    return _normal_logpdf(mu, prior.mean, prior.variance)


# ---------------------------------------------------------------------------
# Likelihood pieces


def _outcome_loglik_terms(state: ChainState, data: _Data, l) -> np.ndarray:
    """Per-subject outcome log likelihood at latent log exposures l.

    Overflowing linear predictors propagate to -inf terms, which reject in
    any Metropolis ratio they enter.
    """
    t = data.covariate(l)
    with np.errstate(over="ignore"):
        eta = state.coeff0 + state.coeff * t
        if state.kind == "linear":
            return -0.5 * state.tau_eps * (data.outcome - eta) ** 2
        return data.outcome * eta - np.logaddexp(0.0, eta)


def _outcome_loglik_full(state: ChainState, data: _Data, coeff0: float, coeff: float) -> float:
    t = data.covariate(state.l)
    eta = coeff0 + coeff * t
    if state.kind == "linear":
        r = data.outcome - eta
        return float(0.5 * data.n * math.log(state.tau_eps / (2.0 * math.pi)) - 0.5 * state.tau_eps * (r @ r))
    return float(data.outcome @ eta - np.logaddexp(0.0, eta).sum())


# ---------------------------------------------------------------------------
# Conjugate full conditionals


def full_conditional_coeffs_linear(state: ChainState, data: _Data):
    """Exact bivariate normal full conditional of the linear (intercept,
    slope), as (mean vector, precision matrix)."""
    if state.kind != "linear":
        raise ParameterError("coefficient full conditional is for the linear model")
    priors = data.spec.priors
    t = data.covariate(state.l)
    n = data.n
    st = float(t.sum())
    stt = float(t @ t)
    sy = float(data.outcome.sum())
    sty = float(t @ data.outcome)
    prec = state.tau_eps * np.array([[n, st], [st, stt]])
    prec[0, 0] += 1.0 / priors.coeff0.variance
    prec[1, 1] += 1.0 / priors.coeff.variance
    b = state.tau_eps * np.array([sy, sty])
    b[0] += priors.coeff0.mean / priors.coeff0.variance
    b[1] += priors.coeff.mean / priors.coeff.variance
    mean = np.linalg.solve(prec, b)
    return mean, prec


def _draw_linear_coeffs(state: ChainState, data: _Data):
    mean, prec = full_conditional_coeffs_linear(state, data)
    chol = np.linalg.cholesky(prec)
    z = state.rng.standard_normal(2)
    draw = mean + np.linalg.solve(chol.T, z)
    state.coeff0, state.coeff = float(draw[0]), float(draw[1])


def full_conditional_precision(residuals, prior: GammaParams) -> GammaParams:
    """Gamma posterior for a normal precision given its residuals.

    Shape-scale form: shape k + n/2, scale theta / (1 + theta * sum(r^2)/2).
    """
    r = np.asarray(residuals, dtype=float)
    n = len(r)
    ss = float(r @ r)
    return GammaParams(prior.shape + 0.5 * n, prior.scale / (1.0 + prior.scale * 0.5 * ss))


def _draw_precision(state: ChainState, residuals, prior: GammaParams) -> float:
    return sample_gamma(state.rng, full_conditional_precision(residuals, prior))


# ---------------------------------------------------------------------------
# Metropolis updates


def update_logistic_coeffs(state: ChainState, data: _Data):
    """Joint random-walk Metropolis on the logistic (intercept, slope)."""
    priors = data.spec.priors
    sc = state.scales["coeffs"].scale
    prop0 = state.coeff0 + sc * state.rng.standard_normal()
    prop1 = state.coeff + sc * state.rng.standard_normal()

    def log_target(c0, c1):
        lp = _normal_logpdf(c0, priors.coeff0.mean, priors.coeff0.variance)
        lp += _normal_logpdf(c1, priors.coeff.mean, priors.coeff.variance)
        return lp + _outcome_loglik_full(state, data, c0, c1)

    logr = log_target(prop0, prop1) - log_target(state.coeff0, state.coeff)
    accepted = _mh_accept(state.rng, logr)
    if accepted:
        state.coeff0, state.coeff = float(prop0), float(prop1)
    state._count("coeffs", int(accepted), 1)


def update_latent_exposure(state: ChainState, data: _Data, subject=None):
    """Random-walk Metropolis on the latent log exposures.

    All subjects update in one vectorized pass (their conditionals are
    independent given the parameters); pass ``subject`` to move one index
    only. Rejections leave entries unchanged.
    """
    idx = slice(None) if subject is None else np.atleast_1d(subject)
    l_cur = state.l[idx]
    m = len(np.atleast_1d(l_cur))
    sc = state.scales["latent"].scale
    prop = l_cur + sc * state.rng.standard_normal(m)

    log_w = data.log_w[idx]
    out = data.outcome[idx]

    def per_subject_target(l):
        t = data.covariate(l)
        with np.errstate(over="ignore"):
            eta = state.coeff0 + state.coeff * t
            if state.kind == "linear":
                ol = -0.5 * state.tau_eps * (out - eta) ** 2
            else:
                ol = out * eta - np.logaddexp(0.0, eta)
        return (
            ol
            - 0.5 * state.tau_e * (log_w - l) ** 2
            - 0.5 * state.tau_x * (l - state.mu_x) ** 2
        )

    logr = per_subject_target(prop) - per_subject_target(l_cur)
    accept = np.log(1.0 - state.rng.uniform(size=m)) < logr
    new = np.where(accept, prop, l_cur)
    state.l[idx] = new
    state._count("latent", int(accept.sum()), m)


def update_mu_x_tau_x(state: ChainState, data: _Data):
    """Exposure-population update: location then precision.

    The location is a conjugate normal draw under a normal prior and a
    random-walk Metropolis step on the log axis under the lognormal prior;
    the precision is a conjugate gamma draw on the centered residuals.
    """
    priors = data.spec.priors
    n = data.n
    l_sum = float(state.l.sum())
    if isinstance(priors.mu_x, NormalPrior):
        post_prec = 1.0 / priors.mu_x.variance + n * state.tau_x
        post_mean = (priors.mu_x.mean / priors.mu_x.variance + state.tau_x * l_sum) / post_prec
        state.mu_x = post_mean + state.rng.standard_normal() / math.sqrt(post_prec)
    else:
        a_cur = _mu_axis_value(state.mu_x, priors.mu_x)
        sc = state.scales["mu_x"].scale
        a_prop = a_cur + sc * state.rng.standard_normal()

        def log_target(a):
            mu = _mu_from_axis(a, priors.mu_x)
            dev = state.l - mu
            return _mu_axis_logprior(a, priors.mu_x) - 0.5 * state.tau_x * float(dev @ dev)

        logr = log_target(a_prop) - log_target(a_cur)
        accepted = _mh_accept(state.rng, logr)
        if accepted:
            state.mu_x = _mu_from_axis(a_prop, priors.mu_x)
        state._count("mu_x", int(accepted), 1)

    state.tau_x = _draw_precision(state, state.l - state.mu_x, priors.tau_x)


def _marginal_w_loglik(log_w, mu: float, var: float) -> float:
    dev = log_w - mu
    return float(-0.5 * len(log_w) * math.log(2.0 * math.pi * var) - 0.5 * (dev @ dev) / var)


def update_structural(state: ChainState, data: _Data):
    """Joint move on (mu_x, tau_x[, tau_e]) with the latent exposures
    re-proposed from their exact no-outcome conditional.

    The observed-exposure and population terms then cancel against the
    proposal up to the closed-form marginal of log W, so acceptance reduces
    to the marginal-likelihood, prior and outcome ratios. This traverses
    the variance-allocation ridge between measurement error and exposure
    spread that single-site Gibbs explores only diffusively.
    """
    spec = data.spec
    if spec.fix_latent_at_log_w:
        return
    priors = spec.priors
    move_tau_e = spec.fixed_tau_e is None
    sc = state.scales["structural"].scale

    a_cur = _mu_axis_value(state.mu_x, priors.mu_x)
    b_cur = math.log(state.tau_x)
    if state.struct_cov is None:
        state.struct_cov = _structural_cov(spec)
    step = state.struct_cov.propose_step(state.rng, sc)
    a_prop = a_cur + step[0]
    b_prop = b_cur + step[1]
    tau_x_prop = math.exp(min(b_prop, _EXP_CAP))
    if move_tau_e:
        c_cur = math.log(state.tau_e)
        c_prop = c_cur + step[2]
        tau_e_prop = math.exp(min(c_prop, _EXP_CAP))
    else:
        tau_e_prop = state.tau_e

    mu_prop = _mu_from_axis(a_prop, priors.mu_x)

    def theta_logprior(a, tau_x, tau_e):
        # priors on the sampled axes: gamma density plus log-Jacobian for
        # the log-parameterized precisions
        lp = _mu_axis_logprior(a, priors.mu_x)
        lp += _gamma_logpdf(tau_x, priors.tau_x) + math.log(tau_x)
        if move_tau_e:
            lp += _gamma_logpdf(tau_e, priors.tau_e) + math.log(tau_e)
        return lp

    var_cur = 1.0 / state.tau_x + 1.0 / state.tau_e
    var_prop = 1.0 / tau_x_prop + 1.0 / tau_e_prop

    # exact no-outcome conditional of l under the proposed parameters
    cond_prec = tau_e_prop + tau_x_prop
    cond_mean = (tau_e_prop * data.log_w + tau_x_prop * mu_prop) / cond_prec
    l_prop = cond_mean + state.rng.standard_normal(data.n) / math.sqrt(cond_prec)

    logr = (
        float(_outcome_loglik_terms(state, data, l_prop).sum())
        - float(_outcome_loglik_terms(state, data, state.l).sum())
        + _marginal_w_loglik(data.log_w, mu_prop, var_prop)
        - _marginal_w_loglik(data.log_w, state.mu_x, var_cur)
        + theta_logprior(a_prop, tau_x_prop, tau_e_prop)
        - theta_logprior(a_cur, state.tau_x, state.tau_e)
    )
    accepted = _mh_accept(state.rng, logr)
    if accepted:
        state.mu_x = mu_prop
        state.tau_x = tau_x_prop
        state.tau_e = tau_e_prop
        state.l = l_prop
    state._count("structural", int(accepted), 1)
    theta_now = [_mu_axis_value(state.mu_x, priors.mu_x), math.log(state.tau_x)]
    if move_tau_e:
        theta_now.append(math.log(state.tau_e))
    state.struct_cov.update(np.array(theta_now), state.iteration)


# ---------------------------------------------------------------------------
# Scan, initialization, runner


_STRUCTURAL_REPEATS = 2


def _scan(state: ChainState, data: _Data, adapt: bool):
    """One full sweep in fixed order; the order is part of the kernel."""
    spec = data.spec
    if spec.kind == "linear":
        _draw_linear_coeffs(state, data)
        resid = data.outcome - state.coeff0 - state.coeff * data.covariate(state.l)
        state.tau_eps = _draw_precision(state, resid, spec.priors.tau_eps)
    else:
        update_logistic_coeffs(state, data)
    if spec.fixed_tau_e is None:
        state.tau_e = _draw_precision(state, data.log_w - state.l, spec.priors.tau_e)
    update_mu_x_tau_x(state, data)
    if not spec.fix_latent_at_log_w:
        update_latent_exposure(state, data)
    for _ in range(_STRUCTURAL_REPEATS):
        update_structural(state, data)
    state.iteration += 1
    if adapt:
        for s in state.scales.values():
            s.end_scan(state.iteration)


def _freeze_scales(state: ChainState):
    for s in state.scales.values():
        s.frozen = True
    if state.struct_cov is not None:
        state.struct_cov.frozen = True


_COEFF_OFFSETS = (-0.5, 0.0, 0.5)


def initial_state(spec: ModelSpec, strategy: str, chain_index: int, rng: Rng) -> ChainState:
    """Build one chain's starting state.

    paper_replication starts nuisance parameters at the generation-model
    values (unit precisions, zero exposure location) with chain-specific
    coefficient offsets; naive_start anchors everything to the data via the
    naive fit and the observed log exposures. Either way the latent log
    exposures start at log W. A lognormal location prior cannot sit at
    zero, so its start is clamped positive.
    """
    data = _Data(spec)
    priors = spec.priors
    offset = _COEFF_OFFSETS[chain_index % 3] + 0.1 * (chain_index // 3)
    l0 = data.log_w.copy()

    if strategy == "paper_replication":
        coeff0, coeff = offset, offset
        if spec.kind == "logistic":
            zbar = float(np.clip(data.outcome.mean(), 1e-6, 1.0 - 1e-6)) if data.n else 0.5
            coeff0 = math.log(zbar / (1.0 - zbar)) + offset
        tau_eps = 1.0 if spec.kind == "linear" else None
        tau_x = 1.0
        tau_e = 1.0
        mu_x = 1.0 if isinstance(priors.mu_x, LogNormalPrior) else 0.0
    elif strategy == "naive_start":
        t_obs = data.w if spec.exposure_transform == "identity" else data.log_w
        if spec.kind == "linear":
            fit = fit_linear(t_obs, data.outcome)
            resid = data.outcome - fit.intercept - fit.slope * t_obs
            tau_eps = 1.0 / max(float(resid.var()), 1e-12)
        else:
            fit = fit_logistic(t_obs, data.outcome)
            tau_eps = None
        se = fit.slope_se if math.isfinite(fit.slope_se) and fit.slope_se > 0 else 0.1
        coeff0 = fit.intercept
        coeff = fit.slope + offset * 4.0 * se
        lw_var = float(data.log_w.var())
        tau_x = 1.0 / max(lw_var, 1e-6)
        tau_e = priors.tau_e.mean
        loc = float(data.log_w.mean())
        mu_x = max(loc, 0.05) if isinstance(priors.mu_x, LogNormalPrior) else loc
    else:
        raise ParameterError(f"unknown init_strategy {strategy!r}")

    if spec.fixed_tau_e is not None:
        tau_e = spec.fixed_tau_e

    state = ChainState(
        kind=spec.kind,
        coeff0=float(coeff0),
        coeff=float(coeff),
        tau_eps=tau_eps,
        mu_x=float(mu_x),
        tau_x=float(tau_x),
        tau_e=float(tau_e),
        l=l0,
        rng=rng,
        scales=_default_scales(spec),
        struct_cov=_structural_cov(spec),
    )
    _check_finite_at_init(state, data)
    return state


def _check_finite_at_init(state: ChainState, data: _Data):
    """Raise InitializationError naming the first non-finite log-posterior
    term (the logistic model is the historically fragile one)."""
    priors = data.spec.priors
    checks = [
        ("coeff0", _normal_logpdf(state.coeff0, priors.coeff0.mean, priors.coeff0.variance)),
        ("coeff", _normal_logpdf(state.coeff, priors.coeff.mean, priors.coeff.variance)),
        ("mu_x", _mu_logprior(state.mu_x, priors.mu_x)),
        ("tau_x", _gamma_logpdf(state.tau_x, priors.tau_x)),
    ]
    if data.spec.fixed_tau_e is None:
        checks.append(("tau_e", _gamma_logpdf(state.tau_e, priors.tau_e)))
    if state.kind == "linear":
        checks.append(("tau_eps", _gamma_logpdf(state.tau_eps, priors.tau_eps)))
    dev_e = data.log_w - state.l
    checks.append(("latent_exposure", -0.5 * state.tau_e * float(dev_e @ dev_e)))
    dev_x = state.l - state.mu_x
    checks.append(("latent_exposure", -0.5 * state.tau_x * float(dev_x @ dev_x)))
    checks.append(("outcome", float(_outcome_loglik_terms(state, data, state.l).sum())))
    for name, value in checks:
        if not math.isfinite(value):
            raise InitializationError(name, f"log-posterior term = {value}")


@dataclass(frozen=True)
class McmcConfig:
    n_chains: int = 3
    burn_in: int = 2000
    keep: int = 8000
    thin: int = 8
    seed: int = 0
    init_strategy: str = "paper_replication"

    def __post_init__(self):
        if self.n_chains < 1:
            raise ParameterError("n_chains must be >= 1")
        if self.burn_in < 0:
            raise ParameterError("burn_in must be >= 0")
        if self.keep < 1:
            raise ParameterError("keep must be >= 1")
        if self.thin < 1:
            raise ParameterError("thin must be >= 1")
        if self.keep % self.thin != 0:
            raise ParameterError(f"keep ({self.keep}) must be a multiple of thin ({self.thin})")
        if self.init_strategy not in ("paper_replication", "naive_start"):
            raise ParameterError(f"unknown init_strategy {self.init_strategy!r}")

    @property
    def n_retained(self) -> int:
        return self.keep // self.thin


def _param_names(spec: ModelSpec) -> list[str]:
    if spec.kind == "linear":
        names = ["beta0", "beta", "tau_eps"]
    else:
        names = ["alpha0", "alpha"]
    if spec.fixed_tau_e is None:
        names.append("tau_e")
    names += ["mu_x", "tau_x"]
    return names


def _record(state: ChainState, spec: ModelSpec) -> dict[str, float]:
    if spec.kind == "linear":
        row = {"beta0": state.coeff0, "beta": state.coeff, "tau_eps": state.tau_eps}
    else:
        row = {"alpha0": state.coeff0, "alpha": state.coeff}
    if spec.fixed_tau_e is None:
        row["tau_e"] = state.tau_e
    row["mu_x"] = state.mu_x
    row["tau_x"] = state.tau_x
    return row


@dataclass
class PosteriorSamples:
    """Retained draws, one dict of parameter arrays per chain."""

    kind: str
    param_names: list[str]
    chains: list[dict[str, np.ndarray]]
    n_retained: int
    mcmc: McmcConfig
    acceptance_rates: list[dict[str, float]]

    def chain_arrays(self, name: str) -> list[np.ndarray]:
        return [c[name] for c in self.chains]

    def pooled(self, name: str) -> np.ndarray:
        return np.concatenate(self.chain_arrays(name))


def run_chains(spec: ModelSpec, mcmc: McmcConfig, stream: tuple[int, ...] = ()) -> PosteriorSamples:
    """Run the configured chains sequentially and collect retained draws.

    Chains differ only in their coefficient starting values and RNG
    streams (derived from the master seed and the chain index, so results
    are bit-reproducible however chains are scheduled). Proposal-scale
    adaptation runs during burn-in only.
    """
    names = _param_names(spec)
    data = _Data(spec)
    chains = []
    rates = []
    for c in range(mcmc.n_chains):
        rng = Rng(mcmc.seed, stream + (c,))
        state = initial_state(spec, mcmc.init_strategy, c, rng)
        for _ in range(mcmc.burn_in):
            _scan(state, data, adapt=True)
        _freeze_scales(state)
        state.reset_acceptance()
        store = {name: np.empty(mcmc.n_retained) for name in names}
        k = 0
        for t in range(mcmc.keep):
            _scan(state, data, adapt=False)
            if (t + 1) % mcmc.thin == 0:
                row = _record(state, spec)
                for name in names:
                    store[name][k] = row[name]
                k += 1
        chains.append(store)
        rates.append({block: state.acceptance_rate(block) for block in state.accept_counts})
    return PosteriorSamples(
        kind=spec.kind,
        param_names=names,
        chains=chains,
        n_retained=mcmc.n_retained,
        mcmc=mcmc,
        acceptance_rates=rates,
    )


# ---------------------------------------------------------------------------
# Generative helpers (prior-predictive checks and the joint-distribution test)


def sample_prior_state(spec: ModelSpec, rng: Rng) -> ChainState:
    """Draw a complete state from the priors (latents from the population
    model); data arrays in spec are ignored except for their length."""
    priors = spec.priors
    coeff0 = priors.coeff0.mean + math.sqrt(priors.coeff0.variance) * rng.standard_normal()
    coeff = priors.coeff.mean + math.sqrt(priors.coeff.variance) * rng.standard_normal()
    if isinstance(priors.mu_x, LogNormalPrior):
        mu_x = math.exp(priors.mu_x.log_mean + math.sqrt(priors.mu_x.log_variance) * rng.standard_normal())
    else:
        mu_x = priors.mu_x.mean + math.sqrt(priors.mu_x.variance) * rng.standard_normal()
    tau_x = sample_gamma(rng, priors.tau_x)
    tau_e = spec.fixed_tau_e if spec.fixed_tau_e is not None else sample_gamma(rng, priors.tau_e)
    tau_eps = sample_gamma(rng, priors.tau_eps) if spec.kind == "linear" else None
    l = mu_x + rng.standard_normal(spec.n) / math.sqrt(tau_x)
    return ChainState(
        kind=spec.kind,
        coeff0=float(coeff0),
        coeff=float(coeff),
        tau_eps=tau_eps,
        mu_x=float(mu_x),
        tau_x=float(tau_x),
        tau_e=float(tau_e),
        l=l,
        rng=rng,
        scales=_default_scales(spec),
        struct_cov=_structural_cov(spec),
    )


def sample_data_given_state(state: ChainState, spec: ModelSpec, rng: Rng) -> ModelSpec:
    """Redraw (w, outcome) from the model at the current state."""
    log_w = state.l + rng.standard_normal(len(state.l)) / math.sqrt(state.tau_e)
    w = np.exp(log_w)
    t = _safe_exp(state.l) if spec.exposure_transform == "identity" else state.l
    eta = state.coeff0 + state.coeff * t
    if spec.kind == "linear":
        outcome = eta + rng.standard_normal(len(t)) / math.sqrt(state.tau_eps)
    else:
        p = 1.0 / (1.0 + np.exp(-np.clip(eta, -_EXP_CAP, _EXP_CAP)))
        outcome = (rng.uniform(size=len(t)) < p).astype(float)
    return replace(spec, w=w, outcome=outcome)


# ---------------------------------------------------------------------------
# Trace export


def write_traces(samples: PosteriorSamples, out_dir, prefix: str = "trace") -> list[str]:
    """One CSV per chain, one row per retained draw, parameter-named columns."""
    paths = []
    os.makedirs(out_dir, exist_ok=True)
    for c, chain in enumerate(samples.chains):
        path = os.path.join(os.fspath(out_dir), f"{prefix}_chain{c}.csv")
        tmp = path + ".tmp"
        with open(tmp, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(samples.param_names)
            for i in range(samples.n_retained):
                writer.writerow([repr(float(chain[name][i])) for name in samples.param_names])
        os.replace(tmp, path)
        paths.append(path)
    return paths
