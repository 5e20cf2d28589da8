"""Behavioral oracles for the Metropolis updates."""
import math

import numpy as np

import meadjust.mcmc as mcmc
from meadjust import (
    GammaParams,
    ModelSpec,
    Rng,
    fit_logistic,
    update_latent_exposure,
    update_logistic_coeffs,
    update_mu_x_tau_x,
)
from meadjust.priors import LogNormalPrior, NormalPrior, PriorSet


def _linear_spec(w, y, priors=None, **kwargs):
    priors = priors or PriorSet(
        coeff0=NormalPrior(0.0, 100.0),
        coeff=NormalPrior(0.0, 100.0),
        mu_x=NormalPrior(0.0, 10.0),
        tau_x=GammaParams(1.0, 1.0),
        tau_e=GammaParams(1.0, 1.0),
        tau_eps=GammaParams(1.0, 1.0),
    )
    return ModelSpec(kind="linear", w=np.asarray(w, float), outcome=np.asarray(y, float), priors=priors, **kwargs)


def _state(spec, rng_seed=0, **overrides):
    state = mcmc.initial_state(spec, "paper_replication", 1, Rng(rng_seed))
    for k, v in overrides.items():
        setattr(state, k, v)
    return state


def test_latent_no_error_limit_sticks_to_log_w():
    rng = np.random.default_rng(0)
    w = rng.lognormal(size=200)
    spec = _linear_spec(w, rng.normal(size=200))
    state = _state(spec, tau_e=1e12, coeff=0.0, coeff0=0.0)
    data = mcmc._Data(spec)
    for _ in range(200):
        update_latent_exposure(state, data)
    assert np.max(np.abs(state.l - data.log_w)) < 1e-5


def test_latent_single_subject_moves_only_that_index():
    rng = np.random.default_rng(1)
    w = rng.lognormal(size=20)
    spec = _linear_spec(w, rng.normal(size=20))
    state = _state(spec)
    before = state.l.copy()
    for _ in range(50):
        update_latent_exposure(state, mcmc._Data(spec), subject=3)
    changed = state.l != before
    assert changed[3]
    assert not changed[np.arange(20) != 3].any()


def test_latent_shrinkage_oracle():
    """With the outcome term flat (slope 0) and tau_e = tau_x, the latent
    stationary law is N((log w + mu_x)/2, 1/(tau_e+tau_x)) per subject."""
    rng = np.random.default_rng(2)
    w = rng.lognormal(size=400)
    spec = _linear_spec(w, np.zeros(400))
    state = _state(spec, coeff=0.0, coeff0=0.0, tau_e=1.0, tau_x=1.0, mu_x=0.8)
    data = mcmc._Data(spec)
    sums = np.zeros(400)
    sq_sums = np.zeros(400)
    n_sweeps = 6000
    for _ in range(500):
        update_latent_exposure(state, data)
    for _ in range(n_sweeps):
        update_latent_exposure(state, data)
        sums += state.l
        sq_sums += state.l**2
    avg = sums / n_sweeps
    oracle = 0.5 * (data.log_w + 0.8)
    assert np.mean(np.abs(avg - oracle)) < 0.03
    var = sq_sums / n_sweeps - avg**2
    assert abs(var.mean() - 0.5) < 0.05


def test_logistic_coeffs_prior_recovery():
    """With no data the coefficient chain samples its N(0,10) prior."""
    priors = PriorSet(
        coeff0=NormalPrior(0.0, 10.0),
        coeff=NormalPrior(0.0, 10.0),
        mu_x=NormalPrior(0.0, 10.0),
        tau_x=GammaParams(1.0, 1.0),
        tau_e=GammaParams(1.0, 1.0),
        tau_eps=None,
    )
    spec = ModelSpec(kind="logistic", w=np.ones(0), outcome=np.zeros(0), priors=priors)
    state = mcmc.ChainState(
        kind="logistic",
        coeff0=0.0,
        coeff=0.0,
        tau_eps=None,
        mu_x=0.0,
        tau_x=1.0,
        tau_e=1.0,
        l=np.zeros(0),
        rng=Rng(3),
        scales=mcmc._default_scales(spec),
    )
    data = mcmc._Data(spec)
    for i in range(20_000):  # adaptation phase
        update_logistic_coeffs(state, data)
        state.iteration += 1
        state.scales["coeffs"].end_scan(state.iteration)
    state.scales["coeffs"].frozen = True
    draws = np.empty(100_000)
    for i in range(len(draws)):
        update_logistic_coeffs(state, data)
        draws[i] = state.coeff
    assert abs(draws.mean()) < 0.1
    assert abs(draws.var() - 10.0) < 1.0


def test_logistic_coeffs_bvm_vs_mle():
    """Strong synthetic data with exposure known exactly: posterior mean of
    the slope within 3 posterior SDs of the frequentist MLE."""
    rng = np.random.default_rng(4)
    x = rng.lognormal(sigma=0.8, size=10_000)
    eta = -2.0 + 1.0 * x
    z = (rng.random(10_000) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    priors = PriorSet(
        coeff0=NormalPrior(0.0, 100.0),
        coeff=NormalPrior(0.0, 100.0),
        mu_x=NormalPrior(0.0, 10.0),
        tau_x=GammaParams(1.0, 1.0),
        tau_e=GammaParams(1.0, 1.0),
        tau_eps=None,
    )
    spec = ModelSpec(kind="logistic", w=x, outcome=z, priors=priors)
    state = _state(spec, rng_seed=5)
    state.l = np.log(x)  # exposure known: latent pinned at truth
    data = mcmc._Data(spec)
    for _ in range(3000):
        update_logistic_coeffs(state, data)
        state.iteration += 1
        state.scales["coeffs"].end_scan(state.iteration)
    state.scales["coeffs"].frozen = True
    draws = np.empty(20_000)
    for i in range(len(draws)):
        update_logistic_coeffs(state, data)
        draws[i] = state.coeff
    fit = fit_logistic(x, z)
    assert fit.converged
    post_sd = draws.std()
    assert abs(draws.mean() - fit.slope) < 3.0 * post_sd
    rate = state.acceptance_rate("coeffs")
    assert 0.15 <= rate <= 0.45


def test_mu_tau_prior_recovery_no_data():
    spec = _linear_spec(np.ones(0), np.zeros(0))
    state = mcmc.ChainState(
        kind="linear",
        coeff0=0.0,
        coeff=0.0,
        tau_eps=1.0,
        mu_x=0.0,
        tau_x=1.0,
        tau_e=1.0,
        l=np.zeros(0),
        rng=Rng(6),
        scales=mcmc._default_scales(spec),
    )
    data = mcmc._Data(spec)
    mus = np.empty(30_000)
    taus = np.empty(30_000)
    for i in range(len(mus)):
        update_mu_x_tau_x(state, data)
        mus[i] = state.mu_x
        taus[i] = state.tau_x
    # prior: mu ~ N(0, 10), tau ~ Gamma(1, 1)
    assert abs(mus.mean()) < 4.0 * math.sqrt(10.0 / len(mus))
    assert abs(mus.var() - 10.0) < 0.5
    assert abs(taus.mean() - 1.0) < 0.05
    assert abs(taus.var() - 1.0) < 0.1


def test_mu_tau_conjugate_oracle_strong_data():
    rng = np.random.default_rng(7)
    l = rng.normal(0.3, 1.0, size=100_000)
    spec = _linear_spec(np.exp(l), np.zeros(100_000))
    state = _state(spec, rng_seed=8)
    state.l = l.copy()
    data = mcmc._Data(spec)
    mus, taus = [], []
    for i in range(600):
        update_mu_x_tau_x(state, data)
        if i >= 100:
            mus.append(state.mu_x)
            taus.append(state.tau_x)
    assert abs(np.mean(mus) - 0.3) < 0.02
    assert abs(np.mean(taus) - 1.0) < 0.05


def test_mu_lognormal_prior_washout_matches_normal():
    """1e5-strong data at a positive location: the lognormal-prior variant
    agrees with the normal-prior variant to MC error."""
    rng = np.random.default_rng(9)
    l = rng.normal(0.3, 1.0, size=100_000)
    results = {}
    for prior in (NormalPrior(0.0, 100.0), LogNormalPrior(0.0, 100.0)):
        priors = PriorSet(
            coeff0=NormalPrior(0.0, 100.0),
            coeff=NormalPrior(0.0, 100.0),
            mu_x=prior,
            tau_x=GammaParams(1.0, 1.0),
            tau_e=GammaParams(1.0, 1.0),
            tau_eps=GammaParams(1.0, 1.0),
        )
        spec = _linear_spec(np.exp(l), np.zeros(100_000), priors=priors)
        state = _state(spec, rng_seed=10)
        state.l = l.copy()
        if isinstance(prior, LogNormalPrior):
            state.mu_x = 1.0
        data = mcmc._Data(spec)
        mus = []
        for i in range(2500):
            update_mu_x_tau_x(state, data)
            state.iteration += 1
            for s in state.scales.values():
                s.end_scan(state.iteration)
            if i >= 500:
                mus.append(state.mu_x)
        results[type(prior).__name__] = np.mean(mus)
    assert abs(results["NormalPrior"] - 0.3) < 0.02
    assert abs(results["LogNormalPrior"] - results["NormalPrior"]) < 0.02
