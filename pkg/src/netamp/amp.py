"""Synchronized graph + regression message passing with Bayes denoisers.

Per iteration t (with S = Phi/sqrt(kappa), y0 = y/sqrt(kappa), b^t =
S^T z^t + beta^t):

    r^t       = f_t(sigma^t, b^{t-1})                       sigma estimate
    sigma^{t+1} = Abar r^t / sqrt(p) - <df_t> r^{t-1}        graph power step
    z^t       = y0 - S beta^t + (1/kappa) <dzeta_{t-1}> z^{t-1}
    beta^{t+1} = zeta_t(b^t, sigma^{t+1})                    beta estimate

f_t / zeta_t are the posterior means for the scalar channels whose noise
levels come from the deterministic state-evolution trace at the same index:
sigma^t carries (eta_t, nu_t) and b^t carries tau_t.  The memory
coefficients <df_t> (w.r.t. the sigma observation) and <dzeta_{t-1}>
(w.r.t. the B observation, i.e. of the map that produced beta^t) are the
average analytic derivatives; they cancel the iterate correlations that
would otherwise break the Gaussian-channel picture.

Initialization is uninformative by default: sigma^0 = rho * 1 and
beta^0 = E[B] * 1 with z^{-1} = 0, so the t = 0 sigma denoiser is the
constant rho (no B-side observation exists yet) and the t = 0 residual is
plain y0 - S beta^0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChannel, DimensionMismatch, DivergedIteration
from .priors import (DEFAULT_QUAD, PriorSpec, QuadratureRule,
                     ScalarChannelParams, _posterior_moments, _atom_arrays,
                     _posterior)
from .state_evolution import SeTrace, se_run
from .synth import Dataset, ModelParams, centered_adjacency_apply, gaussian_surrogate

__all__ = ["AmpConfig", "AmpResult", "run", "onsager_average"]


@dataclass(frozen=True)
class AmpConfig:
    """Iteration count, initialization and matrix mode for one run."""

    T: int = 25
    init: str = "prior-mean"           # "prior-mean" or "oracle"
    oracle_eps: float = 0.5            # overlap of the oracle start
    matrix_mode: str = "sbm"           # "sbm" or "gaussian-surrogate"
    damping: float = 1.0
    record_history: bool = True

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.init not in ("prior-mean", "oracle"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.init == "oracle" and not 0.0 < self.oracle_eps <= 1.0:
            raise ValueError("oracle_eps must be in (0, 1]")
        if self.matrix_mode not in ("sbm", "gaussian-surrogate"):
            raise ValueError(f"unknown matrix_mode {self.matrix_mode!r}")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must be in (0, 1]")


@dataclass(frozen=True)
class AmpResult:
    """Final iterates, estimates and per-iteration diagnostics."""

    sigma_iter: np.ndarray          # final sigma^T
    sigma_hat: np.ndarray           # f_T(sigma^T, b^{T-1})
    beta_hat: np.ndarray            # beta^T
    z: np.ndarray                   # final residual
    overlap: np.ndarray             # (1/p) sum sigma_hat^t * sigma0, t = 0..T
    mse_beta: np.ndarray            # (1/p) ||beta^t - beta0||^2, t = 0..T
    pred_error: np.ndarray          # (1/n) ||Phi(beta^t - beta0)||^2, t = 0..T
    se_trace: SeTrace
    config: AmpConfig = field(repr=False)


def _channel(trace: SeTrace, t: int) -> ScalarChannelParams:
    """Channel for the sigma denoiser at step t: (eta_t, nu_t; tau_{t-1})."""
    tau_prev = math.inf if t == 0 else float(trace.tau[t - 1])
    return ScalarChannelParams(eta=float(trace.eta[t]), nu=float(trace.nu[t]),
                               tau=tau_prev)


def _beta_channel(trace: SeTrace, t: int) -> ScalarChannelParams:
    """Channel for the beta denoiser producing beta^{t+1}: (tau_t; eta_{t+1}, nu_{t+1})."""
    return ScalarChannelParams(eta=float(trace.eta[t + 1]),
                               nu=float(trace.nu[t + 1]),
                               tau=float(trace.tau[t]))


def _f_and_partial(x_sig, y_b, ch: ScalarChannelParams, prior: PriorSpec):
    """(f values, mean df/d sigma-obs); constant prior mean when uninformative."""
    if ch.nu == 0.0 and ch.eta == 0.0 and math.isinf(ch.tau):
        f = np.full(x_sig.shape, prior.rho)
        return f, 0.0
    ms, _, vs, _, _ = _posterior_moments(x_sig, y_b, ch, prior)
    gain = 0.0 if ch.nu == 0.0 else ch.eta / ch.nu**2
    return ms, float(gain * np.mean(vs))


def _zeta_and_partial(x_b, y_sig, ch: ScalarChannelParams, prior: PriorSpec):
    """(zeta values, mean dzeta/d B-obs)."""
    _, mb, _, vb, _ = _posterior_moments(y_sig, x_b, ch, prior)
    gain = 0.0 if math.isinf(ch.tau) else 1.0 / ch.tau**2
    return mb, float(gain * np.mean(vb))


def onsager_average(kind: str, x, y, ch: ScalarChannelParams, prior: PriorSpec) -> float:
    """Average derivative of a denoiser w.r.t. its first positional argument.

    kind "f_partial1": mean over i of df/d(sigma-obs) at (x_i, y_i);
    kind "zeta_partial1": mean over i of dzeta/d(B-obs) at (x_i, y_i).
    """
    if ch.nu == 0.0 or ch.tau == 0.0:
        raise DegenerateChannel("derivative undefined at exact conditioning")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if kind == "f_partial1":
        return _f_and_partial(x, y, ch, prior)[1]
    if kind == "zeta_partial1":
        return _zeta_and_partial(x, y, ch, prior)[1]
    raise ValueError(f"unknown kind {kind!r}")


def _check_finite(name: str, arr: np.ndarray, t: int) -> None:
    if not np.all(np.isfinite(arr)):
        raise DivergedIteration(f"{name} contains NaN/Inf at iteration {t}")


def run(dataset: Dataset, prior: PriorSpec, params: ModelParams,
        config: AmpConfig = AmpConfig(),
        quad: QuadratureRule = DEFAULT_QUAD,
        se_trace: SeTrace | None = None) -> AmpResult:
    """Run the full iteration on one dataset.

    The state-evolution trace is computed from (prior, params) when not
    supplied; it must cover indices 0 .. T+1.
    """
    p, n = params.p, params.n
    if dataset.Phi.shape != (n, p) or dataset.sigma0.shape[0] != p:
        raise DimensionMismatch("dataset dimensions do not match params")
    kappa = params.kappa
    lam = params.lam
    T = config.T

    oracle_init = config.init == "oracle"
    se_init = None
    rng_init = None
    if oracle_init:
        eps = config.oracle_eps
        se_init = (eps, math.sqrt(1.0 - eps**2))
        rng_init = np.random.default_rng(np.random.SeedSequence(dataset.seed).spawn(6)[5])
    if se_trace is None:
        se_trace = se_run(prior, lam, kappa, params.Delta, T + 1, quad, init=se_init)
    if len(se_trace) < T + 2:
        raise ValueError("state-evolution trace too short for T iterations")

    S = dataset.Phi / math.sqrt(kappa)
    y0 = dataset.y / math.sqrt(kappa)

    if config.matrix_mode == "gaussian-surrogate":
        A_tilde = gaussian_surrogate(dataset.sigma0, lam, dataset.seed)
        apply_graph = lambda v: A_tilde @ v
    else:
        apply_graph = lambda v: centered_adjacency_apply(dataset, v)

    if oracle_init:
        eps = config.oracle_eps
        sigma = eps * dataset.sigma0 + math.sqrt(1.0 - eps**2) * rng_init.standard_normal(p)
    else:
        sigma = np.full(p, prior.rho)
    beta = np.full(p, prior.mean_b())
    z_prev = np.zeros(n)
    b_prev = np.zeros(p)           # placeholder; ignored while tau is absent
    sigma_prev = np.zeros(p)
    r_prev = np.zeros(p)
    gamma = config.damping

    overlap = np.full(T + 1, np.nan)
    mse_beta = np.full(T + 1, np.nan)
    pred_error = np.full(T + 1, np.nan)

    def record(t, sig_hat, bet):
        if not config.record_history and t < T:
            return
        overlap[t] = float(sig_hat @ dataset.sigma0) / p
        diff = bet - dataset.beta0
        mse_beta[t] = float(diff @ diff) / p
        resid = dataset.Phi @ diff
        pred_error[t] = float(resid @ resid) / n

    r = np.zeros(p)
    for t in range(T):
        ch_f = _channel(se_trace, t)
        r, df_mean = _f_and_partial(sigma, b_prev, ch_f, prior)
        record(t, r, beta)

        sigma_next = apply_graph(r) / math.sqrt(p) - df_mean * r_prev
        _check_finite("sigma", sigma_next, t)

        if t == 0:
            omega = 0.0            # beta^0 is the initializer, not a denoiser output
        else:
            ch_prev = _beta_channel(se_trace, t - 1)
            _, omega = _zeta_and_partial(b_prev, sigma, ch_prev, prior)
        z = y0 - S @ beta + (omega / kappa) * z_prev
        _check_finite("z", z, t)

        b = S.T @ z + beta
        ch_z = _beta_channel(se_trace, t)
        beta_next, _ = _zeta_and_partial(b, sigma_next, ch_z, prior)
        _check_finite("beta", beta_next, t)

        if gamma < 1.0 and t > 0:
            sigma_next = gamma * sigma_next + (1 - gamma) * sigma
            beta_next = gamma * beta_next + (1 - gamma) * beta
            z = gamma * z + (1 - gamma) * z_prev

        sigma_prev, sigma = sigma, sigma_next
        r_prev = r
        beta = beta_next
        z_prev = z
        b_prev = b

    ch_f = _channel(se_trace, T)
    sigma_hat, _ = _f_and_partial(sigma, b_prev, ch_f, prior)
    sigma_hat = np.clip(sigma_hat, 0.0, 1.0)
    beta = np.clip(beta, -prior.s_max, prior.s_max)
    record(T, sigma_hat, beta)

    return AmpResult(sigma_iter=sigma, sigma_hat=sigma_hat, beta_hat=beta,
                     z=z_prev, overlap=overlap, mse_beta=mse_beta,
                     pred_error=pred_error, se_trace=se_trace, config=config)
