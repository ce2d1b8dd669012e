"""Discrete joint prior on (Sigma, B) and its scalar-channel functionals.

The latent pair is Sigma ~ Bernoulli(rho) and B | Sigma drawn from a finite
atom list.  Everything downstream (denoisers, their derivatives, the scalar
mmse curves and the scalar-channel mutual information) is an exact sum over
the joint atoms combined with Gauss-Hermite quadrature over the Gaussian
observation noise.

Channel conventions
-------------------
A "sigma channel" observation is x = eta * Sigma + nu * Z and a "B channel"
observation is y = B + tau * Z'.  Degenerate parameters are interpreted as:

* nu == 0 and eta == 0: the sigma factor carries no information and is
  dropped from the posterior weights.
* nu == 0 and eta > 0:  exact conditioning; only atoms matching the
  observation within ``EXACT_TOL`` keep mass.
* tau == 0:             exact conditioning on B (same tolerance).
* tau == inf:           the B factor is uninformative and is dropped.

Posterior weights are always formed in the log domain (max-subtracted)
so high-SNR channels do not underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateChannel, InconsistentObservation

EXACT_TOL = 1e-9

__all__ = [
    "PriorSpec",
    "ScalarChannelParams",
    "QuadratureRule",
    "joint_atoms",
    "denoise_sigma",
    "denoise_beta",
    "denoiser_partials",
    "mmse1",
    "mmse2",
    "scalar_mi",
    "spike_slab",
]


@dataclass(frozen=True)
class PriorSpec:
    """Joint law of (Sigma, B): Sigma ~ Bernoulli(rho), B | Sigma discrete.

    Parameters
    ----------
    rho : float
        P(Sigma = 1), must lie strictly inside (0, 1).
    atoms0, atoms1 : tuple of (value, prob)
        Conditional atoms of B given Sigma = 0 and Sigma = 1.  Probabilities
        within each list must sum to one.
    """

    rho: float
    atoms0: tuple[tuple[float, float], ...]
    atoms1: tuple[tuple[float, float], ...]
    s_max: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must be in (0,1), got {self.rho}")
        object.__setattr__(self, "atoms0", tuple((float(v), float(p)) for v, p in self.atoms0))
        object.__setattr__(self, "atoms1", tuple((float(v), float(p)) for v, p in self.atoms1))
        for name, atoms in (("atoms0", self.atoms0), ("atoms1", self.atoms1)):
            if len(atoms) == 0:
                raise ValueError(f"{name} must be nonempty")
            probs = [p for _, p in atoms]
            if any(p < 0 for p in probs):
                raise ValueError(f"{name} has a negative probability")
            if abs(sum(probs) - 1.0) > 1e-12:
                raise ValueError(f"{name} probabilities sum to {sum(probs)}, not 1")
        s_max = max(abs(v) for v, _ in self.atoms0 + self.atoms1)
        object.__setattr__(self, "s_max", s_max)

    def is_spike_slab(self) -> bool:
        """True iff B is exactly 0 under Sigma = 0."""
        return self.atoms0 == ((0.0, 1.0),)

    def slab_separation(self) -> float:
        """Minimal |slab atom|; positive separation makes support recovery testable."""
        if not self.is_spike_slab():
            raise ValueError("slab separation is defined for spike-slab priors only")
        return min(abs(v) for v, _ in self.atoms1)

    def mean_b(self) -> float:
        return sum(w * b for _, b, w in joint_atoms(self))

    def second_moment_b(self) -> float:
        return sum(w * b * b for _, b, w in joint_atoms(self))

    def var_b(self) -> float:
        m = self.mean_b()
        return self.second_moment_b() - m * m


def spike_slab(rho: float, slab_values, slab_probs=None) -> PriorSpec:
    """Convenience constructor: P(.|0) = delta_0, P(.|1) uniform or weighted."""
    vals = [float(v) for v in slab_values]
    if slab_probs is None:
        slab_probs = [1.0 / len(vals)] * len(vals)
    return PriorSpec(rho=rho, atoms0=((0.0, 1.0),),
                     atoms1=tuple(zip(vals, slab_probs)))


@dataclass(frozen=True)
class ScalarChannelParams:
    """Noise levels of the two scalar observation channels.

    eta, nu parameterize the sigma channel x = eta*Sigma + nu*Z;
    tau the B channel y = B + tau*Z'.  ``tau = inf`` marks an absent
    B observation.
    """

    eta: float
    nu: float
    tau: float

    def __post_init__(self):
        if self.eta < 0 or self.nu < 0:
            raise ValueError("eta and nu must be nonnegative")
        if self.tau < 0:
            raise ValueError("tau must be nonnegative (inf allowed)")


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite nodes/weights normalized to the standard normal measure."""

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @classmethod
    def gauss_hermite(cls, order: int = 41) -> "QuadratureRule":
        nodes, weights = np.polynomial.hermite_e.hermegauss(order)
        weights = weights / weights.sum()
        return cls(nodes=nodes, weights=weights, order=order)


DEFAULT_QUAD = QuadratureRule.gauss_hermite(41)


def joint_atoms(prior: PriorSpec) -> list[tuple[int, float, float]]:
    """Joint atom table [(sigma, b, weight)] of the (Sigma, B) law."""
    out = [(0, v, (1.0 - prior.rho) * p) for v, p in prior.atoms0]
    out += [(1, v, prior.rho * p) for v, p in prior.atoms1]
    return out


def _atom_arrays(prior: PriorSpec):
    atoms = joint_atoms(prior)
    sig = np.array([a[0] for a in atoms], dtype=float)
    b = np.array([a[1] for a in atoms], dtype=float)
    w = np.array([a[2] for a in atoms], dtype=float)
    return sig, b, w


def _log_weights(x, y, ch: ScalarChannelParams, prior: PriorSpec) -> np.ndarray:
    """Log posterior weights over joint atoms, shape x.shape + (K,).

    Normalization constants common to all atoms are omitted; they cancel
    once the weights are normalized.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sig, b, w = _atom_arrays(prior)
    logw = np.broadcast_to(np.log(w), x.shape + (len(w),)).copy()

    if ch.nu == 0.0:
        if ch.eta != 0.0:
            match = np.abs(x[..., None] - ch.eta * sig) <= EXACT_TOL
            logw = np.where(match, logw, -np.inf)
        # eta == nu == 0: factor dropped
    else:
        logw = logw - 0.5 * ((x[..., None] - ch.eta * sig) / ch.nu) ** 2

    if ch.tau == 0.0:
        match = np.abs(y[..., None] - b) <= EXACT_TOL
        logw = np.where(match, logw, -np.inf)
    elif not math.isinf(ch.tau):
        logw = logw - 0.5 * ((y[..., None] - b) / ch.tau) ** 2
    # tau == inf: factor dropped

    return logw


def _posterior(x, y, ch: ScalarChannelParams, prior: PriorSpec) -> np.ndarray:
    """Normalized posterior atom probabilities, shape x.shape + (K,)."""
    logw = _log_weights(x, y, ch, prior)
    mx = np.max(logw, axis=-1, keepdims=True)
    if np.any(np.isneginf(mx)):
        raise InconsistentObservation("inconsistent observation")
    w = np.exp(logw - mx)
    return w / w.sum(axis=-1, keepdims=True)


def denoise_sigma(x, y, ch: ScalarChannelParams, prior: PriorSpec):
    """Posterior mean E[Sigma | sigma-channel obs x, B-channel obs y].

    Accepts scalars or arrays (broadcast together); the result lies in [0, 1].
    """
    scalar = np.isscalar(x) and np.isscalar(y)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    post = _posterior(x, y, ch, prior)
    sig, _, _ = _atom_arrays(prior)
    out = np.clip(post @ sig, 0.0, 1.0)     # guard 1-ulp round-off excursions
    return float(out) if scalar else out


def denoise_beta(x, y, ch: ScalarChannelParams, prior: PriorSpec):
    """Posterior mean E[B | B-channel obs x, sigma-channel obs y].

    Note the positional convention: the B observation comes first.
    The result lies in [-s_max, s_max].
    """
    scalar = np.isscalar(x) and np.isscalar(y)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    post = _posterior(y, x, ch, prior)  # engine takes (sigma-obs, B-obs)
    _, b, _ = _atom_arrays(prior)
    out = np.clip(post @ b, -prior.s_max, prior.s_max)
    return float(out) if scalar else out


def _posterior_moments(x_sig, y_b, ch: ScalarChannelParams, prior: PriorSpec):
    """Posterior mean/var/cov of (Sigma, B) given channel observations."""
    post = _posterior(x_sig, y_b, ch, prior)
    sig, b, _ = _atom_arrays(prior)
    ms = post @ sig
    mb = post @ b
    vs = post @ (sig * sig) - ms * ms
    vb = post @ (b * b) - mb * mb
    cov = post @ (sig * b) - ms * mb
    return ms, mb, vs, vb, cov


def denoiser_partials(x, y, ch: ScalarChannelParams, prior: PriorSpec):
    """Analytic partial derivatives of both posterior-mean denoisers.

    The observation pair is shared: x is the sigma-channel observation and
    y the B-channel observation, so the tuple refers to f evaluated at
    (x, y) and zeta evaluated at (y, x).  Returns
    ``(df_dx, df_dy, dz_dx, dz_dy)``:

    * df_dx = d f / d(sigma-obs) = (eta / nu^2) * Var(Sigma | obs)
    * df_dy = d f / d(B-obs)     = (1 / tau^2) * Cov(Sigma, B | obs)
    * dz_dx = d zeta / d(B-obs)  = (1 / tau^2) * Var(B | obs)
    * dz_dy = d zeta / d(sigma-obs) = (eta / nu^2) * Cov(B, Sigma | obs)

    The derivative of a posterior mean with respect to a Gaussian-channel
    observation is (signal strength / noise variance) times the posterior
    covariance of the estimand with that channel's signal.
    """
    if ch.nu == 0.0 or ch.tau == 0.0:
        raise DegenerateChannel("derivative undefined at exact conditioning")
    scalar = np.isscalar(x) and np.isscalar(y)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    _, _, vs, vb, cov = _posterior_moments(x, y, ch, prior)
    sig_gain = ch.eta / ch.nu**2
    b_gain = 0.0 if math.isinf(ch.tau) else 1.0 / ch.tau**2
    out = (sig_gain * vs, b_gain * cov, b_gain * vb, sig_gain * cov)
    if scalar:
        return tuple(float(v) for v in out)
    return out


def _mmse_channels(prior: PriorSpec, eta, nu, tau, quad: QuadratureRule):
    """(mmse_sigma, mmse_b) for channels x = eta*Sigma + nu*Z, y = B + tau*Z'.

    Exact atom sums outside, tensor Gauss-Hermite inside.  Degenerate
    parameters follow the module conventions; fully uninformative channels
    reduce to the prior variances.
    """
    sig, b, w = _atom_arrays(prior)
    ch = ScalarChannelParams(eta=eta, nu=nu, tau=tau)

    informative_sig = nu > 0 and eta > 0
    informative_b = not math.isinf(tau)
    zs, wq = quad.nodes, quad.weights
    # grid over (atom, z_b, z_sig); collapse absent channels to one node
    z_sig = zs if informative_sig or nu > 0 else np.array([0.0])
    w_sig = wq if z_sig.shape == zs.shape else np.array([1.0])
    z_b = zs if informative_b else np.array([0.0])
    w_b = wq if informative_b else np.array([1.0])

    X = eta * sig[:, None, None] + nu * z_sig[None, None, :]
    Y = b[:, None, None] + (0.0 if not informative_b else tau) * z_b[None, :, None]
    X, Y = np.broadcast_arrays(X, Y)

    post = _posterior(X, Y, ch, prior)
    fs = post @ sig
    fb = post @ b
    wgrid = w[:, None, None] * w_b[None, :, None] * w_sig[None, None, :]
    m1 = float(np.sum(wgrid * (sig[:, None, None] - fs) ** 2))
    m2 = float(np.sum(wgrid * (b[:, None, None] - fb) ** 2))
    return m1, m2


def _mu_xi_channels(mu: float, xi: float, Delta: float, kappa: float):
    if mu < 0 or xi < 0:
        raise ValueError("mu and xi must be nonnegative")
    if Delta <= 0 or kappa <= 0:
        raise ValueError("Delta and kappa must be positive")
    return math.sqrt(mu), 1.0, math.sqrt(Delta * (1.0 + xi) / kappa)


def mmse1(mu: float, xi: float, prior: PriorSpec, Delta: float, kappa: float,
          quad: QuadratureRule = DEFAULT_QUAD) -> float:
    """E[(Sigma - E[Sigma | sqrt(mu)*Sigma + Z, B + sqrt(Delta(1+xi)/kappa)*Z'])^2]."""
    if quad.order < 21:
        raise ValueError("quadrature order must be at least 21")
    eta, nu, tau = _mu_xi_channels(mu, xi, Delta, kappa)
    return _mmse_channels(prior, eta, nu, tau, quad)[0]


def mmse2(mu: float, xi: float, prior: PriorSpec, Delta: float, kappa: float,
          quad: QuadratureRule = DEFAULT_QUAD) -> float:
    """E[(B - E[B | B + sqrt(Delta(1+xi)/kappa)*Z, sqrt(mu)*Sigma + Z'])^2]."""
    if quad.order < 21:
        raise ValueError("quadrature order must be at least 21")
    eta, nu, tau = _mu_xi_channels(mu, xi, Delta, kappa)
    return _mmse_channels(prior, eta, nu, tau, quad)[1]


def scalar_mi(mu: float, xi: float, prior: PriorSpec, Delta: float, kappa: float,
              quad: QuadratureRule = DEFAULT_QUAD) -> float:
    """Mutual information between (Sigma, B) and the pair of scalar observations.

    The observations are a = sqrt(mu)*Sigma + Z and
    y = B + sqrt(Delta(1+xi)/kappa)*eps with independent standard normals.
    Computed as the expectation of log [P(a,y|Sigma,B) / P(a,y)]: exact sums
    over atoms outside and inside, quadrature over (Z, eps).
    """
    if quad.order < 21:
        raise ValueError("quadrature order must be at least 21")
    eta, nu, tau = _mu_xi_channels(mu, xi, Delta, kappa)
    sig, b, w = _atom_arrays(prior)
    zs, wq = quad.nodes, quad.weights

    # observation grids given true atom k: a = eta*sig_k + z2, y = b_k + tau*z1
    A = eta * sig[:, None, None] + nu * zs[None, None, :]
    Y = b[:, None, None] + tau * zs[None, :, None]
    A, Y = np.broadcast_arrays(A, Y)

    # conditional log-likelihood (constants cancel against the mixture)
    log_num = (-0.5 * ((A - eta * sig[:, None, None]) / nu) ** 2
               - 0.5 * ((Y - b[:, None, None]) / tau) ** 2)
    # mixture over atoms m
    logm = (np.log(w)
            - 0.5 * ((A[..., None] - eta * sig) / nu) ** 2
            - 0.5 * ((Y[..., None] - b) / tau) ** 2)
    mx = logm.max(axis=-1)
    log_den = mx + np.log(np.sum(np.exp(logm - mx[..., None]), axis=-1))

    wgrid = w[:, None, None] * wq[None, :, None] * wq[None, None, :]
    return float(np.sum(wgrid * (log_num - log_den)))
