"""Langevin samplers for the Gibbs quasi-posterior.

The target density is ``exp(-lam * r(theta)) * pi(theta)`` where ``r`` is the
quartic empirical risk and ``pi`` the scaled Student prior.  Two samplers are
provided:

* :func:`lmc_run` - unadjusted Langevin, ``theta += gamma * g + sqrt(2 gamma) N``
  with ``g`` the gradient of the log density (drift points uphill);
* :func:`mala_run` - the same proposal with a Metropolis-Hastings correction
  and step-size adaptation during burn-in.

Both run in blocks through the kernels in :mod:`qphase._kernels`; the
:class:`Target` abstraction lets tests inject other log densities.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .errors import DimensionError, DivergenceError, DomainError, EmptyChainError, SupportError
from .model import empirical_risk, risk_gradient
from .prior import log_prior_gradient, log_prior_unnorm
from .rng import DEFAULT_SEED, RngState

log = logging.getLogger(__name__)

BLOCK = 500
ADAPT_FACTOR = 1.1


@dataclass(frozen=True)
class SamplerConfig:
    """Sampler settings.

    ``gamma=None`` selects the target's default step size.  For MALA it is
    only the starting value: it is adapted during burn-in on windows of
    ``adapt_window`` iterations and frozen afterwards.
    """

    lam: float
    gamma: Optional[float] = None
    n_iter: int = 30000
    burn_in: int = 1000
    thin: int = 1
    target_acceptance: float = 0.5
    seed: int = DEFAULT_SEED
    adapt_window: int = 50
    adapt: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if self.gamma is not None and not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if self.n_iter < 1:
            raise DomainError("n_iter must be >= 1")
        if not 0 <= self.burn_in < self.n_iter:
            raise DomainError(f"need 0 <= burn_in < n_iter, got burn_in={self.burn_in}, n_iter={self.n_iter}")
        if self.thin < 1:
            raise DomainError("thin must be >= 1")
        if not 0 < self.target_acceptance < 1:
            raise DomainError("target_acceptance must lie in (0, 1)")
        if self.adapt_window < 1:
            raise DomainError("adapt_window must be >= 1")


@dataclass
class Chain:
    samples: np.ndarray
    posterior_mean: np.ndarray
    acceptance_rate: float
    final_gamma: float
    trace: Optional[np.ndarray] = None
    method: str = ""
    warnings: list = field(default_factory=list)

    def __len__(self):
        return self.samples.shape[0]


# --- the quasi-posterior -------------------------------------------------

def log_posterior_unnorm(inst, prior, lam, theta):
    """``-lam * r(theta) + log pi(theta)`` (``-inf`` outside the prior ball)."""
    lp = log_prior_unnorm(prior, theta)
    if lp == -math.inf:
        if np.shape(theta) != (inst.p,):
            raise DimensionError(f"theta has shape {np.shape(theta)}, expected ({inst.p},)")
        return -math.inf
    return -lam * empirical_risk(inst, theta) + lp


def grad_log_posterior(inst, prior, lam, theta):
    """Exact gradient of :func:`log_posterior_unnorm`."""
    return -lam * risk_gradient(inst, theta) + log_prior_gradient(prior, theta)


class Target:
    """A differentiable log density usable by the chain kernels.

    ``kernel(backend)`` must return a function ``f(theta, data) -> (logp, grad)``
    for that backend; for the numba backend it must itself be jitted.
    """

    h1 = math.inf
    dim = None

    def kernel(self, backend):
        raise NotImplementedError

    @property
    def data(self):
        raise NotImplementedError

    def default_gamma(self, method):
        raise NotImplementedError

    def log_density_and_grad(self, theta, backend=None):
        backend = backend or _kernels.active_backend()
        return self.kernel(backend)(np.asarray(theta, dtype=np.float64), self.data)


class PhaseRetrievalTarget(Target):
    """Gibbs quasi-posterior for one problem instance."""

    def __init__(self, inst, prior, lam):
        if not lam > 0:
            raise DomainError(f"lambda must be positive, got {lam}")
        self.inst = inst
        self.prior = prior
        self.lam = float(lam)
        self.h1 = float(prior.h1)
        self.dim = inst.p
        self._data = (inst.A, inst.y, self.lam, float(prior.varsigma) ** 2)

    @property
    def data(self):
        return self._data

    def kernel(self, backend):
        return _kernels.get(backend).pr_logpost_grad

    def default_gamma(self, method):
        """Curvature-scaled starting step size.

        LMC: ``1e-2 / (lam * max(y) + 4 / vs^2)``.  MALA: ``p^(-1/3) / L``
        with ``L = 6 lam mean(y) + 4 / vs^2`` the approximate largest
        curvature near the mode (before adaptation).
        """
        prior_curv = 4.0 / self.prior.varsigma ** 2
        y = self.inst.y
        if method == "lmc":
            return 1e-2 / (self.lam * max(float(np.max(y)), 1e-12) + prior_curv)
        scale = max(float(np.mean(y)), float(np.mean(np.abs(y))) / 10, 1e-12)
        return self.dim ** (-1.0 / 3.0) / (6.0 * self.lam * scale + prior_curv)


class GaussianTarget(Target):
    """Independent Gaussian target, used to calibrate the samplers."""

    def __init__(self, mean, var=1.0, h1=math.inf):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=np.float64)).copy()
        self.dim = self.mean.shape[0]
        var = np.broadcast_to(np.asarray(var, dtype=np.float64), self.mean.shape)
        self.prec = 1.0 / var
        self.h1 = float(h1)

    @property
    def data(self):
        return (self.mean, self.prec)

    def kernel(self, backend):
        return _kernels.get(backend).gauss_logpost_grad

    def default_gamma(self, method):
        L = float(np.max(self.prec))
        if method == "lmc":
            return 1e-2 / L
        return self.dim ** (-1.0 / 3.0) / L


def mala_log_accept_ratio(lp, lp_prop, theta, prop, grad, grad_prop, gamma):
    """Log MH ratio for the Langevin proposal ``N(theta + gamma g, 2 gamma I)``."""
    d = theta - prop - gamma * grad_prop
    e = prop - theta - gamma * grad
    return lp_prop - lp - (float(d @ d) - float(e @ e)) / (4.0 * gamma)


# --- chain drivers -------------------------------------------------------

def _prepare(target, cfg, theta0):
    p = target.dim
    theta = np.zeros(p) if theta0 is None else np.array(theta0, dtype=np.float64).reshape(-1)
    if theta.shape != (p,):
        raise DimensionError(f"theta0 has shape {theta.shape}, expected ({p},)")
    if not (math.isinf(target.h1) or np.linalg.norm(theta) <= target.h1):
        raise SupportError("theta0 lies outside the prior support")
    n_keep = -(-(cfg.n_iter - cfg.burn_in) // cfg.thin)
    return theta, np.empty((n_keep, p)), np.empty(cfg.n_iter)


def _noise_source(rng, noise):
    if noise is not None:
        return noise
    return rng.normal_matrix


def _rng_for(cfg, rng):
    return rng if rng is not None else RngState(cfg.seed)


def lmc_sample(target, cfg, theta0=None, rng=None, noise=None, backend=None):
    """Unadjusted Langevin chain on an arbitrary :class:`Target`.

    ``noise(n, p)`` may be given to inject the Gaussian increments (a test
    hook); by default they are drawn from ``rng``.
    """
    backend = backend or _kernels.active_backend()
    impl = _kernels.get(backend)
    f = target.kernel(backend)
    rng = _rng_for(cfg, rng)
    draw = _noise_source(rng, noise)
    gamma = float(cfg.gamma) if cfg.gamma is not None else float(target.default_gamma("lmc"))
    theta, samples, trace = _prepare(target, cfg, theta0)
    for start in range(0, cfg.n_iter, BLOCK):
        n = min(BLOCK, cfg.n_iter - start)
        block = np.ascontiguousarray(draw(n, target.dim), dtype=np.float64)
        status = impl.lmc_block(f, target.data, theta, gamma, target.h1, block, start,
                                cfg.burn_in, cfg.thin, samples, trace)
        if status >= 0:
            raise DivergenceError(f"LMC diverged at iteration {status} (gamma={gamma:.3g}); "
                                  "reduce the step size", iteration=int(status))
    return Chain(samples, samples.mean(axis=0), 1.0, gamma, trace, method="lmc")


def _mean_accept(f, data, theta, lp, grad, gamma, probes, h1):
    total = 0.0
    sq = math.sqrt(2.0 * gamma)
    for z in probes:
        prop = theta + gamma * grad + sq * z
        if not np.all(np.isfinite(prop)) or (h1 < math.inf and np.linalg.norm(prop) > h1):
            continue
        with np.errstate(all="ignore"):
            lp_p, g_p = f(prop, data)
        if not (math.isfinite(lp_p) and np.all(np.isfinite(g_p))):
            continue
        la = mala_log_accept_ratio(lp, lp_p, theta, prop, grad, np.asarray(g_p), gamma)
        total += 1.0 if la >= 0 else math.exp(la)
    return total / len(probes)


def search_initial_gamma(target, theta, gamma0, rng, target_acceptance=0.5, n_probe=10,
                         max_steps=40, backend=None):
    """Double or halve ``gamma0`` until the mean one-step acceptance
    probability from ``theta`` (over ``n_probe`` fixed proposals) crosses
    ``target_acceptance``.  Returns the last step on the accepting side."""
    backend = backend or _kernels.active_backend()
    f = target.kernel(backend)
    lp, grad = f(np.asarray(theta, dtype=np.float64), target.data)
    grad = np.asarray(grad, dtype=np.float64)
    probes = rng.normal_matrix(n_probe, target.dim)
    gamma = float(gamma0)
    a = _mean_accept(f, target.data, theta, lp, grad, gamma, probes, target.h1)
    up = a > target_acceptance
    for _ in range(max_steps):
        nxt = gamma * 2.0 if up else gamma / 2.0
        a = _mean_accept(f, target.data, theta, lp, grad, nxt, probes, target.h1)
        if up and a <= target_acceptance:
            return gamma
        gamma = nxt
        if not up and a > target_acceptance:
            return gamma
    return gamma


def mala_sample(target, cfg, theta0=None, rng=None, noise=None, backend=None):
    """Metropolis-adjusted Langevin chain with burn-in step-size adaptation.

    With ``cfg.gamma=None`` the starting step is the target's default refined
    by :func:`search_initial_gamma` (on a separate child stream); then, while
    ``cfg.adapt`` holds, every ``adapt_window`` burn-in iterations the step is
    multiplied by 1.1 if the window's acceptance exceeded the target and
    divided by 1.1 if it fell short.  The step is frozen after burn-in.
    """
    backend = backend or _kernels.active_backend()
    impl = _kernels.get(backend)
    f = target.kernel(backend)
    rng = _rng_for(cfg, rng)
    draw = _noise_source(rng, noise)
    theta, samples, trace = _prepare(target, cfg, theta0)
    lp, grad = f(theta, target.data)
    grad = np.array(grad, dtype=np.float64)
    if not (math.isfinite(lp) and np.all(np.isfinite(grad))):
        raise DivergenceError("log density is not finite at the initial point", iteration=0)
    if cfg.gamma is not None:
        gamma = float(cfg.gamma)
    else:
        gamma = search_initial_gamma(target, theta, target.default_gamma("mala"),
                                     rng.child("gamma-search"), cfg.target_acceptance,
                                     backend=backend)
    counters = np.zeros(3, dtype=np.int64)
    for start in range(0, cfg.n_iter, BLOCK):
        n = min(BLOCK, cfg.n_iter - start)
        block = np.ascontiguousarray(draw(n, target.dim), dtype=np.float64)
        unif = rng.uniform(n)
        status, lp, gamma = impl.mala_block(
            f, target.data, theta, grad, lp, gamma, target.h1, block, unif, start,
            cfg.burn_in, cfg.thin, cfg.adapt_window, cfg.target_acceptance, cfg.adapt,
            samples, trace, counters)
        if status >= 0:
            raise DivergenceError(f"MALA state became non-finite at iteration {status}",
                                  iteration=int(status))
    rate = float(counters[1]) / (cfg.n_iter - cfg.burn_in)
    chain = Chain(samples, samples.mean(axis=0), rate, float(gamma), trace, method="mala")
    if not 0.2 <= rate <= 0.8:
        msg = f"MALA acceptance rate {rate:.3f} outside [0.2, 0.8] after tuning (gamma={gamma:.3g})"
        chain.warnings.append(msg)
        log.warning(msg)
    return chain


def lmc_run(inst, prior, cfg, theta0=None, rng=None, noise=None, backend=None):
    """Unadjusted Langevin chain on the quasi-posterior of ``inst``."""
    target = PhaseRetrievalTarget(inst, prior, cfg.lam)
    return lmc_sample(target, cfg, theta0, rng=rng, noise=noise, backend=backend)


def mala_run(inst, prior, cfg, theta0=None, rng=None, noise=None, backend=None):
    """MALA chain on the quasi-posterior of ``inst``."""
    target = PhaseRetrievalTarget(inst, prior, cfg.lam)
    return mala_sample(target, cfg, theta0, rng=rng, noise=noise, backend=backend)


def estimate(chain):
    """Posterior-mean estimator carried by ``chain``."""
    if chain is None or chain.samples.shape[0] == 0:
        raise EmptyChainError("cannot estimate from an empty chain")
    return chain.posterior_mean
