"""Tuning constants and rate expressions from the PAC-Bayes analysis.

All quantities are closed-form.  The universal constant in front of the
rate is not specified by the theory, so it is an input (``frak_c``); the
explicit constant produced by the proof is available separately through
:func:`theorem1_rate_explicit`.

Note on ``alpha``: at ``lam = lambda_star`` the definition gives
``alpha = m / (2 (C1 + C2))``, i.e. ``1/alpha = 2 (C1 + C2) / m``.  The
formula is implemented literally.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError


@dataclass(frozen=True)
class TheoryParams:
    sigma: float = 1.0
    xi: float = 1.0
    c_bound: float = 1.0
    kappa0: float = 1.0
    m: int = 100
    p: int = 100
    s_star: int = 10
    delta: float = 0.05
    frak_c: float = 1.0
    h1: float = math.inf

    def __post_init__(self):
        for name in ("sigma", "xi", "c_bound", "kappa0", "frak_c", "h1"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        for name in ("m", "p", "s_star"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be a positive integer")
        if self.s_star > self.p:
            raise DomainError("s_star must not exceed p")
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class Constants:
    C1: float
    C2: float
    lambda_star: float
    varsigma_star: float


def constants(params):
    """``C1 = 8 (sigma^2 + C^2)``, ``C2 = 64 max(xi, C) C``,
    ``lambda* = m / (C1 + 2 C2)``, ``varsigma* = 1 / (4 C p m)``."""
    C = params.c_bound
    C1 = 8.0 * (params.sigma ** 2 + C ** 2)
    C2 = 64.0 * max(params.xi, C) * C
    lam = params.m / (C1 + 2.0 * C2)
    vs = 1.0 / (4.0 * C * params.p * params.m)
    return Constants(C1, C2, lam, vs)


def alpha_beta(params, lam):
    """``lam -/+ lam^2 C1 / (2 m (1 - C2 lam / m))`` for ``0 < lam < m / C2``."""
    c = constants(params)
    m = params.m
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if not lam < m / c.C2:
        raise DomainError(f"lambda={lam} must be below m/C2={m / c.C2}")
    corr = lam * lam * c.C1 / (2.0 * m * (1.0 - c.C2 * lam / m))
    return lam - corr, lam + corr


def theorem1_rate(params):
    """``frak_c sigma^2 (s* log(m p / s*) + log(2 / delta)) / m``."""
    s = params.s_star
    return (params.frak_c * params.sigma ** 2
            * (s * math.log(params.m * params.p / s) + math.log(2.0 / params.delta)) / params.m)


def theorem1_rate_explicit(params):
    """Bound with the proof's explicit constants (requires finite ``h1``).

    ``[3/m^2 + 4 (C1 + C2) (4 s* log(4 h1 C p m / s*) + log 2 + log(2/delta)) / m] / kappa0``
    """
    if math.isinf(params.h1):
        return math.inf
    c = constants(params)
    m, s = params.m, params.s_star
    inner = (4.0 * s * math.log(4.0 * params.h1 * params.c_bound * params.p * m / s)
             + math.log(2.0) + math.log(2.0 / params.delta))
    return (3.0 / m ** 2 + 4.0 * (c.C1 + c.C2) * inner / m) / params.kappa0


def loss_product(theta, theta_star):
    """``||theta - theta*||^2 * ||theta + theta*||^2``."""
    theta = np.asarray(theta, dtype=np.float64)
    theta_star = np.asarray(theta_star, dtype=np.float64)
    if theta.shape != theta_star.shape:
        raise DimensionError(f"shape mismatch {theta.shape} vs {theta_star.shape}")
    d = theta - theta_star
    s = theta + theta_star
    return float(d @ d) * float(s @ s)


def theta_m_member(params, theta, theta_star):
    """Whether ``theta`` lies in the contraction set at this rate budget."""
    return loss_product(theta, theta_star) <= theorem1_rate(params)


def report(params):
    """All constants and rates as an ordered dict (used by the CLI)."""
    c = constants(params)
    out = {"C1": c.C1, "C2": c.C2, "lambda_star": c.lambda_star,
           "varsigma_star": c.varsigma_star, "lambda_max": params.m / c.C2}
    a, b = alpha_beta(params, c.lambda_star)
    out.update(alpha=a, beta=b, beta_over_alpha=b / a, inv_alpha=1.0 / a,
               rate=theorem1_rate(params), rate_explicit=theorem1_rate_explicit(params))
    return out
