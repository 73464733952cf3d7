"""Scaled Student shrinkage prior ``pi(theta) ~ prod_i (vs^2 + theta_i^2)^-2``
restricted to the ball ``||theta|| <= h1``."""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SupportError


@dataclass(frozen=True)
class PriorConfig:
    varsigma: float = 0.1
    h1: float = math.inf

    def __post_init__(self):
        if not (self.varsigma > 0 and math.isfinite(self.varsigma)):
            raise DomainError(f"varsigma must be a positive finite number, got {self.varsigma}")
        if not self.h1 > 0:
            raise DomainError(f"h1 must be positive (inf allowed), got {self.h1}")


def in_support(cfg, theta):
    return math.isinf(cfg.h1) or float(np.linalg.norm(theta)) <= cfg.h1


def log_prior_unnorm(cfg, theta):
    """``-2 sum_i log(vs^2 + theta_i^2)``, or ``-inf`` outside the ball."""
    theta = np.asarray(theta, dtype=np.float64)
    if not in_support(cfg, theta):
        return -math.inf
    return -2.0 * float(np.sum(np.log(cfg.varsigma ** 2 + theta * theta)))


def log_prior_gradient(cfg, theta):
    """Componentwise ``-4 theta_l / (vs^2 + theta_l^2)``.

    Each component is bounded by ``2 / vs`` in absolute value.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if not in_support(cfg, theta):
        raise SupportError(f"||theta|| = {np.linalg.norm(theta):.6g} exceeds h1 = {cfg.h1}")
    return -4.0 * theta / (cfg.varsigma ** 2 + theta * theta)
