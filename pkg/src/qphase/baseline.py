"""Thresholded Wirtinger flow, the frequentist comparator.

Spectral initialisation followed by hard-thresholded gradient steps on the
quartic empirical risk.  Outputs are labelled ``twf-baseline``.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, DivergenceError, DomainError
from .model import risk_gradient
from .rng import DEFAULT_SEED, RngState

log = logging.getLogger(__name__)

LABEL = "twf-baseline"


@dataclass(frozen=True)
class BaselineConfig:
    """``step=None`` means ``0.1 / mean(y)``; ``sparsity_k=None`` means s* if
    the instance knows it, else ``ceil(p / 10)``."""

    n_iter: int = 5000
    step: Optional[float] = None
    sparsity_k: Optional[int] = None
    max_backoff: int = 10

    def __post_init__(self):
        if self.n_iter < 1:
            raise DomainError("n_iter must be >= 1")
        if self.step is not None and not self.step > 0:
            raise DomainError(f"step must be positive, got {self.step}")
        if self.sparsity_k is not None and self.sparsity_k < 1:
            raise DomainError(f"sparsity level k must be >= 1, got {self.sparsity_k}")


def hard_threshold(x, k):
    """Keep the ``k`` largest-magnitude entries of ``x`` (ties to the lower index)."""
    x = np.asarray(x, dtype=np.float64)
    k = int(k)
    if not 1 <= k <= x.shape[0]:
        raise DomainError(f"k={k} must satisfy 1 <= k <= {x.shape[0]}")
    keep = np.argsort(-np.abs(x), kind="stable")[:k]
    out = np.zeros_like(x)
    out[keep] = x[keep]
    return out


def _power_iteration(matvec, v, n_steps, tol):
    rho = 0.0
    converged = False
    for _ in range(n_steps):
        w = matvec(v)
        nrm = float(np.linalg.norm(w))
        if not (nrm > 0 and math.isfinite(nrm)):
            return None, 0.0, False
        rho = float(v @ w)
        w = w / nrm
        # eigenvectors of negative eigenvalues flip sign each step
        if float(np.linalg.norm(w - v)) < tol or float(np.linalg.norm(w + v)) < tol:
            v = w
            converged = True
            break
        v = w
    return v, rho, converged


def spectral_init(inst, rng=None, n_steps=100, tol=1e-8):
    """Leading eigenvector of ``(1/m) sum_j y_j A_j A_j^T`` scaled to norm ``sqrt(mean y)``.

    Power iteration from a seeded random unit vector.  When the dominant
    eigenvalue is negative (possible with heavy noise) the iteration is
    rerun on the shifted matrix so that the top *algebraic* eigenvector is
    returned.  A vanishing matrix-vector product falls back to the random
    start vector with a warning.
    """
    rng = rng if rng is not None else RngState(DEFAULT_SEED, 0).child("spectral")
    A, y, m = inst.A, inst.y, inst.m
    scale = math.sqrt(max(float(np.mean(y)), 0.0))
    v0 = rng.normal_vector(inst.p)
    v0 /= np.linalg.norm(v0)

    def matvec(v):
        return A.T @ (y * (A @ v)) / m

    v, rho, ok = _power_iteration(matvec, v0, n_steps, tol)
    if v is not None and rho < 0:
        shift = rho
        v, _, ok = _power_iteration(lambda u: matvec(u) - shift * u, v0, n_steps, tol)
    if v is None:
        warnings.warn("spectral initialisation stagnated; using a random unit vector", RuntimeWarning)
        return scale * v0
    if not ok:
        log.debug("power iteration did not reach tol=%g in %d steps", tol, n_steps)
    return scale * v


def _resolve_k(inst, cfg):
    if cfg.sparsity_k is not None:
        k = int(cfg.sparsity_k)
    elif inst.s_star:
        k = int(inst.s_star)
    else:
        k = math.ceil(inst.p / 10)
    if not 1 <= k <= inst.p:
        raise DomainError(f"sparsity level k={k} must satisfy 1 <= k <= p={inst.p}")
    return k


def default_step(inst):
    my = float(np.mean(inst.y))
    if not my > 0:
        my = float(np.mean(np.abs(inst.y)))
    return 0.1 / max(my, 1e-12)


def _twf_iterate(inst, theta0, step, k, n_iter):
    theta = hard_threshold(theta0, k)
    for it in range(n_iter):
        theta = hard_threshold(theta - step * risk_gradient(inst, theta), k)
        if not np.all(np.isfinite(theta)):
            return None, it
    return theta, n_iter


def thresholded_wf_run(inst, cfg=None, theta0=None, rng=None, return_info=False):
    """Run thresholded Wirtinger flow and return the final iterate.

    On a non-finite iterate the step is halved and the run restarted, up to
    ``cfg.max_backoff`` times, before :class:`DivergenceError` is raised.
    """
    cfg = cfg or BaselineConfig()
    k = _resolve_k(inst, cfg)
    if theta0 is None:
        theta0 = spectral_init(inst, rng=rng)
    theta0 = np.asarray(theta0, dtype=np.float64)
    if theta0.shape != (inst.p,):
        raise DimensionError(f"theta0 has shape {theta0.shape}, expected ({inst.p},)")
    step = float(cfg.step) if cfg.step is not None else default_step(inst)
    for attempt in range(cfg.max_backoff + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            theta, it = _twf_iterate(inst, theta0, step, k, cfg.n_iter)
        if theta is not None:
            info = {"k": k, "step": step, "backoffs": attempt,
                    "oracle_k": cfg.sparsity_k is None and bool(inst.s_star)}
            return (theta, info) if return_info else theta
        log.warning("thresholded WF diverged at iteration %d with step %.3g; halving", it, step)
        step *= 0.5
    raise DivergenceError("thresholded WF diverged after repeated step halving; "
                          "pass a smaller step", iteration=it)
