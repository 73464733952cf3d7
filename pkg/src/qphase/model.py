"""Quadratic measurement model ``y_j = (A_j . theta*)^2 + eps_j``.

Holds the problem container, synthetic data generation, the quartic
empirical risk and its gradient, and on-disk (CSV) serialisation of instances.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, DomainError, SparsityError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProblemInstance:
    """Sensing matrix ``A`` (m x p), observations ``y`` and optional truth."""

    A: np.ndarray
    y: np.ndarray
    theta_star: Optional[np.ndarray] = None
    sigma: Optional[float] = None
    s_star: Optional[int] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.float64).reshape(-1)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise DimensionError(f"A must be a non-empty 2-D array, got shape {A.shape}")
        if y.shape[0] != A.shape[0]:
            raise DimensionError(f"y has {y.shape[0]} entries but A has {A.shape[0]} rows")
        A.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "y", y)
        if self.theta_star is not None:
            ts = np.array(self.theta_star, dtype=np.float64).reshape(-1)
            if ts.shape[0] != A.shape[1]:
                raise DimensionError("theta_star length does not match the columns of A")
            ts.flags.writeable = False
            object.__setattr__(self, "theta_star", ts)
            if self.s_star is None:
                object.__setattr__(self, "s_star", int(np.count_nonzero(ts)))

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.A.shape[1]


def _check_theta(inst, theta):
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (inst.p,):
        raise DimensionError(f"theta has shape {theta.shape}, expected ({inst.p},)")
    return theta


def generate_signal(state, p, s_star):
    """Draw an ``s_star``-sparse unit-norm signal of length ``p``.

    All ``p`` coordinates are drawn i.i.d. N(0, 1); ``p - s_star`` of them,
    picked uniformly without replacement, are then zeroed and the vector is
    rescaled to unit Euclidean norm.
    """
    p, s_star = int(p), int(s_star)
    if p < 1:
        raise DomainError(f"invalid dimension p={p}")
    if not 1 <= s_star <= p:
        raise SparsityError(f"sparsity s_star={s_star} must satisfy 1 <= s_star <= p={p}")
    theta = state.normal_vector(p)
    # partial Fisher-Yates: the first p - s_star slots of the shuffle are zeroed
    idx = np.arange(p)
    gen = state.generator
    for i in range(p - s_star):
        j = int(gen.integers(i, p))
        idx[i], idx[j] = idx[j], idx[i]
    theta[idx[: p - s_star]] = 0.0
    return theta / np.linalg.norm(theta)


def generate_instance(state, theta_star, m, sigma):
    """Draw ``m`` Gaussian sensing rows and noisy intensity observations.

    The noise vector is always drawn (even for ``sigma = 0``) so that the
    stream layout does not depend on the noise level.
    """
    m = int(m)
    if m < 1:
        raise DomainError(f"invalid measurement count m={m}")
    sigma = float(sigma)
    if not sigma >= 0:
        raise DomainError(f"noise level sigma={sigma} must be >= 0")
    theta_star = np.asarray(theta_star, dtype=np.float64).reshape(-1)
    p = theta_star.shape[0]
    A = state.normal_matrix(m, p)
    eps = state.generator.standard_normal(m)
    y = (A @ theta_star) ** 2 + sigma * eps
    return ProblemInstance(A, y, theta_star=theta_star, sigma=sigma,
                           s_star=int(np.count_nonzero(theta_star)))


def empirical_risk(inst, theta):
    """``r(theta) = (1/4m) sum_j ((A_j . theta)^2 - y_j)^2``."""
    theta = _check_theta(inst, theta)
    res = (inst.A @ theta) ** 2 - inst.y
    return float(res @ res) / (4.0 * inst.m)


def risk_gradient(inst, theta):
    """``(1/m) sum_j ((A_j . theta)^2 - y_j) (A_j . theta) A_j``."""
    theta = _check_theta(inst, theta)
    u = inst.A @ theta
    return (inst.A.T @ ((u * u - inst.y) * u)) / inst.m


@dataclass(frozen=True)
class AssumptionReport:
    realized_bound: float
    min_eig_proxy: float


def assumption_diagnostics(inst, theta):
    """Empirical stand-ins for the design assumptions at ``theta``.

    ``realized_bound`` is ``max_j |A_j . theta|`` (the bounded-design constant
    realised on this sample); ``min_eig_proxy`` is the smallest eigenvalue of
    ``A^T A / m``, a proxy for the small-ball constant.  Nothing is enforced.
    """
    theta = _check_theta(inst, theta)
    bound = float(np.max(np.abs(inst.A @ theta)))
    eig = float(np.linalg.eigvalsh(inst.A.T @ inst.A / inst.m)[0])
    return AssumptionReport(bound, max(eig, 0.0))


# --- serialisation -------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def write_matrix_csv(path, arr):
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    with open(path, "w", newline="") as fh:
        for row in arr:
            fh.write(",".join(_fmt(v) for v in row))
            fh.write("\n")


def read_matrix_csv(path):
    arr = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    return arr


def write_meta(path, items):
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k}={v}\n")


def read_meta(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            k, _, v = line.partition("=")
            out[k.strip()] = v.strip()
    return out


def save_instance(inst, out_dir, seed=None):
    """Write ``A.csv``, ``y.csv``, ``meta.txt`` (and ``theta_star.csv``)."""
    os.makedirs(out_dir, exist_ok=True)
    write_matrix_csv(os.path.join(out_dir, "A.csv"), inst.A)
    write_matrix_csv(os.path.join(out_dir, "y.csv"), inst.y.reshape(-1, 1))
    if inst.theta_star is not None:
        write_matrix_csv(os.path.join(out_dir, "theta_star.csv"), inst.theta_star.reshape(-1, 1))
    meta = {"m": inst.m, "p": inst.p,
            "s_star": "" if inst.s_star is None else inst.s_star,
            "sigma": "" if inst.sigma is None else _fmt(inst.sigma),
            "seed": "" if seed is None else seed}
    write_meta(os.path.join(out_dir, "meta.txt"), meta)


def load_instance(in_dir):
    A = read_matrix_csv(os.path.join(in_dir, "A.csv"))
    y = read_matrix_csv(os.path.join(in_dir, "y.csv")).reshape(-1)
    meta_path = os.path.join(in_dir, "meta.txt")
    meta = read_meta(meta_path) if os.path.exists(meta_path) else {}
    ts_path = os.path.join(in_dir, "theta_star.csv")
    theta_star = read_matrix_csv(ts_path).reshape(-1) if os.path.exists(ts_path) else None
    sigma = float(meta["sigma"]) if meta.get("sigma") else None
    s_star = int(meta["s_star"]) if meta.get("s_star") else None
    if "m" in meta and int(meta["m"]) != A.shape[0]:
        raise DimensionError("meta.txt m disagrees with A.csv")
    if "p" in meta and int(meta["p"]) != A.shape[1]:
        raise DimensionError("meta.txt p disagrees with A.csv")
    return ProblemInstance(A, y, theta_star=theta_star, sigma=sigma, s_star=s_star, meta=meta)
