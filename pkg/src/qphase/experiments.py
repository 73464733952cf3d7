"""Simulation sweeps: replicate, estimate, score with mre, summarise.

Every replication draws its data from the stream ``(seed, rep)`` so that,
for a fixed replication, levels of a sweep share the same underlying draws
(common random numbers).  Each method gets its own child stream, so results
do not depend on the order in which tasks execute or on the worker count.
"""
import csv
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .baseline import LABEL as TWF, BaselineConfig, spectral_init, thresholded_wf_run
from .errors import DimensionError, DivergenceError, DomainError
from .model import generate_instance, generate_signal
from .prior import PriorConfig
from .rng import DEFAULT_SEED, RngState
from .samplers import PhaseRetrievalTarget, SamplerConfig, lmc_run, mala_run

log = logging.getLogger(__name__)

METHODS = ("lmc", "mala", TWF)
FACTORS = ("sample_size", "noise", "sparsity", "varsigma", "lambda")
_RUN_ORDER = ("mala", "lmc", TWF)  # LMC borrows the tuned MALA step

CSV_HEADER = ["factor", "level", "rep", "method", "mre", "runtime_s",
              "acceptance_rate", "lambda", "varsigma", "diverged"]


def mre(theta_hat, theta_star, p=None):
    """``min(||t - t*||^2, ||t + t*||^2) / (p ||t*||^2)``."""
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    theta_star = np.asarray(theta_star, dtype=np.float64)
    if theta_hat.shape != theta_star.shape:
        raise DimensionError(f"shape mismatch {theta_hat.shape} vs {theta_star.shape}")
    p = theta_star.shape[0] if p is None else int(p)
    nrm2 = float(theta_star @ theta_star)
    if nrm2 == 0:
        raise DomainError("mre is undefined for theta_star = 0")
    d = theta_hat - theta_star
    s = theta_hat + theta_star
    return min(float(d @ d), float(s @ s)) / (p * nrm2)


def resolve_lambda(rule, m):
    """Turn a lambda rule into a number.

    Numbers are taken literally; strings may mention ``m``: ``"4m"``,
    ``"m/25"``, ``"2m/25"``, ``"400*m"``.
    """
    if isinstance(rule, (int, float)):
        return float(rule)
    s = str(rule).replace(" ", "").replace("*", "")
    if "m" not in s:
        return float(s)
    num, _, den = s.partition("/")
    coef = num.replace("m", "")
    value = (float(coef) if coef else 1.0) * m
    if den:
        value /= float(den)
    return value


@dataclass
class MethodResult:
    method: str
    estimate: Optional[np.ndarray]
    runtime_s: float
    acceptance_rate: Optional[float] = None
    gamma: Optional[float] = None
    diverged: bool = False
    info: dict = field(default_factory=dict)


def run_methods(inst, methods=METHODS, prior=None, lam="4m", n_iter=30000, burn_in=1000,
                thin=1, baseline_iter=5000, rng=None, theta0=None, gamma=None):
    """Run the requested estimators on one instance with the default pipeline.

    All methods start from the spectral initialisation.  MALA runs first and
    adapts its step; LMC then uses half the tuned MALA step (or its own
    curvature heuristic when MALA is not requested).  The baseline uses the
    instance's ``s_star`` as its sparsity level when known.
    """
    prior = prior or PriorConfig()
    rng = rng if rng is not None else RngState(DEFAULT_SEED)
    lam_v = resolve_lambda(lam, inst.m)
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise DomainError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
    if theta0 is None and methods:
        theta0 = spectral_init(inst, rng=rng.child("init"))
    out = {}
    mala_gamma = None
    for meth in _RUN_ORDER:
        if meth not in methods:
            continue
        t0 = time.perf_counter()
        try:
            if meth == "mala":
                cfg = SamplerConfig(lam=lam_v, gamma=gamma, n_iter=n_iter, burn_in=burn_in, thin=thin)
                ch = mala_run(inst, prior, cfg, theta0, rng=rng.child("mala"))
                mala_gamma = ch.final_gamma
                res = MethodResult(meth, ch.posterior_mean, 0.0, ch.acceptance_rate, ch.final_gamma,
                                   info={"warnings": ch.warnings})
            elif meth == "lmc":
                ch, halvings = _lmc_with_backoff(inst, prior, lam_v, gamma, mala_gamma, n_iter,
                                                 burn_in, thin, theta0, rng.child("lmc"))
                res = MethodResult(meth, ch.posterior_mean, 0.0, 1.0, ch.final_gamma,
                                   info={"step_halvings": halvings})
            else:
                theta, info = thresholded_wf_run(inst, BaselineConfig(n_iter=baseline_iter),
                                                 theta0=theta0, return_info=True)
                res = MethodResult(meth, theta, 0.0, None, info["step"], info=info)
        except DivergenceError as exc:
            log.warning("%s diverged: %s", meth, exc)
            res = MethodResult(meth, None, 0.0, None, None, diverged=True, info={"error": str(exc)})
        res.runtime_s = time.perf_counter() - t0
        out[meth] = res
    return out


def _lmc_with_backoff(inst, prior, lam, gamma, mala_gamma, n_iter, burn_in, thin, theta0, rng,
                      max_halvings=10):
    """LMC with the default step; on divergence halve the step and rerun
    (same stream) up to ``max_halvings`` times before giving up."""
    if gamma is None:
        gamma = 0.5 * mala_gamma if mala_gamma else \
            PhaseRetrievalTarget(inst, prior, lam).default_gamma("lmc")
    for k in range(max_halvings + 1):
        cfg = SamplerConfig(lam=lam, gamma=gamma, n_iter=n_iter, burn_in=burn_in, thin=thin)
        try:
            return lmc_run(inst, prior, cfg, theta0, rng=rng), k
        except DivergenceError as exc:
            if k == max_halvings:
                raise
            log.info("%s; retrying with gamma=%.3g", exc, gamma / 2)
            gamma /= 2


# --- sweeps ----------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    factor: str
    levels: tuple
    fixed: dict
    n_reps: int = 10
    methods: tuple = METHODS
    seed: int = DEFAULT_SEED
    n_iter: int = 3000
    burn_in: Optional[int] = None
    baseline_iter: int = 5000
    thin: int = 1

    def __post_init__(self):
        if self.factor not in FACTORS:
            raise DomainError(f"unknown factor {self.factor!r}; choose from {FACTORS}")
        lv = tuple(self.levels)
        if not lv:
            raise DomainError("levels must be non-empty")
        if any(b <= a for a, b in zip(lv, lv[1:])):
            raise DomainError("levels must be strictly increasing")
        object.__setattr__(self, "levels", lv)
        if self.n_reps < 1:
            raise DomainError("n_reps must be >= 1")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise DomainError(f"methods must be a non-empty subset of {METHODS}")
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in self.methods))

    @property
    def effective_burn_in(self):
        return self.burn_in if self.burn_in is not None else min(1000, self.n_iter // 3)

    def setting(self, level):
        """Full parameter dict at one level of the factor."""
        s = dict(self.fixed)
        key = {"sample_size": "m", "noise": "sigma", "sparsity": "s_star",
               "varsigma": "varsigma", "lambda": "lambda"}[self.factor]
        s[key] = f"{level}m" if self.factor == "lambda" else level
        return s


_PRESETS = {
    "sample-size": ("sample_size", (100, 200, 500, 1000, 2000),
                    dict(p=100, s_star=10, sigma=1.0, varsigma=0.1, **{"lambda": "4m"}), METHODS),
    "noise": ("noise", (0.5, 1.0, 2.0, 5.0, 10.0),
              dict(m=500, p=100, s_star=10, varsigma=0.1, **{"lambda": "4m"}), METHODS),
    "sparsity": ("sparsity", (5, 20, 100, 250, 500),
                 dict(m=1000, p=500, sigma=1.0, varsigma=0.1, **{"lambda": "4m"}), METHODS),
    "varsigma": ("varsigma", (0.0001, 0.01, 0.1, 1.0, 10.0),
                 dict(m=200, p=100, s_star=10, sigma=1.0, **{"lambda": "4m"}), ("lmc", "mala")),
    # lambda levels are multiples of m: m/25, 2m/25, 4m, 100m, 400m
    "lambda": ("lambda", (0.04, 0.08, 4.0, 100.0, 400.0),
               dict(m=50, p=100, s_star=10, sigma=1.0, varsigma=0.1), ("lmc", "mala")),
}

PRESETS = tuple(_PRESETS)


def preset(name, paper_scale=False, **overrides):
    """Sweep spec for one of the published designs.

    Desk scale is 10 replications x 3000 iterations; ``paper_scale`` restores
    100 replications x 30000 iterations (1000 burn-in, thinning 10 to bound
    memory).  Keyword overrides replace SweepSpec fields.
    """
    if name not in _PRESETS:
        raise DomainError(f"unknown preset {name!r}; choose from {PRESETS}")
    factor, levels, fixed, methods = _PRESETS[name]
    kw = dict(factor=factor, levels=levels, fixed=dict(fixed), methods=methods)
    if paper_scale:
        kw.update(n_reps=100, n_iter=30000, burn_in=1000, thin=10)
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return SweepSpec(**kw)


@dataclass(frozen=True)
class Record:
    factor: str
    level: float
    rep: int
    method: str
    mre: float
    runtime_s: float
    acceptance_rate: Optional[float]
    lam: float
    varsigma: float
    diverged: bool


@dataclass
class SweepResult:
    spec: SweepSpec
    records: list

    @property
    def n_diverged(self):
        return sum(r.diverged for r in self.records)


def _run_task(args):
    spec, li, rep = args
    level = spec.levels[li]
    s = spec.setting(level)
    m, p, s_star = int(s["m"]), int(s["p"]), int(s["s_star"])
    data_rng = RngState(spec.seed, stream_id=rep)
    theta_star = generate_signal(data_rng, p, s_star)
    inst = generate_instance(data_rng, theta_star, m, float(s["sigma"]))
    prior = PriorConfig(varsigma=float(s["varsigma"]))
    lam = resolve_lambda(s["lambda"], m)
    res = run_methods(inst, spec.methods, prior=prior, lam=lam, n_iter=spec.n_iter,
                      burn_in=spec.effective_burn_in, thin=spec.thin,
                      baseline_iter=spec.baseline_iter,
                      rng=RngState(spec.seed, stream_id=rep).child("methods", li))
    out = []
    for meth in spec.methods:
        r = res[meth]
        err = math.inf if r.diverged else mre(r.estimate, theta_star)
        out.append(Record(spec.factor, level, rep, meth, err, r.runtime_s, r.acceptance_rate,
                          lam, prior.varsigma, r.diverged))
    return li, rep, out


def default_workers():
    """Worker count from ``QPHASE_THREADS`` (0 or unset means all CPUs)."""
    try:
        n = int(os.environ.get("QPHASE_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def run_sweep(spec, workers=None):
    """Run every (level, replication) task and collect tidy records."""
    tasks = [(spec, li, rep) for li in range(len(spec.levels)) for rep in range(spec.n_reps)]
    workers = default_workers() if workers is None else max(1, int(workers))
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_run_task, tasks))
    else:
        done = [_run_task(t) for t in tasks]
    done.sort(key=lambda t: (t[0], t[1]))
    records = [r for _, _, recs in done for r in recs]
    result = SweepResult(spec, records)
    if result.n_diverged:
        log.warning("%d of %d runs diverged", result.n_diverged, len(records))
    return result


# --- output ---------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def write_csv(result, path, runtime=False):
    """Write records to ``path``.

    Wall-clock runtimes are only written when ``runtime`` is true; otherwise
    the column is left empty so that the file is a pure function of the
    parameters and seed.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in result.records:
            w.writerow([r.factor, _fmt(r.level), r.rep, r.method, _fmt(r.mre),
                        f"{r.runtime_s:.6f}" if runtime else "",
                        _fmt(r.acceptance_rate), _fmt(r.lam), _fmt(r.varsigma), _fmt(r.diverged)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass(frozen=True)
class SummaryRow:
    level: float
    method: str
    n: int
    n_diverged: int
    min: float
    q25: float
    median: float
    q75: float
    max: float


def summarize(result):
    """Five-number summaries per (level, method); diverged runs are counted
    but excluded.  Quantiles interpolate linearly between order statistics."""
    records = result.records if isinstance(result, SweepResult) else list(result)
    groups = {}
    for r in records:
        groups.setdefault((r.level, r.method), []).append(r)
    order = {m: i for i, m in enumerate(METHODS)}
    rows = []
    for (level, meth) in sorted(groups, key=lambda k: (k[0], order.get(k[1], 99), k[1])):
        recs = groups[(level, meth)]
        ok = np.array([r.mre for r in recs if not r.diverged], dtype=np.float64)
        n_div = len(recs) - ok.size
        if ok.size:
            q = np.quantile(ok, [0.0, 0.25, 0.5, 0.75, 1.0])
        else:
            q = [math.nan] * 5
        rows.append(SummaryRow(level, meth, int(ok.size), n_div, *map(float, q)))
    return rows


def median_table(summary):
    """``{method: {level: median}}`` view of a summary."""
    out = {}
    for row in summary:
        out.setdefault(row.method, {})[row.level] = row.median
    return out


def count_inversions(values):
    """Number of adjacent increases in a sequence meant to be non-increasing."""
    return sum(1 for a, b in zip(values, values[1:]) if b > a)
