"""Image reconstruction: a grayscale picture serves as the sparse signal."""
import csv
import logging
import math
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DomainError
from .experiments import METHODS, _fmt, mre, run_methods
from .model import generate_instance
from .pgm import read_pgm, write_pgm
from .prior import PriorConfig
from .rng import DEFAULT_SEED, RngState

log = logging.getLogger(__name__)

MAX_PIXELS = 100_000


@dataclass(frozen=True)
class ImageSignal:
    width: int
    height: int
    pixels: np.ndarray  # row-major, length width * height
    nnz_fraction: float

    def __post_init__(self):
        pix = np.asarray(self.pixels, dtype=np.float64).reshape(-1)
        if pix.shape[0] != self.width * self.height:
            raise DomainError("pixel count does not match width x height")
        object.__setattr__(self, "pixels", pix)

    @classmethod
    def from_array(cls, arr, normalize=True):
        arr = np.asarray(arr, dtype=np.float64)
        h, w = arr.shape
        pix = arr.reshape(-1).copy()
        if normalize:
            nrm = float(np.linalg.norm(pix))
            if nrm == 0:
                raise DomainError("cannot normalise an all-zero image")
            pix /= nrm
        return cls(w, h, pix, float(np.count_nonzero(pix)) / pix.size)

    def as_array(self):
        return self.pixels.reshape(self.height, self.width)


def load_pgm(path):
    """Read a PGM, scale to [0, 1] by its maxval and normalise to unit L2 norm."""
    raw, maxval = read_pgm(path)
    return ImageSignal.from_array(raw / maxval, normalize=True)


def save_pgm(img, path, clamp_negative=False):
    """Write ``img`` as P2 with maxval 255.

    Pixels are mapped affinely from ``[min, max]`` onto ``[0, 255]`` and
    rounded; a constant image maps to all zeros.  ``clamp_negative`` sets
    negative values to zero first (used for reconstructions).
    """
    pix = img.as_array().astype(np.float64)
    if not np.all(np.isfinite(pix)):
        raise DomainError("cannot save non-finite pixels")
    if clamp_negative:
        pix = np.maximum(pix, 0.0)
    lo, hi = float(pix.min()), float(pix.max())
    if hi > lo:
        q = np.rint((pix - lo) / (hi - lo) * 255.0).astype(np.int64)
    else:
        q = np.zeros(pix.shape, dtype=np.int64)
    write_pgm(path, q, 255)


def fixture_path(name):
    """Path of a bundled fixture, e.g. ``"digit2"`` or ``"digit4"``."""
    fname = name if name.endswith(".pgm") else f"{name}.pgm"
    return str(resources.files("qphase").joinpath("data").joinpath(fname))


@dataclass
class Reconstruction:
    method: str
    image: ImageSignal
    mre: float
    runtime_s: float
    diverged: bool = False


def reconstruct_image(img, m=4000, sigma=1.0, methods=METHODS, seed=DEFAULT_SEED,
                      n_iter=30000, burn_in=1000, baseline_iter=5000, varsigma=0.1,
                      lam="4m", max_pixels=MAX_PIXELS):
    """Measure ``img`` with ``m`` Gaussian intensity measurements and reconstruct it.

    Each estimate is sign-aligned with the truth before reshaping.  Returns
    ``{method: Reconstruction}``.
    """
    methods = tuple(methods)
    if m < 1:
        raise DomainError(f"invalid measurement count m={m}")
    p = img.width * img.height
    if max_pixels is not None and p > max_pixels:
        raise DomainError(f"image has {p} pixels, above the size guard {max_pixels}")
    if not methods:
        return {}
    theta_star = img.pixels
    rng = RngState(seed)
    inst = generate_instance(rng.child("data"), theta_star, m, sigma)
    res = run_methods(inst, methods, prior=PriorConfig(varsigma), lam=lam, n_iter=n_iter,
                      burn_in=burn_in, baseline_iter=baseline_iter, rng=rng.child("methods"))
    out = {}
    for meth in methods:
        r = res[meth]
        if r.diverged:
            out[meth] = Reconstruction(meth, None, math.inf, r.runtime_s, True)
            continue
        est = np.array(r.estimate)
        if float(est @ theta_star) < 0:
            est = -est
        rec = ImageSignal(img.width, img.height, est,
                          float(np.count_nonzero(est)) / p)
        out[meth] = Reconstruction(meth, rec, mre(est, theta_star), r.runtime_s)
    return out


def write_outputs(recons, out_dir, truth=None, runtime=False):
    """Write ``<method>.pgm`` per method and ``metrics.csv``."""
    os.makedirs(out_dir, exist_ok=True)
    if truth is not None:
        save_pgm(truth, os.path.join(out_dir, "truth.pgm"))
    with open(os.path.join(out_dir, "metrics.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "mre", "runtime_s", "diverged"])
        for meth, rec in recons.items():
            if rec.image is not None:
                save_pgm(rec.image, os.path.join(out_dir, f"{meth}.pgm"), clamp_negative=True)
            w.writerow([meth, _fmt(rec.mre), f"{rec.runtime_s:.6f}" if runtime else "",
                        _fmt(rec.diverged)])
