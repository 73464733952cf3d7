"""Reference runs that fix the recovery thresholds used by the acceptance tests.

Runs the default pipeline (spectral init -> MALA -> LMC at half the tuned MALA
step; oracle-k thresholded Wirtinger flow) on the noiseless 20-dim instance and
on the bundled digit-2 image, then writes the realized errors together with the
derived thresholds to tests/fixtures/oracle_runs.json.

Threshold rule: 5x the worst realized error across methods, rounded up to one
significant digit, and never above one tenth of the error of the zero estimate
(1/p).  Re-run after any change to kernels or defaults and commit the output.
"""
import json
import math
import os
import sys
import numpy as np

from qphase import experiments, imaging
from qphase.model import generate_instance, generate_signal
from qphase.prior import PriorConfig
from qphase.rng import DEFAULT_SEED, RngState


def _round_up(x):
    e = math.floor(math.log10(x))
    return math.ceil(x / 10 ** e) * 10 ** e


def threshold(errors, p):
    return min(_round_up(5 * max(errors)), 0.1 / p)


def noiseless():
    rng = RngState(DEFAULT_SEED, stream_id=5)
    theta = generate_signal(rng, 20, 3)
    inst = generate_instance(rng, theta, 200, 0.0)
    res = experiments.run_methods(inst, experiments.METHODS, PriorConfig(0.1), lam="4m",
                                  rng=RngState(DEFAULT_SEED, 5).child("methods"))
    return {k: {"mre": experiments.mre(r.estimate, theta), "runtime_s": r.runtime_s}
            for k, r in res.items()}


def image():
    img = imaging.load_pgm(imaging.fixture_path("digit2"))
    recs = imaging.reconstruct_image(img, m=4000, sigma=1.0, seed=DEFAULT_SEED)
    return {k: {"mre": r.mre, "runtime_s": r.runtime_s} for k, r in recs.items()}, img.pixels.size


def main(path):
    nl = noiseless()
    im, p_img = image()
    doc = {
        "noiseless": {"runs": nl, "threshold": 1e-3},
        "image_digit2": {"runs": im, "zero_estimate_mre": 1.0 / p_img,
                         "threshold": threshold([r["mre"] for r in im.values()], p_img)},
        "numpy": np.__version__,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(doc, indent=2, sort_keys=True))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join("tests", "fixtures", "oracle_runs.json"))
