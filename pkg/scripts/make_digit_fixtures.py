"""Regenerate the bundled digit-shaped PGM fixtures.

Each fixture is a stroke drawing rasterised so that exactly ``nnz`` pixels
are lit: pixels are ranked by distance to the strokes (ties by raster index)
and the closest ``nnz`` get an intensity that fades with distance.

    python scripts/make_digit_fixtures.py src/qphase/data
"""
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))
from qphase.pgm import write_pgm  # noqa: E402

# strokes in unit coordinates (x right, y down)
DIGIT2 = [
    [(0.18, 0.28), (0.25, 0.14), (0.42, 0.07), (0.62, 0.08), (0.78, 0.18), (0.80, 0.33),
     (0.70, 0.48), (0.50, 0.62), (0.30, 0.76), (0.16, 0.90)],
    [(0.16, 0.90), (0.50, 0.90), (0.86, 0.88)],
]
DIGIT4 = [
    [(0.62, 0.06), (0.42, 0.32), (0.22, 0.56), (0.12, 0.66)],
    [(0.12, 0.66), (0.50, 0.66), (0.90, 0.65)],
    [(0.66, 0.30), (0.66, 0.62), (0.66, 0.95)],
]


def _seg_dist(px, py, a, b):
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    t = np.clip(t, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def render(strokes, width, height, nnz):
    ys, xs = np.mgrid[0:height, 0:width]
    px = (xs + 0.5) / width
    py = (ys + 0.5) / height
    d = np.full((height, width), np.inf)
    for poly in strokes:
        for a, b in zip(poly, poly[1:]):
            d = np.minimum(d, _seg_dist(px, py, a, b))
    flat = d.reshape(-1)
    order = np.argsort(flat, kind="stable")
    keep = order[:nnz]
    dmax = flat[keep].max()
    vals = np.zeros(flat.shape, dtype=np.int64)
    inten = 1.0 - 0.8 * flat[keep] / dmax
    vals[keep] = np.clip(np.rint(255 * inten), 1, 255).astype(np.int64)
    vals[order[0]] = 255
    return vals.reshape(height, width)


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    # 150 / 352 = 42.6 %, 150 / 440 = 34.1 %
    for name, strokes, w, h in (("digit2", DIGIT2, 16, 22), ("digit4", DIGIT4, 20, 22)):
        img = render(strokes, w, h, 150)
        write_pgm(os.path.join(out_dir, f"{name}.pgm"), img)
        print(f"{name}: {w}x{h}, nnz={np.count_nonzero(img)} ({np.count_nonzero(img) / img.size:.3%})")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join("src", "qphase", "data"))
