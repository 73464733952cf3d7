"""Grouped boxplots rendered straight to SVG from five-number summaries.

No plotting library is involved, so the bytes are a pure function of the
summary rows; numbers are written with fixed precision.
"""
import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")

WIDTH, HEIGHT = 720, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 60


def _fmt_level(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else f"{v:g}"


def _ticks(lo, hi, log):
    if log:
        return [10.0 ** e for e in range(math.floor(lo), math.ceil(hi) + 1)]
    span = hi - lo or 1.0
    step = 10 ** math.floor(math.log10(span / 5))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= 6:
            step *= mult
            break
    start = math.floor(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step) + 2)]


def render_boxplots(summary, out_path=None, title="", xlabel="level", ylabel="mre"):
    """Render summary rows (objects with level, method, min..max) as SVG.

    Returns the document text and, if ``out_path`` is given, writes it there.
    The y axis is logarithmic when every plotted value is positive.
    """
    rows = [r for r in summary if r.n > 0 and all(math.isfinite(v) for v in
                                                  (r.min, r.q25, r.median, r.q75, r.max))]
    if not rows:
        raise ValueError("nothing to plot: summary has no finite groups")
    levels = sorted({r.level for r in rows})
    methods = []
    for r in rows:
        if r.method not in methods:
            methods.append(r.method)
    vals = [v for r in rows for v in (r.min, r.max)]
    log = min(vals) > 0
    if log:
        lo, hi = math.log10(min(vals)), math.log10(max(vals))
        if hi - lo < 1e-9:
            lo, hi = lo - 0.5, hi + 0.5
        tf = math.log10
    else:
        lo, hi = min(vals), max(vals)
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        tf = float
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    plot_w = WIDTH - LEFT - RIGHT
    plot_h = HEIGHT - TOP - BOTTOM

    def ypix(v):
        return TOP + plot_h * (1.0 - (tf(v) - lo) / (hi - lo))

    group_w = plot_w / len(levels)
    box_w = 0.8 * group_w / len(methods)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="20" text-anchor="middle" font-size="14">'
                   f'{escape(title)}</text>')
    # axes
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + plot_h}" stroke="black"/>')
    out.append(f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" y2="{TOP + plot_h}" stroke="black"/>')
    for t in _ticks(lo, hi, log):
        tv = math.log10(t) if log else t
        if not lo <= tv <= hi:
            continue
        y = ypix(t)
        label = f"1e{int(round(math.log10(t)))}" if log else f"{t:g}"
        out.append(f'<line x1="{LEFT - 4}" y1="{y:.2f}" x2="{LEFT}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y + 4:.2f}" text-anchor="end">{label}</text>')
    for gi, level in enumerate(levels):
        cx = LEFT + group_w * (gi + 0.5)
        out.append(f'<text x="{cx:.2f}" y="{TOP + plot_h + 18}" text-anchor="middle">'
                   f'{escape(_fmt_level(level))}</text>')
    for r in rows:
        gi = levels.index(r.level)
        mi = methods.index(r.method)
        x0 = LEFT + group_w * gi + 0.1 * group_w + box_w * mi
        xc = x0 + box_w / 2
        color = PALETTE[mi % len(PALETTE)]
        y_min, y_q1, y_med, y_q3, y_max = (ypix(v) for v in (r.min, r.q25, r.median, r.q75, r.max))
        out.append(f'<g class="box" data-level="{escape(_fmt_level(r.level))}" data-method="{escape(r.method)}">')
        out.append(f'<line x1="{xc:.2f}" y1="{y_max:.2f}" x2="{xc:.2f}" y2="{y_q3:.2f}" stroke="{color}"/>')
        out.append(f'<line x1="{xc:.2f}" y1="{y_q1:.2f}" x2="{xc:.2f}" y2="{y_min:.2f}" stroke="{color}"/>')
        out.append(f'<rect x="{x0 + 0.1 * box_w:.2f}" y="{y_q3:.2f}" width="{0.8 * box_w:.2f}" '
                   f'height="{max(y_q1 - y_q3, 0.5):.2f}" fill="{color}" fill-opacity="0.35" stroke="{color}"/>')
        out.append(f'<line x1="{x0 + 0.1 * box_w:.2f}" y1="{y_med:.2f}" x2="{x0 + 0.9 * box_w:.2f}" '
                   f'y2="{y_med:.2f}" stroke="black" stroke-width="1.5"/>')
        out.append('</g>')
    # legend
    for mi, meth in enumerate(methods):
        lx = LEFT + 10 + 120 * mi
        ly = HEIGHT - 18
        out.append(f'<rect x="{lx}" y="{ly - 9}" width="10" height="10" fill="{PALETTE[mi % len(PALETTE)]}"/>')
        out.append(f'<text x="{lx + 14}" y="{ly}">{escape(meth)}</text>')
    out.append(f'<text x="{LEFT + plot_w / 2:.2f}" y="{TOP + plot_h + 34}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + plot_h / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + plot_h / 2:.2f})">{escape(ylabel)}</text>')
    out.append('</svg>')
    doc = "\n".join(out) + "\n"
    if out_path is not None:
        with open(out_path, "w") as fh:
            fh.write(doc)
    return doc
