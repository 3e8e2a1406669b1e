"""Minimal deterministic SVG line plots: axes, ticks, polylines. No deps.

Plots are a convenience; the CSVs next to them are the contract. Output is
a pure function of the inputs (no timestamps), so reruns are byte-identical.
"""

import math

W, H = 640, 480
ML, MR, MT, MB = 70, 20, 30, 50  # margins
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks_linear(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _ticks_decades(lo, hi):
    lo_e = math.floor(math.log10(lo))
    hi_e = math.ceil(math.log10(hi))
    return [10.0 ** e for e in range(lo_e, hi_e + 1)]


def line_plot_svg(series, xlabel="", ylabel="", title="", loglog=False) -> str:
    """Render [(label, xs, ys), ...] to an SVG string."""
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys)]
    if not pts:
        raise ValueError("nothing to plot")
    xs_all = [p[0] for p in pts]
    ys_all = [p[1] for p in pts]
    if loglog and (min(xs_all) <= 0 or min(ys_all) <= 0):
        raise ValueError("log-log plot needs positive data")

    def tx(v):
        return math.log10(v) if loglog else v

    x_lo, x_hi = tx(min(xs_all)), tx(max(xs_all))
    y_lo, y_hi = tx(min(ys_all)), tx(max(ys_all))
    if x_hi == x_lo:
        x_hi += 1.0
    if y_hi == y_lo:
        y_hi += 1.0

    def px(v):
        return ML + (tx(v) - x_lo) / (x_hi - x_lo) * (W - ML - MR)

    def py(v):
        return H - MB - (tx(v) - y_lo) / (y_hi - y_lo) * (H - MT - MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="monospace" font-size="12">']
    out.append(f'<rect width="{W}" height="{H}" fill="white"/>')
    if title:
        out.append(f'<text x="{W / 2:.1f}" y="18" text-anchor="middle">{title}</text>')
    # axes
    out.append(f'<line x1="{ML}" y1="{H - MB}" x2="{W - MR}" y2="{H - MB}" stroke="black"/>')
    out.append(f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H - MB}" stroke="black"/>')

    if loglog:
        xticks = _ticks_decades(min(xs_all), max(xs_all))
        yticks = _ticks_decades(min(ys_all), max(ys_all))
    else:
        xticks = _ticks_linear(min(xs_all), max(xs_all))
        yticks = _ticks_linear(min(ys_all), max(ys_all))
    for v in xticks:
        if tx(v) < x_lo - 1e-12 or tx(v) > x_hi + 1e-12:
            continue
        x = px(v)
        out.append(f'<line x1="{x:.2f}" y1="{H - MB}" x2="{x:.2f}" y2="{H - MB + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{H - MB + 18}" text-anchor="middle">{v:.3g}</text>')
    for v in yticks:
        if tx(v) < y_lo - 1e-12 or tx(v) > y_hi + 1e-12:
            continue
        y = py(v)
        out.append(f'<line x1="{ML - 5}" y1="{y:.2f}" x2="{ML}" y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{ML - 8}" y="{y + 4:.2f}" text-anchor="end">{v:.3g}</text>')
    if xlabel:
        out.append(f'<text x="{(ML + W - MR) / 2:.1f}" y="{H - 12}" text-anchor="middle">{xlabel}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{(MT + H - MB) / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {(MT + H - MB) / 2:.1f})">{ylabel}</text>')

    for i, (label, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if label:
            ly = MT + 16 * (i + 1)
            out.append(f'<line x1="{W - MR - 120}" y1="{ly - 4}" x2="{W - MR - 100}" '
                       f'y2="{ly - 4}" stroke="{color}" stroke-width="1.5"/>')
            out.append(f'<text x="{W - MR - 95}" y="{ly}">{label}</text>')
    out.append("</svg>\n")
    return "\n".join(out)
