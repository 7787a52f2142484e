"""Self-contained SVG line charts for result files.

No plotting dependency: the chart is assembled as plain SVG markup with
inline axes, tick labels, and a legend. One polyline per result series
(scheme, plus the crossover probability when it is not the swept variable),
NMSE in dB on a linear y axis.
"""

import math

_WIDTH, _HEIGHT = 720, 480
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 70, 160, 40, 55
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#e377c2")

_X_FIELDS = ("epsilon", "alpha", "B")
_X_LABELS = {"epsilon": "bit crossover probability", "alpha": "measurement rate N/M", "B": "quantization rate (bits/vector)"}


def detect_sweep_field(rows):
    """The swept variable: the candidate field with the most distinct values."""
    best, best_count = None, 1
    for name in _X_FIELDS:
        count = len({getattr(r, name) for r in rows})
        if count > best_count:
            best, best_count = name, count
    if best is None:
        raise ValueError("no swept variable: epsilon, alpha and B are all constant")
    return best


def build_series(rows, x_field=None):
    """Group rows into (label, xs, ys) polyline series sorted along x."""
    if not rows:
        raise ValueError("no result rows to plot")
    x_field = x_field or detect_sweep_field(rows)
    if x_field not in _X_FIELDS:
        raise ValueError(f"x_field must be one of {_X_FIELDS}, got {x_field!r}")
    extra = [f for f in _X_FIELDS if f != x_field and len({getattr(r, f) for r in rows}) > 1]
    if len({r.seed for r in rows}) > 1:
        extra.append("seed")

    groups = {}
    for row in rows:
        label = row.scheme
        for f in extra:
            label += f" {f}={getattr(row, f):g}" if f != "seed" else f" seed={row.seed}"
        groups.setdefault(label, []).append((getattr(row, x_field), row.nmse_db))
    series = []
    for label in sorted(groups):
        pts = sorted(groups[label])
        series.append((label, [p[0] for p in pts], [p[1] for p in pts]))
    return x_field, series


def _ticks(lo, hi, count=6):
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(count - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if mag * mult >= raw:
            step = mag * mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return ticks


def _fmt(v):
    return f"{v:g}"


def render_chart(series, x_label, y_label="NMSE (dB)", title=""):
    """Render (label, xs, ys) series to an SVG document string."""
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    y_pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - y_pad, y_hi + y_pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(x):
        return _MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return _MARGIN_T + (y_hi - y) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333"/>',
    ]
    if title:
        parts.append(f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="24" text-anchor="middle" font-size="15">{title}</text>')

    for t in _ticks(x_lo, x_hi):
        if not x_lo <= t <= x_hi:
            continue
        x = px(t)
        parts.append(f'<line x1="{x:.1f}" y1="{_MARGIN_T}" x2="{x:.1f}" y2="{_MARGIN_T + plot_h}" stroke="#ddd"/>')
        parts.append(f'<text x="{x:.1f}" y="{_MARGIN_T + plot_h + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        if not y_lo <= t <= y_hi:
            continue
        y = py(t)
        parts.append(f'<line x1="{_MARGIN_L}" y1="{y:.1f}" x2="{_MARGIN_L + plot_w}" y2="{y:.1f}" stroke="#ddd"/>')
        parts.append(f'<text x="{_MARGIN_L - 8}" y="{y + 4:.1f}" text-anchor="end">{_fmt(t)}</text>')

    parts.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_HEIGHT - 12}" text-anchor="middle">{x_label}</text>'
    )
    parts.append(
        f'<text x="20" y="{_MARGIN_T + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {_MARGIN_T + plot_h / 2:.1f})">{y_label}</text>'
    )

    legend_x = _MARGIN_L + plot_w + 12
    for k, (label, xs, ys) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{points}" fill="none" stroke="{color}" stroke-width="2"/>')
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = _MARGIN_T + 14 + 18 * k
        parts.append(f'<line x1="{legend_x}" y1="{ly - 4}" x2="{legend_x + 22}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{legend_x + 28}" y="{ly}">{label}</text>')

    parts.append("</svg>")
    return "\n".join(parts)


def chart_rows(rows, x_field=None, title=""):
    """Build the chart straight from :class:`~cscovq.evaluation.ResultRow`s."""
    x_field, series = build_series(rows, x_field)
    return render_chart(series, x_label=_X_LABELS[x_field], title=title)


def write_chart(path, rows, x_field=None, title=""):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(chart_rows(rows, x_field=x_field, title=title))
