"""Minimal static SVG charts (deterministic output, no plotting backend)."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .stats import CdRanking

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
            "#7f7f7f", "#bcbd22", "#17becf")


def _svg(width, height, body) -> str:
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">\n'
            + "\n".join(body) + "\n</svg>\n")


def cd_diagram_svg(cd: CdRanking, width: int = 760) -> str:
    """Rank axis with one label per model and a bar for every clique."""
    k = len(cd.labels)
    ordered = cd.ordered()
    left, right, axis_y = 170, width - 170, 40
    scale = (right - left) / max(k - 1, 1)
    x_of = lambda r: left + (r - 1) * scale
    n_left = (k + 1) // 2
    height = axis_y + 40 + 20 * max(n_left, k - n_left) + 20 * len(cd.cliques) + 20
    body = [f'<line x1="{left}" y1="{axis_y}" x2="{right}" y2="{axis_y}" stroke="black"/>']
    for r in range(1, k + 1):
        x = x_of(r)
        body.append(f'<line x1="{x:.2f}" y1="{axis_y - 5}" x2="{x:.2f}" y2="{axis_y}" stroke="black"/>')
        body.append(f'<text x="{x:.2f}" y="{axis_y - 10}" text-anchor="middle">{r}</text>')
    clique_top = axis_y + 12
    for i, clique in enumerate(cd.cliques):
        ranks = [cd.rank_of(m) for m in clique]
        y = clique_top + 8 * i
        body.append(f'<line x1="{x_of(min(ranks)) - 3:.2f}" y1="{y}" x2="{x_of(max(ranks)) + 3:.2f}" '
                    f'y2="{y}" stroke="black" stroke-width="4"/>')
    label_top = clique_top + 8 * len(cd.cliques) + 16
    for i, (name, r) in enumerate(ordered):
        x = x_of(r)
        if i < n_left:
            y = label_top + 20 * i
            body.append(f'<polyline points="{x:.2f},{axis_y} {x:.2f},{y} {left - 10:.2f},{y}" '
                        f'fill="none" stroke="black"/>')
            body.append(f'<text x="{left - 14}" y="{y + 4}" text-anchor="end">'
                        f'{escape(name)} ({r:.2f})</text>')
        else:
            y = label_top + 20 * (k - 1 - i)
            body.append(f'<polyline points="{x:.2f},{axis_y} {x:.2f},{y} {right + 10:.2f},{y}" '
                        f'fill="none" stroke="black"/>')
            body.append(f'<text x="{right + 14}" y="{y + 4}" text-anchor="start">'
                        f'({r:.2f}) {escape(name)}</text>')
    return _svg(width, height, body)


def line_chart_svg(x_labels, series: dict, title: str = "", y_label: str = "",
                   width: int = 560, height: int = 320) -> str:
    """One polyline per series over categorical x positions."""
    left, right, top, bottom = 60, width - 150, 30, height - 40
    values = [v for ys in series.values() for v in ys if v == v]
    lo, hi = (min(values), max(values)) if values else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0
    n = len(x_labels)
    x_of = lambda i: left + (right - left) * (i / max(n - 1, 1))
    y_of = lambda v: bottom - (bottom - top) * (v - lo) / (hi - lo)
    body = [f'<text x="{width / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>',
            f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
            f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
            f'<text x="{left - 8}" y="{top + 4}" text-anchor="end">{hi:.3g}</text>',
            f'<text x="{left - 8}" y="{bottom}" text-anchor="end">{lo:.3g}</text>',
            f'<text x="14" y="{(top + bottom) / 2:.1f}" transform="rotate(-90 14 {(top + bottom) / 2:.1f})" '
            f'text-anchor="middle">{escape(y_label)}</text>']
    for i, lab in enumerate(x_labels):
        body.append(f'<text x="{x_of(i):.2f}" y="{bottom + 16}" text-anchor="middle">{escape(str(lab))}</text>')
    for s, (name, ys) in enumerate(series.items()):
        color = _PALETTE[s % len(_PALETTE)]
        pts = " ".join(f"{x_of(i):.2f},{y_of(v):.2f}" for i, v in enumerate(ys) if v == v)
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{right + 10}" y="{top + 16 * s + 4}" fill="{color}">{escape(name)}</text>')
    return _svg(width, height, body)
