"""Dependency-free SVG scatter plots of cluster assignments."""

from html import escape
from typing import Optional, Sequence

import numpy as np

from . import __version__

PALETTE = ("#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

PANEL = 320
MARGIN = 40


def _panel(xy, groups, title, x_name, y_name, offset, lo, hi, mark_centroids):
    span = np.where(hi > lo, hi - lo, 1.0)

    def px(p):
        u = (p - lo) / span
        return MARGIN + offset + u[0] * (PANEL - 2 * MARGIN), PANEL - MARGIN - u[1] * (PANEL - 2 * MARGIN)

    out = [
        '<g class="panel">',
        f'<rect x="{offset + MARGIN}" y="{MARGIN}" width="{PANEL - 2 * MARGIN}" height="{PANEL - 2 * MARGIN}" '
        f'fill="none" stroke="#444"/>',
        f'<text x="{offset + PANEL / 2:.1f}" y="{MARGIN - 12}" text-anchor="middle" font-size="14">{title}</text>',
        f'<text x="{offset + PANEL / 2:.1f}" y="{PANEL - 10}" text-anchor="middle" font-size="11">{x_name}</text>',
        f'<text x="{offset + 12}" y="{PANEL / 2:.1f}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 {offset + 12} {PANEL / 2:.1f})">{y_name}</text>',
    ]
    for p, g in zip(xy, groups):
        cx, cy = px(p)
        out.append(f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="3" fill="{PALETTE[g % len(PALETTE)]}"/>')
    if mark_centroids:
        for g in np.unique(groups):
            cx, cy = px(xy[groups == g].mean(axis=0))
            color = PALETTE[g % len(PALETTE)]
            out.append(
                f'<path d="M{cx - 6:.2f},{cy - 6:.2f}L{cx + 6:.2f},{cy + 6:.2f}M{cx - 6:.2f},{cy + 6:.2f}'
                f'L{cx + 6:.2f},{cy - 6:.2f}" stroke="{color}" stroke-width="3" class="centroid"/>'
            )
    out.append("</g>")
    return out


def scatter_svg(
    features: np.ndarray,
    clusters: Sequence[int],
    labels: Optional[Sequence[int]] = None,
    feature_pair: tuple[int, int] = (0, 1),
    feature_names: Optional[Sequence[str]] = None,
) -> str:
    """SVG text with one colour per cluster and a cross on each cluster mean.

    When ``labels`` are given a "True" panel is drawn beside the "Predicted" one.
    """
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("nothing to plot: empty feature matrix")
    if X.shape[1] < 2:
        raise ValueError("need at least 2 feature columns to plot")
    i, j = feature_pair
    xy = X[:, [i, j]]
    names = list(feature_names) if feature_names is not None else [f"f{p}" for p in range(X.shape[1])]
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    clusters = np.asarray(clusters, dtype=int)

    panels = []
    if labels is not None:
        panels.append(("True", np.asarray(labels, dtype=int), False))
    panels.append(("Predicted", clusters, True))
    width = PANEL * len(panels)
    body = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f"<!-- qkmeans {__version__} -->",
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{PANEL}" viewBox="0 0 {width} {PANEL}">',
        f'<rect width="{width}" height="{PANEL}" fill="white"/>',
    ]
    for k, (title, groups, mark) in enumerate(panels):
        body += _panel(xy, groups, title, escape(names[i]), escape(names[j]), k * PANEL, lo, hi, mark)
    body.append("</svg>")
    return "\n".join(body) + "\n"
