"""Deterministic SVG line charts of sweep results, one file per panel.

The x axis is the index into the beta grid (labelled with the beta value), so
the widely spaced default grid stays readable.
"""

from __future__ import annotations

import logging
import math
import re
from pathlib import Path
from xml.sax.saxutils import escape

from .sweep import METRIC_COLUMNS, ResultsTable, load_results

log = logging.getLogger(__name__)

BIAS_CURVES = ("b_y0", "b_y1", "b_effect", "b_joint", "b_x")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939")
W, H = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 64, 170, 40, 48


def _num(v: float) -> str:
    return f"{v:.2f}"


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for mult in (1, 2, 5, 10):
        if (hi - lo) / (step * mult) <= n:
            step *= mult
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * step:
        out.append(round(v, 12))
        v += step
    return out


def render_svg(title: str, betas: list[float], series: list[tuple[str, list, list]],
               ylabel: str) -> str:
    """``series`` holds ``(label, means, stds)``; missing values are None."""
    vals = [m + s * k for _, ms, ss in series for m, s in zip(ms, ss) if m is not None
            for k in (-1, 1)]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    pw, ph = W - LEFT - RIGHT, H - TOP - BOTTOM
    nb = len(betas)

    def sx(i):
        return LEFT + (pw / 2 if nb == 1 else pw * i / (nb - 1))

    def sy(v):
        return TOP + ph * (1 - (v - lo) / (hi - lo))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.0f}" y="22" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>']
    for t in _ticks(lo, hi):
        y = sy(t)
        out.append(f'<line x1="{LEFT - 4}" y1="{_num(y)}" x2="{LEFT}" y2="{_num(y)}" stroke="#333"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_num(y + 4)}" text-anchor="end">{t:g}</text>')
    for i, b in enumerate(betas):
        x = sx(i)
        out.append(f'<line x1="{_num(x)}" y1="{TOP + ph}" x2="{_num(x)}" y2="{TOP + ph + 4}" stroke="#333"/>')
        out.append(f'<text x="{_num(x)}" y="{TOP + ph + 16}" text-anchor="middle">{b:g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.0f}" y="{H - 10}" text-anchor="middle">beta</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.0f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.0f})">{escape(ylabel)}</text>')
    for k, (label, means, stds) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        pts = [(sx(i), m, s) for i, (m, s) in enumerate(zip(means, stds)) if m is not None]
        if not pts:
            continue
        if len(pts) > 1 and any(s > 0 for _, _, s in pts):
            upper = " ".join(f"{_num(x)},{_num(sy(m + s))}" for x, m, s in pts)
            lower = " ".join(f"{_num(x)},{_num(sy(m - s))}" for x, m, s in reversed(pts))
            out.append(f'<polygon points="{upper} {lower}" fill="{color}" fill-opacity="0.15" stroke="none"/>')
        if len(pts) > 1:
            line = " ".join(f"{_num(x)},{_num(sy(m))}" for x, m, _ in pts)
            out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        for x, m, s in pts:
            out.append(f'<circle cx="{_num(x)}" cy="{_num(sy(m))}" r="3" fill="{color}"/>')
            if len(pts) == 1 and s > 0:
                out.append(f'<line x1="{_num(x)}" y1="{_num(sy(m - s))}" x2="{_num(x)}" '
                           f'y2="{_num(sy(m + s))}" stroke="{color}"/>')
        ly = TOP + 10 + 16 * k
        lx = W - RIGHT + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 18}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 24}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _panel(summary: list[dict], dataset: str, source: str, keys, key_field: str, betas):
    series = []
    for label in keys:
        by_beta = {r["beta"]: r for r in summary if r["dataset"] == dataset
                   and r["policy_source"] == source and r.get(key_field, label) == label}
        means, stds = [], []
        for b in betas:
            r = by_beta.get(b)
            means.append(None if r is None else r["mean"])
            stds.append(0.0 if r is None or r["std"] is None else r["std"])
        series.append((label, means, stds))
    return series


def plot_results(table: ResultsTable, out_dir, metrics=METRIC_COLUMNS,
                 datasets=None, sources=None, learners=None) -> list[Path]:
    """Write SVG panels; returns the paths written (empty selection writes nothing)."""
    rows = [r for r in table.rows
            if (datasets is None or r.dataset in datasets)
            and (sources is None or r.policy_source in sources)
            and (learners is None or r.learner in learners)]
    bias_rows = [b for b in table.bias_rows
                 if (datasets is None or b.dataset in datasets)
                 and (sources is None or b.policy_source in sources)]
    if not rows and not bias_rows:
        log.warning("no results match the selection; nothing plotted")
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summary = table.summary()
    bias_summary = table.bias_summary()
    groups = sorted({(r.dataset, r.policy_source) for r in rows}
                    | {(b.dataset, b.policy_source) for b in bias_rows})
    for dataset, source in groups:
        betas = sorted({r.beta for r in rows if (r.dataset, r.policy_source) == (dataset, source)}
                       | {b.beta for b in bias_rows if (b.dataset, b.policy_source) == (dataset, source)})
        bsum = [{"dataset": s["dataset"], "policy_source": s["policy_source"], "beta": s["beta"],
                 "curve": c, "mean": s[f"{c}_mean"], "std": s[f"{c}_std"]}
                for s in bias_summary for c in BIAS_CURVES]
        if any(s["mean"] is not None and s["dataset"] == dataset and s["policy_source"] == source
               for s in bsum):
            svg = render_svg(f"{dataset} / {source}: policy bias", betas,
                             _panel(bsum, dataset, source, BIAS_CURVES, "curve", betas), "bias")
            path = out / f"{_safe(dataset)}__{_safe(source)}__bias.svg"
            path.write_text(svg)
            written.append(path)
        chosen = [l for l in dict.fromkeys(r.learner for r in rows)]
        for metric in metrics:
            msum = [{"dataset": s["dataset"], "policy_source": s["policy_source"], "beta": s["beta"],
                     "learner": s["learner"], "mean": s[f"{metric}_mean"], "std": s[f"{metric}_std"]}
                    for s in summary if s["learner"] in chosen]
            series = [s for s in _panel(msum, dataset, source, chosen, "learner", betas)
                      if any(m is not None for m in s[1])]
            if not series:
                continue
            svg = render_svg(f"{dataset} / {source}: {metric}", betas, series, metric)
            path = out / f"{_safe(dataset)}__{_safe(source)}__{metric}.svg"
            path.write_text(svg)
            written.append(path)
    return written


def plot_results_dir(results_dir, out_dir, **kw) -> list[Path]:
    return plot_results(load_results(results_dir), out_dir, **kw)
