"""Two-panel SVG convergence plots written without a plotting library.

Left panel: trailing one-epoch mean of ``f_j`` against iteration. Right
panel: the same against elapsed seconds. Logged full objectives are drawn as
circle markers. Output depends only on the traces, so re-rendering is
byte-identical.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .optimizers import trailing_mean

__all__ = ["render_convergence_plot", "convergence_svg", "epoch_length"]

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")
PANEL_W, PANEL_H = 420, 300
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50


def epoch_length(trace) -> int:
    """Number of components, read off the largest index visited."""
    return max(r.j for r in trace) + 1


def _transform(y: np.ndarray, log: bool, symlog: bool) -> np.ndarray:
    if not log:
        return y
    if symlog:
        return np.sign(y) * np.log10(1.0 + np.abs(y))
    return np.log10(y)


def _ticks(lo: float, hi: float, n: int = 5):
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _panel(ox, series, xkey, xlabel, ylabel, ylim, log, symlog):
    out = []
    xs_all = np.concatenate([s[xkey] for s in series])
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    if x1 == x0:
        x1 = x0 + 1.0
    y0, y1 = ylim
    w = PANEL_W - MARGIN_L - MARGIN_R
    h = PANEL_H - MARGIN_T - MARGIN_B

    def px(x):
        return ox + MARGIN_L + (x - x0) / (x1 - x0) * w

    def py(y):
        return MARGIN_T + h - (y - y0) / (y1 - y0) * h

    out.append(f'<rect x="{_fmt(ox + MARGIN_L)}" y="{MARGIN_T}" width="{w}" height="{h}" '
               'fill="none" stroke="#000"/>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(px(t))}" y="{MARGIN_T + h + 16}" font-size="10" '
                   f'text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        label = f"{t:.4g}" if not log else (f"1e{t:.2g}" if not symlog else f"s{t:.3g}")
        out.append(f'<text x="{_fmt(ox + MARGIN_L - 6)}" y="{_fmt(py(t) + 3)}" font-size="10" '
                   f'text-anchor="end">{escape(label)}</text>')
    out.append(f'<text x="{_fmt(ox + MARGIN_L + w / 2)}" y="{PANEL_H - 12}" font-size="12" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="{_fmt(ox + 16)}" y="{_fmt(MARGIN_T + h / 2)}" font-size="12" '
               f'text-anchor="middle" transform="rotate(-90 {_fmt(ox + 16)} {_fmt(MARGIN_T + h / 2)})">'
               f'{escape(ylabel)}</text>')
    for s in series:
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(s[xkey], s["y"]))
        out.append(f'<polyline class="trace" data-label="{escape(s["label"])}" fill="none" '
                   f'stroke="{s["color"]}" stroke-width="1.5" points="{pts}"/>')
        for a, b in zip(s[xkey + "_full"], s["y_full"]):
            out.append(f'<circle cx="{_fmt(px(a))}" cy="{_fmt(py(b))}" r="2.5" fill="none" '
                       f'stroke="{s["color"]}"/>')
    return out


def convergence_svg(traces: Sequence, labels: Sequence[str], log_scale: bool = False) -> str:
    if not traces or any(len(t) == 0 for t in traces):
        raise ValueError("need at least one non-empty trace")
    if len(labels) != len(traces):
        raise ValueError("one label per trace required")

    raw = []
    for trace, label in zip(traces, labels):
        window = epoch_length(trace)
        full = [r for r in trace if r.full_f is not None]
        raw.append(dict(
            label=label,
            k=np.array([r.k for r in trace], dtype=float),
            t=np.array([r.elapsed for r in trace], dtype=float),
            y=trailing_mean([r.f_j_after for r in trace], window),
            # full objective is a sum of m components; plot it on the per-component scale
            y_full=np.array([r.full_f / window for r in full], dtype=float),
            k_full=np.array([r.k for r in full], dtype=float),
            t_full=np.array([r.elapsed for r in full], dtype=float),
        ))
    all_y = np.concatenate([np.concatenate([s["y"], s["y_full"]]) for s in raw])
    symlog = log_scale and not np.all(all_y > 0)
    for i, s in enumerate(raw):
        s["y"] = _transform(s["y"], log_scale, symlog)
        s["y_full"] = _transform(s["y_full"], log_scale, symlog)
        s["color"] = PALETTE[i % len(PALETTE)]
    all_y = np.concatenate([np.concatenate([s["y"], s["y_full"]]) for s in raw])
    finite = all_y[np.isfinite(all_y)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    ylim = (lo - pad, hi + pad)

    ylabel = "mean f_j (epoch)" + ("" if not log_scale else (" [symlog10]" if symlog else " [log10]"))
    width = 2 * PANEL_W
    height = PANEL_H + 20 * len(raw) + 10
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="#fff"/>',
             f'<text x="{PANEL_W // 2}" y="22" font-size="14" text-anchor="middle">objective vs iteration</text>',
             f'<text x="{PANEL_W + PANEL_W // 2}" y="22" font-size="14" text-anchor="middle">'
             'objective vs wall time</text>']
    parts += _panel(0, raw, "k", "iteration", ylabel, ylim, log_scale, symlog)
    parts += _panel(PANEL_W, raw, "t", "elapsed (s)", ylabel, ylim, log_scale, symlog)
    for i, s in enumerate(raw):
        y = PANEL_H + 14 + 20 * i
        parts.append(f'<line x1="{MARGIN_L}" y1="{y - 4}" x2="{MARGIN_L + 24}" y2="{y - 4}" '
                     f'stroke="{s["color"]}" stroke-width="2"/>')
        parts.append(f'<text class="legend" x="{MARGIN_L + 30}" y="{y}" font-size="12">'
                     f'{escape(s["label"])}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_convergence_plot(traces: Sequence, labels: Sequence[str], path, log_scale: bool = False) -> None:
    Path(path).write_text(convergence_svg(traces, labels, log_scale))
