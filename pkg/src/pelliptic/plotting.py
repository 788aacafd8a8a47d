"""One-page SVG summaries rendered with matplotlib.

The SVG backend is made reproducible by fixing the id hash salt and
dropping the date metadata.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

SVG_SALT = "pelliptic"


def save_svg(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def line_plot(path, series, xlabel, ylabel, title, logx=False, logy=False, hlines=()):
    """Plot ``series`` = [(label, x, y), ...]; ``hlines`` = [(label, y), ...]."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for label, x, y in series:
        ax.plot(np.asarray(x, dtype=float), np.asarray(y, dtype=float), "o-", ms=3, label=label)
    for label, y in hlines:
        ax.axhline(float(y), ls="--", lw=1, color="0.4", label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if series or hlines:
        ax.legend(fontsize=8)
    fig.tight_layout()
    return save_svg(fig, path)


def kernel_decay_plot(path, columns, fit):
    """|K_t(x, y)| against |x - y|^2 / t with the fitted Gaussian bound."""
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ys = columns.coords[columns.sources]
    smax = 0.0
    for it, t in enumerate(columns.times):
        s = np.sum((columns.coords - ys[0]) ** 2, axis=1) / t
        k = np.abs(columns.columns[it, 0]) * t ** (0.5 * columns.d)
        # binned maxima keep the file small and show the envelope
        edges = np.linspace(0, s.max(), 121)
        idx = np.clip(np.digitize(s, edges) - 1, 0, 119)
        top = np.zeros(120)
        np.maximum.at(top, idx, k)
        keep = top > 0
        mid = 0.5 * (edges[1:] + edges[:-1])
        ax.plot(mid[keep], top[keep], ".-", ms=2, lw=0.8, label=f"t = {t:g}")
        smax = max(smax, float(s.max()))
    s = np.linspace(0, smax, 200)
    ax.plot(s, fit.c * np.exp(-fit.b * s + fit.omega * max(columns.times)), "k-",
            lw=1, label=f"bound, b = {fit.b:.3f}")
    ax.set_yscale("log")
    ax.set_ylim(bottom=1e-12)
    ax.set_xlabel("|x - y|^2 / t")
    ax.set_ylabel("t^(d/2) |K_t(x, y)|")
    ax.set_title("heat kernel decay, first source")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return save_svg(fig, path)
