"""Figure rendering for experiment reports.

Each report type gets one PNG next to the delimited output.  Rendering is
headless (Agg) and deterministic for a fixed report body.
"""

from __future__ import annotations

import os
import tempfile

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from scipy import special  # noqa: E402


def _save_atomic(fig, path):
    d = os.path.dirname(os.fspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".png")
    os.close(fd)
    try:
        fig.savefig(tmp, dpi=120, bbox_inches="tight")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    finally:
        plt.close(fig)


def _rows(report, name):
    return np.asarray(report.series[name]["rows"], dtype=float)


def render_figures(report, path_stem) -> list:
    """Write the figures for one report; returns the file paths."""
    tag = report.config.tag
    out = []
    if tag == "flt-marginal":
        z = _rows(report, "statistic")[:, 1]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist(z, bins=60, density=True, alpha=0.6, label="standardized count")
        xs = np.linspace(-4, 4, 400)
        ax.plot(xs, np.exp(-xs**2 / 2) / np.sqrt(2 * np.pi), "k-", label="normal limit")
        ax.set_xlabel("z")
        ax.set_ylabel("density")
        ax.legend()
        path = f"{path_stem}_marginal.png"
        _save_atomic(fig, path)
        out.append(path)
    elif tag == "flt-covariance":
        rows = _rows(report, "covariance")
        d = np.abs(rows[:, 0] - rows[:, 1])
        order = np.argsort(d)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.errorbar(d[order], rows[order, 2], yerr=3 * rows[order, 3], fmt="o",
                    label="empirical (3 se)")
        ax.plot(d[order], rows[order, 4], "k-", label="limit covariance")
        ax.set_xlabel("|u - v|")
        ax.set_ylabel("covariance")
        ax.legend()
        path = f"{path_stem}_covariance.png"
        _save_atomic(fig, path)
        out.append(path)
    elif tag == "slln":
        fig, axes = plt.subplots(1, len(report.series), figsize=(6 * len(report.series), 4),
                                 squeeze=False)
        for ax, (name, tab) in zip(axes[0], report.series.items()):
            vals = np.asarray(tab["rows"], dtype=float)[:, 1]
            ax.hist(vals, bins=40, alpha=0.7)
            ax.set_xlabel(tab["header"][1])
            ax.set_title(name)
        path = f"{path_stem}_slln.png"
        _save_atomic(fig, path)
        out.append(path)
    elif tag == "hole":
        rows = _rows(report, "hole")
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.fill_between(rows[:, 0], rows[:, 4], rows[:, 5], alpha=0.4,
                        label="bracket")
        mid = 0.5 * (rows[:, 4] + rows[:, 5])
        ax.plot(rows[:, 0], mid, "o-", label="normalized exponent")
        if np.isfinite(rows[0, 6]):
            ax.axhline(rows[0, 6], color="k", ls="--", label="limit")
        ax.set_xscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("normalized hole exponent")
        ax.legend()
        path = f"{path_stem}_hole.png"
        _save_atomic(fig, path)
        out.append(path)
    elif tag == "inverse-stable":
        rows = _rows(report, "samples")
        fig, ax = plt.subplots(figsize=(6, 4))
        for col, label in ((1, "scaled passage time"), (2, "inverse subordinator")):
            xs = np.sort(rows[:, col])
            ax.plot(xs, np.arange(1, xs.size + 1) / xs.size, label=label)
        ax.set_xlim(0, np.quantile(rows[:, 1], 0.995))
        ax.set_xlabel("x")
        ax.set_ylabel("empirical CDF")
        ax.legend()
        path = f"{path_stem}_inverse_stable.png"
        _save_atomic(fig, path)
        out.append(path)
    elif tag == "variance":
        rows = _rows(report, "variance")
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.errorbar(rows[:, 0], rows[:, 4], yerr=3 * rows[:, 2] / rows[:, 3],
                    fmt="o-", label="empirical / asymptote")
        ax.axhline(1.0, color="k", ls="--")
        ax.set_xlabel("t")
        ax.set_ylabel("variance ratio")
        ax.legend()
        path = f"{path_stem}_variance.png"
        _save_atomic(fig, path)
        out.append(path)
    return out
