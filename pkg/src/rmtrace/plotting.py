"""Matplotlib renderings of the figure protocols."""
from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

COLORS = {2: "tab:blue", 3: "tab:red", 4: "tab:green"}
MARKERS = {2: "x", 3: "o", 4: "D"}

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (3.4, 2.6),
    "savefig.dpi": 150,
    "svg.hashsalt": "rmtrace",
    "path.simplify": False,
}


@contextmanager
def _figure():
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        try:
            yield fig, ax
        finally:
            plt.close(fig)


def _save(fig, path):
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "png"
    meta = {"Date": None} if fmt in ("svg", "pdf") else {"Software": None}
    if fmt == "pdf":
        meta["CreationDate"] = None
        meta.pop("Date")
    fig.tight_layout()
    fig.savefig(path, format=fmt, metadata=meta)
    return path


def plot_trial_series(estimates, path, title=""):
    """Estimates of p2, p3, p4 against trial index."""
    est = np.asarray(estimates)
    with _figure() as (fig, ax):
        x = np.arange(1, est.shape[0] + 1)
        for i, n in enumerate((2, 3, 4)):
            ax.plot(x, est[:, i], ls="", marker=MARKERS[n], ms=3, mfc="none", color=COLORS[n],
                    label=f"$p_{n}$")
        ax.axhline(1.0, color="k", lw=0.6, ls="--")
        ax.set_xlabel("trial")
        ax.set_ylabel("estimate")
        if title:
            fig.suptitle(title, fontsize=8)
        ax.legend(loc="lower center", bbox_to_anchor=(0.5, 1.0), ncol=3, frameon=False)
        return _save(fig, path)


def plot_scatter(truths, estimates, path, title=""):
    """Estimated against actual trace powers with the diagonal as reference."""
    tru, est = np.asarray(truths), np.asarray(estimates)
    with _figure() as (fig, ax):
        for i, n in enumerate((2, 3, 4)):
            ax.plot(tru[:, i], est[:, i], ls="", marker=MARKERS[n], ms=3, mfc="none",
                    color=COLORS[n], label=f"$p_{n}$")
        lo = min(0.0, float(np.nanmin(est)))
        hi = max(1.0, float(np.nanmax(est)))
        ax.plot([lo, hi], [lo, hi], "k--", lw=0.7)
        ax.set_xlabel("actual")
        ax.set_ylabel("estimated")
        if title:
            ax.set_title(title, fontsize=8)
        ax.legend(loc="upper left", frameon=False)
        return _save(fig, path)


def plot_std_vs_qubits(qubits, std, path, title=""):
    std = np.asarray(std)
    with _figure() as (fig, ax):
        for i, n in enumerate((2, 3, 4)):
            ax.plot(qubits, std[:, i], ls="", marker=MARKERS[n], mfc="none", color=COLORS[n],
                    label=rf"$\tilde p_{n}$")
        ax.set_xlabel("number of qubits")
        ax.set_ylabel("standard deviation")
        ax.set_xticks(list(qubits))
        if title:
            ax.set_title(title, fontsize=8)
        ax.legend(frameon=False)
        return _save(fig, path)
