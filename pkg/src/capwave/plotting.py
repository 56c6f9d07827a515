"""Static figures for run reports and convergence tables (matplotlib, Agg backend)."""

from __future__ import annotations

from contextlib import contextmanager
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["style", "plot_energy", "plot_contact", "plot_surfaces", "plot_convergence", "plot_field"]

RC = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
    # fixed metadata keeps the files reproducible
    "svg.hashsalt": "capwave",
    "pdf.compression": 6,
}


@contextmanager
def style():
    with matplotlib.rc_context(RC):
        yield


def _save(fig, path):
    path = Path(path)
    fig.savefig(path, metadata={"Software": None} if path.suffix == ".png" else None)
    plt.close(fig)
    return path


def plot_energy(report, path):
    """Energy components, the physical energy and the dissipation against time."""
    t = report["t"]
    with style():
        fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6.4, 6.4))
        ax = axes[0]
        for key, lab in (("E", "E"), ("E_variant", "E (variant)"), ("E1", "E$_1$")):
            if key in report:
                ax.semilogy(t, np.maximum(report[key], 1e-300), label=lab)
        ax.set_ylabel("energy")
        ax.legend()
        ax = axes[1]
        ax.plot(t, report["phys_energy"] - report["phys_energy"][0], color="k")
        ax.set_ylabel(r"$\mathfrak{E}(t)-\mathfrak{E}(0)$")
        ax = axes[2]
        ax.plot(t, report["F"], label="F")
        ax.plot(t, report["F1"], label="F$_1$", ls="--")
        ax.set_ylabel("dissipation")
        ax.set_xlabel("t")
        ax.legend()
        return _save(fig, path)


def plot_contact(report, path):
    """Contact angles and contact-point speeds."""
    t = report["t"]
    with style():
        fig, (a0, a1) = plt.subplots(2, 1, sharex=True)
        a0.plot(t, report["omega_l"] / np.pi, label="left")
        a0.plot(t, report["omega_r"] / np.pi, label="right", ls="--")
        a0.set_ylabel(r"$\omega/\pi$")
        a0.legend()
        a1.plot(t, report["v_l"], label="left")
        a1.plot(t, report["v_r"], label="right", ls="--")
        a1.axhline(0, color="0.6", lw=0.6)
        a1.set_ylabel("contact speed")
        a1.set_xlabel("t")
        return _save(fig, path)


def plot_surfaces(surfaces, path, bottom=None):
    """Free-surface profiles; ``surfaces`` is a list of ``(time, x, z)``."""
    with style():
        fig, ax = plt.subplots()
        cmap = plt.get_cmap("viridis")
        n = max(len(surfaces) - 1, 1)
        for k, (t, x, z) in enumerate(surfaces):
            ax.plot(x, z, color=cmap(k / n), lw=0.9, label=f"t={t:.3g}" if k in (0, len(surfaces) - 1) else None)
        if bottom is not None:
            ax.plot(bottom[:, 0], bottom[:, 1], color="k", lw=1.0)
        ax.set_xlabel("x")
        ax.set_ylabel("z")
        ax.legend()
        return _save(fig, path)


def plot_convergence(h, errors, path, labels=None, title=None, order=1):
    """Log-log convergence curves with a reference slope of the given order."""
    h = np.asarray(h, float)
    errors = np.atleast_2d(np.asarray(errors, float))
    with style():
        fig, ax = plt.subplots(figsize=(4.5, 3.5))
        for k, e in enumerate(errors):
            ax.loglog(h, e, "o-", label=None if labels is None else labels[k])
        ref = np.nanmax(errors[:, 0]) * (h / h[0]) ** order
        ax.loglog(h, ref, color="0.6", ls=":", label=f"order {order}")
        ax.set_xlabel("h")
        ax.set_ylabel("discrepancy")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper left", bbox_to_anchor=(1.0, 1.0))
        return _save(fig, path)


def plot_field(nodes, values, path, title=None):
    """Filled contour of a grid field on its curvilinear mesh."""
    with style():
        fig, ax = plt.subplots()
        cs = ax.contourf(nodes[..., 0], nodes[..., 1], values, levels=24, cmap="RdBu_r")
        fig.colorbar(cs, ax=ax)
        ax.plot(nodes[:, -1, 0], nodes[:, -1, 1], color="k", lw=1.0)
        ax.set_aspect("equal")
        if title:
            ax.set_title(title)
        return _save(fig, path)
