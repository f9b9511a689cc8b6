"""Figure rendering for the CLI report paths.

Import is deferred to call time so the library works without a display;
the Agg backend writes PNG files next to the delimited outputs.
"""
from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_weight_table(table, path: str) -> None:
    """Fiber size, energy weight, and pushforward weight against the level."""
    plt = _pyplot()
    fig, axes = plt.subplots(3, 1, sharex=True, figsize=(6.0, 7.5))
    labels = ("fiber size S", "energy weight A", "pushforward w")
    for ax, col, label in zip(axes, (table.S, table.A, table.w), labels):
        finite = np.isfinite(col)
        ax.plot(table.t[finite], col[finite], lw=1.2)
        if not finite.all():
            ax.set_title(f"{label} (divergent rows omitted)", fontsize=9)
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[-1].set_xlabel("level t")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_profile(profile, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(profile.t, profile.v, lw=1.4)
    ax.set_xlabel("level t")
    ax.set_ylabel("profile value")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_field(fld, path: str) -> None:
    """Heatmap of a 2-D field; 3-D fields show the middle slice of the
    last axis."""
    plt = _pyplot()
    vals = fld.values
    if fld.grid.ndim == 3:
        vals = vals[:, :, vals.shape[2] // 2]
    lo, hi = fld.grid.lo, fld.grid.hi
    fig, ax = plt.subplots(figsize=(6.0, 5.0))
    im = ax.imshow(vals.T, origin="lower",
                   extent=(lo[0], hi[0], lo[1], hi[1]), aspect="auto")
    fig.colorbar(im, ax=ax)
    ax.set_xlabel("x0")
    ax.set_ylabel("x1")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_fit(fit, table, path: str) -> None:
    """Log-log scatter of the fitted column against the level offset with
    the fitted power law overlaid."""
    plt = _pyplot()
    col = table.A if fit.column == "A" else table.S
    off = np.abs(table.t - fit.t0)
    keep = (off > 0) & (col > 0) & np.isfinite(col) & (off <= fit.delta * (1 + 1e-12))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(off[keep], col[keep], "o", ms=4, label="table rows")
    xs = np.geomspace(off[keep].min(), off[keep].max(), 64)
    ax.loglog(xs, fit.prefactor * xs ** fit.slope, "-",
              label=f"slope {fit.slope:.4f}")
    ax.set_xlabel("level offset")
    ax.set_ylabel(f"column {fit.column}")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
