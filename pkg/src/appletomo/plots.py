"""Report rendering: matplotlib figures written next to a delimited summary.

Everything here is presentation-only; the numbers are computed by the library
and written to ``summary.csv`` so the figures can be regenerated or replaced
by external tooling without rerunning the pipeline.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ValidationError
from .fileio import g17
from .grids import DensityGrid

__all__ = ["render_report"]


def _central_slice(grid: DensityGrid) -> tuple:
    """(2-D image array, extent, axis labels) for display; middle z-slice in 3-D."""
    if grid.dim == 2:
        img = grid.values
        x, z = grid.x_axis, grid.z_axis
        extent = (x.origin, x.last, z.origin, z.last)
        return img, extent, ("x", "z")
    k = grid.z_axis.n // 2
    img = grid.values[k]
    x, y = grid.x_axis, grid.y_axis
    extent = (x.origin, x.last, y.origin, y.last)
    return img, extent, ("x", "y")


def _imshow(ax, img, extent, labels, title):
    im = ax.imshow(img, origin="lower", extent=extent, aspect="auto", cmap="magma")
    ax.set_xlabel(labels[0])
    ax.set_ylabel(labels[1])
    ax.set_title(title)
    return im


def render_report(
    outdir: str,
    recon: DensityGrid,
    reference: DensityGrid | None = None,
    diagnostics: list | None = None,
    summary: dict | None = None,
) -> list:
    """Write figures and ``summary.csv`` into ``outdir``; returns written paths."""
    os.makedirs(outdir, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(6.0, 4.5), constrained_layout=True)
    img, extent, labels = _central_slice(recon)
    im = _imshow(ax, img, extent, labels, "reconstruction")
    fig.colorbar(im, ax=ax)
    p = os.path.join(outdir, "reconstruction.png")
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    # height profile through the central column
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    z = recon.z_axis.values
    if recon.dim == 2:
        col = recon.values[:, recon.x_axis.n // 2]
    else:
        col = recon.values[:, recon.y_axis.n // 2, recon.x_axis.n // 2]
    ax.plot(z, col, label="reconstruction")
    if reference is not None:
        if not recon.same_axes(reference):
            raise ValidationError("report reference must share the reconstruction grid")
        if reference.dim == 2:
            rcol = reference.values[:, reference.x_axis.n // 2]
        else:
            rcol = reference.values[:, reference.y_axis.n // 2, reference.x_axis.n // 2]
        ax.plot(z, rcol, "--", label="reference")
    ax.set_xlabel("z")
    ax.set_ylabel("density")
    ax.set_title("central height profile")
    ax.legend()
    p = os.path.join(outdir, "profile.png")
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    if reference is not None:
        fig, ax = plt.subplots(figsize=(6.0, 4.5), constrained_layout=True)
        diff = DensityGrid(axes=recon.axes, values=np.abs(recon.values - reference.values))
        img, extent, labels = _central_slice(diff)
        im = _imshow(ax, img, extent, labels, "absolute error")
        fig.colorbar(im, ax=ax)
        p = os.path.join(outdir, "error.png")
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)

    if diagnostics:
        om = np.array([d.omega for d in diagnostics])
        kept = np.array([d.retained for d in diagnostics], dtype=bool)
        nmin = np.array([d.normalizer_min for d in diagnostics])
        res = np.array([d.residual for d in diagnostics])
        fig, axes = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True, constrained_layout=True)
        axes[0].plot(om[kept], nmin[kept], "o", ms=3, label="retained")
        if np.any(~kept):
            axes[0].plot(om[~kept], nmin[~kept], "x", color="crimson", label="dropped")
        axes[0].set_ylabel("min |normalizer|")
        axes[0].legend()
        axes[1].semilogy(om[kept], np.maximum(res[kept], 1e-18), "o", ms=3)
        axes[1].set_ylabel("solve residual")
        axes[1].set_xlabel("|omega|")
        p = os.path.join(outdir, "diagnostics.png")
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)

    rows = dict(summary or {})
    rows.setdefault("grid_shape", "x".join(str(n) for n in recon.values.shape))
    if diagnostics:
        rows.setdefault("frequencies_retained", int(np.count_nonzero(kept)))
        rows.setdefault("frequencies_dropped", int(np.count_nonzero(~kept)))
    p = os.path.join(outdir, "summary.csv")
    with open(p, "w", encoding="ascii") as fh:
        fh.write("key,value\n")
        for k, v in rows.items():
            fh.write(f"{k},{v if isinstance(v, (int, str)) else g17(v)}\n")
    written.append(p)
    return written
