"""Analytic test densities with hard compact support in the scanning strip.

A phantom is a sum of primitives (gaussian / ball / box) with a declared
support box. Point order is ``(x, z)`` in 2-D and ``(x, y, z)`` in 3-D — the
height coordinate is always last. Evaluation is exactly zero outside the
declared support (gaussians are hard-truncated at 6σ so that the compact-
support hypotheses of the inversion theory hold literally; the truncated mass
e^(−18) is far below quadrature noise).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grids import Axis, DensityGrid
from .geometry import ScanConfig

__all__ = [
    "Primitive",
    "Phantom",
    "strip_clipped",
    "sample_grid",
    "sample_on_axes",
    "band_limited_reference",
    "parse_phantom",
    "format_phantom",
]

_KINDS = ("gaussian", "ball", "box")
GAUSSIAN_CUTOFF_SIGMAS = 6.0


@dataclass(frozen=True)
class Primitive:
    """One additive component: ``kind`` in {gaussian, ball, box}.

    ``size`` is one half-width per axis (σ per axis for gaussians, semi-axes
    for balls, half-edge lengths for boxes); a scalar is broadcast to all axes.
    """

    kind: str
    center: tuple
    size: tuple
    amplitude: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown primitive kind {self.kind!r}")
        dim = len(self.center)
        if dim not in (2, 3):
            raise ValidationError(f"primitive center must be 2-D or 3-D, got {dim}")
        size = self.size if isinstance(self.size, tuple) else (float(self.size),)
        if len(size) == 1:
            size = size * dim
        if len(size) != dim:
            raise ValidationError("size must be scalar or one entry per axis")
        if any(not (s > 0) for s in size):
            raise ValidationError("primitive sizes must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "size", tuple(float(s) for s in size))
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def separable(self) -> bool:
        """True when the primitive is a product of per-axis factors."""
        return self.kind in ("gaussian", "box")

    def effective_box(self) -> tuple:
        """Per-axis (lo, hi) outside which the primitive vanishes identically."""
        reach = {
            "gaussian": tuple(GAUSSIAN_CUTOFF_SIGMAS * s for s in self.size),
            "ball": self.size,
            "box": self.size,
        }[self.kind]
        return tuple((c - a, c + a) for c, a in zip(self.center, reach))

    def axis_factor(self, axis: int, t: np.ndarray) -> np.ndarray:
        """Per-axis factor for separable primitives (amplitude not included)."""
        d = np.asarray(t, dtype=float) - self.center[axis]
        s = self.size[axis]
        if self.kind == "gaussian":
            return np.exp(-0.5 * (d / s) ** 2) * (np.abs(d) <= GAUSSIAN_CUTOFF_SIGMAS * s)
        if self.kind == "box":
            return (np.abs(d) <= s).astype(float)
        raise ValidationError(f"{self.kind} primitive has no per-axis factorization")

    def eval(self, coords: tuple) -> np.ndarray:
        """Value at broadcastable coordinate arrays, one per axis."""
        if self.kind == "gaussian":
            q = 0.0
            inside = True
            for c, s, t in zip(self.center, self.size, coords):
                d = np.asarray(t, dtype=float) - c
                q = q + (d / s) ** 2
                inside = inside & (np.abs(d) <= GAUSSIAN_CUTOFF_SIGMAS * s)
            return self.amplitude * np.exp(-0.5 * q) * inside
        if self.kind == "ball":
            q = 0.0
            for c, s, t in zip(self.center, self.size, coords):
                d = np.asarray(t, dtype=float) - c
                q = q + (d / s) ** 2
            return self.amplitude * (q <= 1.0)
        # box
        inside = True
        for c, s, t in zip(self.center, self.size, coords):
            d = np.asarray(t, dtype=float) - c
            inside = inside & (np.abs(d) <= s)
        return self.amplitude * inside.astype(float)


@dataclass
class Phantom:
    """Sum of primitives with a declared per-axis support box.

    ``support`` holds one ``(lo, hi)`` pair per point component in the same
    order as points: ``((x), (z))`` or ``((x), (y), (z))``. If omitted, the
    tight union of the primitives' effective boxes is used. The declared box
    hard-clips the primitives — evaluation is exactly zero outside it — so a
    box cutting through a gaussian tail is legitimate (it is how densities are
    confined to the scanning strip); a primitive entirely outside the box is
    rejected.
    """

    dim: int
    primitives: tuple
    support: tuple = field(default=())

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValidationError(f"phantom dimension must be 2 or 3, got {self.dim}")
        self.primitives = tuple(self.primitives)
        for p in self.primitives:
            if p.dim != self.dim:
                raise ValidationError(
                    f"primitive dimension {p.dim} does not match phantom dimension {self.dim}"
                )
        if not self.support:
            self.support = self._tight_support()
        self.support = tuple((float(lo), float(hi)) for lo, hi in self.support)
        if len(self.support) != self.dim:
            raise ValidationError("support needs one (lo, hi) pair per axis")
        for lo, hi in self.support:
            if not (hi > lo):
                raise ValidationError(f"support interval [{lo}, {hi}] is empty")
        for p in self.primitives:
            for (plo, phi), (lo, hi) in zip(p.effective_box(), self.support):
                if phi <= lo or plo >= hi:
                    raise ValidationError(
                        "a primitive lies entirely outside the declared support box"
                    )

    def _tight_support(self) -> tuple:
        if not self.primitives:
            # empty phantom: a unit box around the origin keeps the type valid
            return tuple((-0.5, 0.5) for _ in range(self.dim))
        boxes = [p.effective_box() for p in self.primitives]
        return tuple(
            (min(b[a][0] for b in boxes), max(b[a][1] for b in boxes))
            for a in range(self.dim)
        )

    # --- geometry hooks ---------------------------------------------------
    @property
    def z_support(self) -> tuple:
        return self.support[-1]

    def z_breakpoints(self) -> np.ndarray:
        """Heights where the density (or its smoothness) can jump.

        Includes the declared support edges and every primitive's effective
        z-edges; quadrature panels are split there so that each panel sees a
        smooth integrand.
        """
        pts = list(self.z_support)
        for p in self.primitives:
            pts.extend(p.effective_box()[-1])
        lo, hi = self.z_support
        pts = [z for z in pts if lo <= z <= hi]
        return np.unique(np.asarray(pts, dtype=float))

    @property
    def separable(self) -> bool:
        return all(p.separable for p in self.primitives)

    def validate_strip(self, r_m: float, delta: float) -> None:
        """Require the declared z-support to sit strictly inside (2−r_m, 1−δ)."""
        lo, hi = self.z_support
        if lo <= 2.0 - r_m or hi >= 1.0 - delta + 1e-15:
            raise ValidationError(
                f"phantom z-support [{lo}, {hi}] must lie strictly inside "
                f"({2.0 - r_m}, {1.0 - delta})"
            )

    # --- evaluation ---------------------------------------------------------
    def eval_at(self, *coords) -> np.ndarray:
        """Density at broadcastable per-axis coordinate arrays (x[, y], z)."""
        if len(coords) != self.dim:
            raise ValidationError(f"expected {self.dim} coordinate arrays, got {len(coords)}")
        out = np.zeros(np.broadcast(*[np.asarray(c, dtype=float) for c in coords]).shape)
        for p in self.primitives:
            out = out + p.eval(coords)
        inside = True
        for (lo, hi), t in zip(self.support, coords):
            t = np.asarray(t, dtype=float)
            inside = inside & (t >= lo) & (t <= hi)
        return np.where(inside, out, 0.0)

    def eval(self, p) -> np.ndarray:
        """Density at point(s) ``p`` with shape (..., dim)."""
        p = np.asarray(p, dtype=float)
        if p.shape[-1] != self.dim:
            raise ValidationError(f"points must have {self.dim} components")
        return self.eval_at(*(p[..., a] for a in range(self.dim)))


def strip_clipped(phantom: Phantom, r_m: float, delta: float, margin: float = 1e-9) -> Phantom:
    """Return the phantom with its z-support clamped strictly inside the strip.

    Description files carry no explicit support, so densities read from text
    are confined to the scanning strip (2−r_m, 1−δ) by hard truncation — the
    same convention the acceptance oracles use. ``margin`` keeps the clamped
    bounds strictly inside the open strip.
    """
    lo_strip = 2.0 - r_m + margin
    hi_strip = 1.0 - delta - margin
    zlo, zhi = phantom.z_support
    lo, hi = max(zlo, lo_strip), min(zhi, hi_strip)
    if not (hi > lo):
        raise ValidationError(
            f"phantom z-support [{zlo}, {zhi}] does not intersect the "
            f"scanning strip ({2.0 - r_m}, {1.0 - delta})"
        )
    support = phantom.support[:-1] + ((lo, hi),)
    return Phantom(dim=phantom.dim, primitives=phantom.primitives, support=support)


def sample_grid(phantom: Phantom, cfg: ScanConfig) -> DensityGrid:
    """Point-sample the phantom at the cell centers of the configured grid.

    2-D values are laid out ``[z, x]`` on (z_axis, x0_axis); 3-D ``[z, y, x]``
    on (z_axis, y0_axis, x0_axis).
    """
    phantom.validate_strip(cfg.r_m, cfg.delta)
    if phantom.dim == 2:
        axes = (cfg.z_axis(), cfg.x0_axis())
    else:
        axes = (cfg.z_axis(), cfg.y0_axis(), cfg.x0_axis())
    return sample_on_axes(phantom, axes)


def sample_on_axes(phantom: Phantom, axes: tuple) -> DensityGrid:
    """Point-sample the phantom on explicit (z[, y], x) axes."""
    if len(axes) != phantom.dim:
        raise ValidationError(f"need {phantom.dim} axes, got {len(axes)}")
    if phantom.dim == 2:
        zax, xax = axes
        vals = phantom.eval_at(xax.values[None, :], zax.values[:, None])
    else:
        zax, yax, xax = axes
        vals = phantom.eval_at(
            xax.values[None, None, :],
            yax.values[None, :, None],
            zax.values[:, None, None],
        )
    return DensityGrid(axes=tuple(axes), values=vals)


def band_limited_reference(grid: DensityGrid, band) -> DensityGrid:
    """Filter the grid by a stable-band mask along the translation axes only.

    The height axis is untouched: the stable set constrains the frequencies
    conjugate to the translation coordinates, not the height. The mask's
    frequency grid must match the DFT grid of the translation axes.
    """
    tr_axes = tuple(range(1, grid.dim))  # all but the leading z axis
    for ax_index, om in zip(tr_axes, band.omegas):
        ax = grid.axes[ax_index]
        expect = 2.0 * np.pi * np.fft.fftfreq(ax.n, d=ax.spacing)
        om = np.asarray(om)
        if om.shape != expect.shape or not np.allclose(om, expect, rtol=1e-10, atol=1e-12):
            raise ValidationError(
                "stable-band frequency grid does not match the grid's DFT frequencies"
            )
    spec = np.fft.fftn(grid.values, axes=tr_axes)
    w = band.weights
    spec = spec * w[(None,) * (grid.dim - w.ndim) + (...,)]
    vals = np.fft.ifftn(spec, axes=tr_axes).real
    return DensityGrid(axes=grid.axes, values=vals)


# --- text description format -------------------------------------------------
#
# One primitive per line:
#     2-D:  kind cx cz size amplitude
#     3-D:  kind cx cy cz size amplitude
# '#' starts a comment; blank lines ignored; dimension inferred from the token
# count and must be consistent across lines.

def parse_phantom(text: str, support: tuple = ()) -> Phantom:
    """Parse the line-oriented phantom description format."""
    prims = []
    dim = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) not in (5, 6):
            raise ValidationError(
                f"phantom line {lineno}: expected 5 (2-D) or 6 (3-D) tokens, got {len(tok)}"
            )
        this_dim = len(tok) - 3
        if dim is None:
            dim = this_dim
        elif dim != this_dim:
            raise ValidationError(
                f"phantom line {lineno}: mixes {dim}-D and {this_dim}-D primitives"
            )
        kind = tok[0].lower()
        try:
            nums = [float(t) for t in tok[1:]]
        except ValueError as exc:
            raise ValidationError(f"phantom line {lineno}: bad number ({exc})") from None
        center = tuple(nums[:dim])
        size, amplitude = nums[dim], nums[dim + 1]
        prims.append(Primitive(kind=kind, center=center, size=(size,), amplitude=amplitude))
    if dim is None:
        raise ValidationError("phantom description contains no primitives")
    return Phantom(dim=dim, primitives=tuple(prims), support=support)


def format_phantom(phantom: Phantom) -> str:
    """Serialize a phantom back to the text description format (17 digits)."""
    lines = [f"# {phantom.dim}-D phantom, {len(phantom.primitives)} primitive(s)"]
    for p in phantom.primitives:
        if len(set(p.size)) != 1:
            raise ValidationError("text format supports isotropic sizes only")
        nums = list(p.center) + [p.size[0], p.amplitude]
        lines.append(p.kind + " " + " ".join(f"{v:.17g}" for v in nums))
    return "\n".join(lines) + "\n"
