"""Uniform grids and the array containers used throughout the package.

Conventions
-----------
* Translation and image axes are *cell-centered*: ``n`` sample points sit at
  the midpoints of ``n`` equal cells spanning ``[lo, hi]``.
* The radius axis *includes its endpoints*: ``linspace(r_lo, r_m, n_r)``.
* Array layout always puts the radius (or axial coordinate) first and the
  fastest-varying translation coordinate last:

  - 2-D density grid: ``values[z, x]``
  - 3-D density grid: ``values[z, y, x]``
  - 2-D sinogram:     ``values[r, x0]``
  - 3-D sinogram:     ``values[r, y0, x0]``
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "Axis",
    "cell_centered_axis",
    "DensityGrid",
    "Sinogram2D",
    "Sinogram3D",
]


@dataclass(frozen=True)
class Axis:
    """A uniform 1-D sample axis: ``n`` points starting at ``origin``, step ``spacing``."""

    origin: float
    spacing: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"axis needs at least one sample, got n={self.n}")
        if not np.isfinite(self.origin) or not np.isfinite(self.spacing):
            raise ValidationError("axis origin/spacing must be finite")
        if self.spacing <= 0:
            raise ValidationError(f"axis spacing must be positive, got {self.spacing}")

    @property
    def values(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n)

    @property
    def last(self) -> float:
        return self.origin + self.spacing * (self.n - 1)

    def close_to(self, other: "Axis", rtol: float = 1e-12) -> bool:
        scale = max(abs(self.origin), abs(self.last), self.spacing, 1e-300)
        return (
            self.n == other.n
            and abs(self.origin - other.origin) <= rtol * scale
            and abs(self.spacing - other.spacing) <= rtol * scale
        )


def cell_centered_axis(lo: float, hi: float, n: int) -> Axis:
    """Axis with ``n`` samples at the centers of ``n`` equal cells on ``[lo, hi]``."""
    if not (hi > lo):
        raise ValidationError(f"need hi > lo, got [{lo}, {hi}]")
    if n < 1:
        raise ValidationError(f"need n >= 1, got {n}")
    h = (hi - lo) / n
    return Axis(origin=lo + 0.5 * h, spacing=h, n=n)


def _check_values(values: np.ndarray, ndim: int, shape, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim != ndim:
        raise ValidationError(f"{what}: expected {ndim}-D values, got {values.ndim}-D")
    if values.shape != shape:
        raise ValidationError(f"{what}: values shape {values.shape} != axes shape {shape}")
    if not np.all(np.isfinite(values)):
        raise ValidationError(f"{what}: values contain non-finite entries")
    return values


@dataclass
class DensityGrid:
    """Sampled density on a cell-centered cartesian grid.

    2-D: ``values[z, x]`` with axes ``(z_axis, x_axis)``.
    3-D: ``values[z, y, x]`` with axes ``(z_axis, y_axis, x_axis)``.
    """

    axes: tuple[Axis, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.axes) not in (2, 3):
            raise ValidationError(f"DensityGrid supports 2 or 3 axes, got {len(self.axes)}")
        shape = tuple(ax.n for ax in self.axes)
        self.values = _check_values(self.values, len(self.axes), shape, "DensityGrid")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def z_axis(self) -> Axis:
        return self.axes[0]

    @property
    def x_axis(self) -> Axis:
        return self.axes[-1]

    @property
    def y_axis(self) -> Axis:
        if self.dim != 3:
            raise ValidationError("y_axis only exists on 3-D grids")
        return self.axes[1]

    def same_axes(self, other: "DensityGrid") -> bool:
        return self.dim == other.dim and all(
            a.close_to(b) for a, b in zip(self.axes, other.axes)
        )


@dataclass
class Sinogram2D:
    """Toric-section transform samples ``values[r, x0]``."""

    r_axis: Axis
    x0_axis: Axis
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = (self.r_axis.n, self.x0_axis.n)
        self.values = _check_values(self.values, 2, shape, "Sinogram2D")
        if self.r_axis.origin <= 1.0:
            raise ValidationError(
                f"sinogram radii must exceed 1, got r_lo={self.r_axis.origin}"
            )


@dataclass
class Sinogram3D:
    """Apple-surface transform samples ``values[r, y0, x0]``."""

    r_axis: Axis
    y0_axis: Axis
    x0_axis: Axis
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        shape = (self.r_axis.n, self.y0_axis.n, self.x0_axis.n)
        self.values = _check_values(self.values, 3, shape, "Sinogram3D")
        if self.r_axis.origin <= 1.0:
            raise ValidationError(
                f"sinogram radii must exceed 1, got r_lo={self.r_axis.origin}"
            )
