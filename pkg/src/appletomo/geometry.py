"""Toric sections, apple surfaces, and their measures.

A toric section of radius ``r > 1`` is the planar curve traced by two
intersecting circles of radius ``r`` centered at ``(±R, 2)`` with
``R = √(r²−1)``; the circles cross on the vertical axis and the curve splits
into four semicircular branches over the height interval ``z ∈ [2−r, 1]``.
Revolving the outer part about the vertical axis produces the two-sheeted
"apple" surface with radial profiles ``R ± √(r²−(z−2)²)``.

This module provides the branch/sheet point evaluators, the arc and surface
measures used by the forward transforms, the angular parameterization
``z = 2 − r·cos α`` (which has uniform speed ``r`` along a branch and removes
the endpoint singularity of the z-form measures), scan-configuration
validation, and the stable frequency-band limits of the inversion formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grids import Axis, cell_centered_axis

__all__ = [
    "TorusParams",
    "torus_params",
    "toric_branch_x",
    "apple_point",
    "arc_measure",
    "surface_measure",
    "alpha_max",
    "height_of_alpha",
    "alpha_of_height",
    "stable_band_limit",
    "ScanConfig",
    "ProfileFamily",
    "apple_profile_family",
    "cone_profile_family",
]


@dataclass(frozen=True)
class TorusParams:
    """Derived constants of a toric section with tube radius ``r``."""

    r: float          # tube radius, > 1 (r = 1 degenerate limit allowed)
    R: float          # horizontal center offset √(r²−1)
    h: float          # lowest height of the section, 2 − r

    def __post_init__(self):
        if not (self.r >= 1.0):
            raise ValidationError(f"tube radius must satisfy r >= 1, got {self.r}")


def torus_params(r: float) -> TorusParams:
    """Constants of the radius-``r`` toric section: offset ``R=√(r²−1)``, base height ``2−r``."""
    if not np.isfinite(r) or r < 1.0:
        raise ValidationError(f"tube radius must satisfy r >= 1, got {r}")
    return TorusParams(r=float(r), R=math.sqrt(r * r - 1.0), h=2.0 - float(r))


def _check_height(r: float, z, closed: bool) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if closed:
        bad = (z < 2.0 - r - 1e-15) | (z > 1.0 + 1e-15)
        if np.any(bad):
            raise ValidationError(
                f"height must lie in [2−r, 1] = [{2.0 - r}, 1], got {z[bad].flat[0]}"
            )
    else:
        bad = np.abs(z - 2.0) >= r
        if np.any(bad):
            raise ValidationError(
                f"height must satisfy |z−2| < {r} strictly, got {np.asarray(z)[bad].flat[0]}"
            )
    return z


def toric_branch_x(r: float, z, j: int):
    """x-coordinate of branch ``j`` (1..4) of the radius-``r`` toric section at height ``z``.

    The four branches are ``x = ±R ± √(r²−(z−2)²)``, ordered
    ``x₁ = R+√ ≥ x₂ = R−√ ≥ 0 ≥ x₃ = −R+√ ≥ x₄ = −R−√`` for heights in the
    scan range. Heights may lie anywhere in the closed interval ``[2−r, 1]``
    (both endpoints give coincident branch pairs).
    """
    p = torus_params(r)
    z = _check_height(p.r, z, closed=True)
    disc = np.sqrt(np.maximum(p.r * p.r - (z - 2.0) ** 2, 0.0))
    if j == 1:
        return p.R + disc
    if j == 2:
        return p.R - disc
    if j == 3:
        return -p.R + disc
    if j == 4:
        return -p.R - disc
    raise ValidationError(f"branch index must be 1..4, got {j}")


def apple_point(r: float, z, phi, j: int):
    """Point ``(x, y)`` on sheet ``j`` of the apple surface at height ``z``, angle ``phi``.

    Sheet 1 is the outer sheet with radius ``R + √(r²−(z−2)²)``; sheet 2 is the
    inner sheet with radius ``R − √(r²−(z−2)²)``. Heights in ``[2−r, 1]``.
    """
    p = torus_params(r)
    z = _check_height(p.r, z, closed=True)
    phi = np.asarray(phi, dtype=float)
    disc = np.sqrt(np.maximum(p.r * p.r - (z - 2.0) ** 2, 0.0))
    if j == 1:
        rho = p.R + disc
    elif j == 2:
        rho = p.R - disc
    else:
        raise ValidationError(f"sheet index must be 1 or 2, got {j}")
    return rho * np.cos(phi), rho * np.sin(phi)


def arc_measure(r: float, z):
    """Line density ``r/√(r²−(z−2)²)`` converting dz to arc length along a branch.

    Requires ``|z−2| < r`` strictly: the weight diverges (integrably) at the
    endpoints, where integration must use the angular substitution instead.
    """
    p = torus_params(r)
    z = _check_height(p.r, z, closed=False)
    return p.r / np.sqrt(p.r * p.r - (z - 2.0) ** 2)


def surface_measure(r: float, z, j: int):
    """Area density on sheet ``j``: ``arc_measure(r, z) · ρ_j(r, z)`` (dz dφ → dA)."""
    p = torus_params(r)
    z = _check_height(p.r, z, closed=False)
    disc = np.sqrt(p.r * p.r - (z - 2.0) ** 2)
    if j == 1:
        rho = p.R + disc
    elif j == 2:
        rho = p.R - disc
    else:
        raise ValidationError(f"sheet index must be 1 or 2, got {j}")
    return (p.r / disc) * rho


def alpha_max(r: float) -> float:
    """Opening half-angle of a branch: heights [2−r, 1] map to angles [0, arccos(1/r)]."""
    if r < 1.0:
        raise ValidationError(f"tube radius must satisfy r >= 1, got {r}")
    return math.acos(1.0 / r)


def height_of_alpha(r: float, alpha):
    """Height along a branch at polar angle ``alpha``: ``z = 2 − r·cos α``.

    The branch curve has constant Euclidean speed ``r`` in α, so
    ``ds = r·dα`` replaces ``arc_measure(r, z)·dz`` exactly.
    """
    return 2.0 - r * np.cos(np.asarray(alpha, dtype=float))


def alpha_of_height(r: float, z):
    """Inverse of :func:`height_of_alpha`: ``α = arccos((2−z)/r)``."""
    z = np.asarray(z, dtype=float)
    c = (2.0 - z) / r
    if np.any((c < -1.0 - 1e-12) | (c > 1.0 + 1e-12)):
        raise ValidationError(f"height out of range for radius {r}")
    return np.arccos(np.clip(c, -1.0, 1.0))


def stable_band_limit(r_m: float, mode: str, M: float | None = None) -> float:
    """Largest translation frequency recoverable without analytic continuation.

    ``mode='2d'``  → (π/2)/√(r_m²−1)   (first root of the cosine normalizer)
    ``mode='3d'``  → t₀/√(r_m²−1)      (t₀ = first positive root of J₀)
    ``mode='generalized'`` → t₀/M for a profile family bounded by ``M``.
    """
    if not np.isfinite(r_m) or r_m <= 1.0:
        raise ValidationError(f"maximum radius must exceed 1, got {r_m}")
    m = mode.lower()
    if m == "2d":
        return (math.pi / 2.0) / math.sqrt(r_m * r_m - 1.0)
    # local import: volterra depends on nothing above it, but geometry is
    # imported first in the package, so defer to avoid a cycle at import time
    from .volterra import first_j0_root

    if m == "3d":
        return first_j0_root() / math.sqrt(r_m * r_m - 1.0)
    if m == "generalized":
        if M is None or not (M > 0):
            raise ValidationError("generalized mode needs a positive profile bound M")
        return first_j0_root() / M
    raise ValidationError(f"mode must be '2d', '3d', or 'generalized', got {mode!r}")


@dataclass
class ScanConfig:
    """Acquisition and discretization parameters shared by the whole pipeline.

    ``r_m`` bounds the radius range ``(1, r_m]``; ``delta`` is the standoff of
    the density support from the plane z = 1 (must be positive for 3-D
    inversion). Translation and height axes are cell-centered; the radius axis
    includes its endpoints ``[1+eps_r, r_m]`` (2-D) / ``[1+delta, r_m]`` (3-D
    inversion s-grid start).
    """

    r_m: float = 2.0
    delta: float = 0.0
    n_x0: int = 256
    x0_min: float = -4.8
    x0_max: float = 4.8
    n_y0: int = 64
    y0_min: float = -4.8
    y0_max: float = 4.8
    n_r: int = 256
    n_z: int = 256
    z_min: float | None = None     # default 2 − r_m
    z_max: float | None = None     # default 1 − delta
    n_alpha: int = 64              # Gauss–Legendre order per branch/sheet panel
    n_phi: int = 128               # trapezoid points around the axis (3-D)
    quad_tol: float = 1e-8         # relative refinement target for transforms
    quad_max: int = 1024           # refinement cap on n_alpha (n_phi scales along)
    pad_factor: int = 4            # zero-padding factor for translation DFTs
    taper: float = 0.25            # stable-band raised-cosine taper fraction
    eps_norm: float = 0.1          # floor on |normalizer| before division
    eps_r: float = 1e-6            # radius-grid standoff from the degenerate r=1

    def __post_init__(self):
        if not (self.r_m > 1.0):
            raise ValidationError(f"r_m must exceed 1, got {self.r_m}")
        if self.delta < 0.0:
            raise ValidationError(f"delta must be nonnegative, got {self.delta}")
        if self.delta >= self.r_m - 1.0:
            raise ValidationError(
                f"delta must stay below r_m − 1 = {self.r_m - 1.0}, got {self.delta}"
            )
        for name in ("n_x0", "n_y0", "n_r", "n_z"):
            if getattr(self, name) < 2:
                raise ValidationError(f"{name} must be at least 2")
        if not (0.0 <= self.taper <= 1.0):
            raise ValidationError(f"taper must lie in [0, 1], got {self.taper}")
        if self.pad_factor < 1:
            raise ValidationError("pad_factor must be at least 1")
        if not (0.0 < self.eps_r < self.r_m - 1.0):
            raise ValidationError("eps_r must lie in (0, r_m − 1)")

    def validate_mode(self, mode: str) -> None:
        """Check the extra constraints a 2-D/3-D inversion run imposes."""
        if mode == "3d" and not (0.0 < self.delta < self.r_m - 1.0):
            raise ValidationError(
                f"3-D inversion requires 0 < delta < r_m − 1, got delta={self.delta}"
            )

    # --- axes -----------------------------------------------------------
    def x0_axis(self) -> Axis:
        return cell_centered_axis(self.x0_min, self.x0_max, self.n_x0)

    def y0_axis(self) -> Axis:
        return cell_centered_axis(self.y0_min, self.y0_max, self.n_y0)

    def r_axis(self) -> Axis:
        lo = 1.0 + self.eps_r
        h = (self.r_m - lo) / (self.n_r - 1)
        return Axis(origin=lo, spacing=h, n=self.n_r)

    def z_axis(self) -> Axis:
        lo = (2.0 - self.r_m) if self.z_min is None else self.z_min
        hi = (1.0 - self.delta) if self.z_max is None else self.z_max
        return cell_centered_axis(lo, hi, self.n_z)

    def s_axis(self, mode: str) -> Axis:
        """Uniform grid in s = (radius)² used by the second-kind solve stage."""
        lo = (1.0 + (self.eps_r if mode == "2d" else self.delta)) ** 2
        hi = self.r_m**2
        n = 2 * self.n_r
        return Axis(origin=lo, spacing=(hi - lo) / (n - 1), n=n)

    def zeta_axis(self, mode: str) -> Axis:
        """Radius-like output grid of the inversion, ζ = √s."""
        lo = 1.0 + (self.eps_r if mode == "2d" else self.delta)
        return Axis(origin=lo, spacing=(self.r_m - lo) / (self.n_r - 1), n=self.n_r)


@dataclass
class ProfileFamily:
    """A family of C¹ radial profiles ρ_j(r, z) of surfaces of revolution.

    Each profile is a pair of callables ``(rho, drho_dz)`` defined on
    ``(r, z) ∈ [1, r_m] × [1, r]`` (the generalized parameterization uses the
    height variable z ∈ (1, r) with the density sampled at height 2−z).
    Per-profile bounds ``M_j`` are estimated by dense sampling with a 1%
    safety factor; ``M = max_j M_j`` feeds the generalized band limit.
    """

    profiles: tuple                # tuple of (rho(r, z), drho_dz(r, z)) pairs
    r_m: float
    bounds: tuple = field(default=())

    def __post_init__(self):
        if not self.profiles:
            raise ValidationError("profile family needs at least one profile")
        if not (self.r_m > 1.0):
            raise ValidationError(f"r_m must exceed 1, got {self.r_m}")
        if not self.bounds:
            self.bounds = tuple(self._estimate_bound(p) for p in self.profiles)
        if len(self.bounds) != len(self.profiles):
            raise ValidationError("one bound per profile required")

    def _estimate_bound(self, profile, samples: int = 512) -> float:
        rho, _ = profile
        r = np.linspace(1.0, self.r_m, samples)
        zmax_all = self.r_m
        z = np.linspace(1.0, zmax_all, samples)
        rr, zz = np.meshgrid(r, z, indexing="ij")
        mask = zz <= rr  # the profile's height range is (1, r) for each radius
        vals = np.where(mask, rho(rr, np.minimum(zz, rr)), 0.0)
        if np.any(vals[mask] < -1e-12):
            raise ValidationError("profiles must be nonnegative on their domain")
        top = float(np.max(vals))
        if top == 0.0:
            raise ValidationError("profile is identically zero on the sampled domain")
        return 1.01 * top

    @property
    def M(self) -> float:
        return max(self.bounds)


def apple_profile_family(r_m: float) -> ProfileFamily:
    """The apple's two sheets expressed in the generalized height convention.

    With z ∈ (1, r): outer sheet ρ = R + √(r²−z²), inner sheet ρ = R − √(r²−z²),
    whose graphs revolve into exactly the apple surface of radius r.
    """

    def outer(r, z):
        return np.sqrt(np.maximum(r * r - 1.0, 0.0)) + np.sqrt(np.maximum(r * r - z * z, 0.0))

    def outer_dz(r, z):
        return -z / np.sqrt(np.maximum(r * r - z * z, 1e-300))

    def inner(r, z):
        return np.sqrt(np.maximum(r * r - 1.0, 0.0)) - np.sqrt(np.maximum(r * r - z * z, 0.0))

    def inner_dz(r, z):
        return z / np.sqrt(np.maximum(r * r - z * z, 1e-300))

    return ProfileFamily(profiles=((outer, outer_dz), (inner, inner_dz)), r_m=r_m)


def cone_profile_family(r_m: float, beta: float) -> ProfileFamily:
    """Single cone profile ρ(r, z) = (z−1)·tan β on z ∈ (1, r)."""
    if not (0.0 < beta < math.pi / 2):
        raise ValidationError(f"cone half-angle must lie in (0, π/2), got {beta}")
    t = math.tan(beta)

    def rho(r, z):
        return (z - 1.0) * t

    def drho(r, z):
        return t * np.ones_like(np.asarray(z, dtype=float))

    return ProfileFamily(profiles=((rho, drho),), r_m=r_m)
