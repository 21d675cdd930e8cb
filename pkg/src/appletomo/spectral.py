"""Translation-direction Fourier stage and the squared-radius substitutions.

The continuum convention is the symmetric one,
``f̂(ω) = (2π)^(−n/2) ∫ f(x) e^(−i x·ω) dx``; the discrete transforms scale the
FFT by Δx·(2π)^(−1/2) per translation axis and carry the phase of the leftmost
sample so that values approximate the continuum transform at the angular
frequencies ω_k = 2πk/(NΔx) (unshifted FFT ordering). Parseval then holds
exactly on the grid: Σ|f̂|²Δω = Σ|f|²Δx.

Also here: the change of radial variable to s = r² (with its 1/(4√s) and 1/√s
bookkeeping divisors in 2-D and 3-D), its inverse, the height reflection
z ↦ 2−z, and the stable-band mask construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ValidationError
from .grids import Axis, DensityGrid, Sinogram2D, Sinogram3D
from .geometry import ScanConfig, stable_band_limit

__all__ = [
    "SpectralSinogram",
    "StableBand",
    "dft_translations",
    "idft_translations",
    "plancherel_residual",
    "substitute_square_2d",
    "substitute_square_3d",
    "unsubstitute",
    "reflect_z",
    "band_weight_profile",
    "build_stable_band",
]


@dataclass
class SpectralSinogram:
    """Sinogram transformed over its translation axes.

    ``values[radial, ω]`` (2-D) or ``values[radial, ω_y, ω_x]`` (3-D), with the
    unshifted FFT frequency ordering. ``tr_axes`` are the (padded) spatial
    translation axes the spectrum is conjugate to; ``n_orig`` the pre-padding
    sample counts. ``radial_kind`` tracks the current radial variable:
    'r' (radius), 's' (squared radius), or 'zeta' (radius again, after the
    inverse substitution).
    """

    radial: Axis
    omegas: tuple                 # one frequency array per translation axis (y before x)
    tr_axes: tuple                # matching padded spatial axes
    values: np.ndarray = field(repr=False)
    n_orig: tuple = ()
    radial_kind: str = "r"

    def __post_init__(self):
        shape = (self.radial.n,) + tuple(len(o) for o in self.omegas)
        if self.values.shape != shape:
            raise ValidationError(
                f"SpectralSinogram values shape {self.values.shape} != expected {shape}"
            )
        if len(self.omegas) not in (1, 2) or len(self.tr_axes) != len(self.omegas):
            raise ValidationError("SpectralSinogram needs 1 or 2 translation axes")
        if not self.n_orig:
            self.n_orig = tuple(ax.n for ax in self.tr_axes)

    @property
    def dim(self) -> int:
        return 1 + len(self.omegas)


def _omega_axis(ax: Axis) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(ax.n, d=ax.spacing)


def _pad_axis(ax: Axis, pad_factor: int) -> Axis:
    return Axis(origin=ax.origin, spacing=ax.spacing, n=ax.n * pad_factor)


def dft_translations(sino, pad_factor: int = 1) -> SpectralSinogram:
    """DFT a sinogram over its translation axes (zero-padded by ``pad_factor``).

    Padding suppresses periodic wrap-around: sinograms decay in the
    translation offsets but are not compactly supported.
    """
    if pad_factor < 1:
        raise ValidationError("pad_factor must be at least 1")
    if isinstance(sino, Sinogram2D):
        axes_sp = (sino.x0_axis,)
        arr = sino.values
    elif isinstance(sino, Sinogram3D):
        axes_sp = (sino.y0_axis, sino.x0_axis)
        arr = sino.values
    else:
        raise ValidationError("dft_translations expects a Sinogram2D or Sinogram3D")
    padded = tuple(_pad_axis(ax, pad_factor) for ax in axes_sp)
    pad_width = [(0, 0)] + [(0, p.n - ax.n) for p, ax in zip(padded, axes_sp)]
    arr = np.pad(arr, pad_width)
    tr = tuple(range(1, arr.ndim))
    spec = np.fft.fftn(arr, axes=tr).astype(complex)
    scale = 1.0
    for axis_index, ax in zip(tr, padded):
        om = _omega_axis(ax)
        phase = np.exp(-1j * om * ax.origin)
        shape = [1] * arr.ndim
        shape[axis_index] = ax.n
        spec = spec * phase.reshape(shape)
        scale *= ax.spacing / np.sqrt(2.0 * np.pi)
    spec *= scale
    return SpectralSinogram(
        radial=sino.r_axis,
        omegas=tuple(_omega_axis(ax) for ax in padded),
        tr_axes=padded,
        values=spec,
        n_orig=tuple(ax.n for ax in axes_sp),
    )


def idft_translations(spec: SpectralSinogram):
    """Invert :func:`dft_translations`; returns a sinogram on the *padded* axes."""
    arr = spec.values.copy()
    tr = tuple(range(1, arr.ndim))
    for axis_index, ax, om in zip(tr, spec.tr_axes, spec.omegas):
        phase = np.exp(+1j * np.asarray(om) * ax.origin)
        shape = [1] * arr.ndim
        shape[axis_index] = len(om)
        arr = arr * phase.reshape(shape)
        arr = arr * (np.sqrt(2.0 * np.pi) / ax.spacing)
    vals = np.fft.ifftn(arr, axes=tr)
    vals = vals.real if np.max(np.abs(vals.imag)) < 1e-9 * max(np.max(np.abs(vals.real)), 1e-300) else vals.real
    if len(tr) == 1:
        return Sinogram2D(r_axis=spec.radial, x0_axis=spec.tr_axes[0], values=vals)
    return Sinogram3D(
        r_axis=spec.radial, y0_axis=spec.tr_axes[0], x0_axis=spec.tr_axes[1], values=vals
    )


def plancherel_residual(f: np.ndarray, dx) -> float:
    """Relative mismatch |‖f‖ − ‖f̂‖| / ‖f‖ of the scaled transform (0 for zero input)."""
    f = np.asarray(f)
    dxs = np.broadcast_to(np.asarray(dx, dtype=float), (f.ndim,))
    if np.any(dxs <= 0):
        raise ValidationError("spacings must be positive")
    cell = float(np.prod(dxs))
    norm_f = np.sqrt(np.sum(np.abs(f) ** 2) * cell)
    if norm_f == 0.0:
        return 0.0
    F = np.fft.fftn(f)
    scale = cell / (2.0 * np.pi) ** (f.ndim / 2.0)
    dws = [2.0 * np.pi / (n * d) for n, d in zip(f.shape, dxs)]
    norm_F = np.sqrt(np.sum(np.abs(F * scale) ** 2) * float(np.prod(dws)))
    return abs(norm_f - norm_F) / norm_f


# ---------------------------------------------------------------------------
# squared-radius substitution
# ---------------------------------------------------------------------------


def _pchip_complex(x: np.ndarray, y: np.ndarray, xq: np.ndarray) -> np.ndarray:
    """Shape-preserving cubic resample along axis 0 (real/imag separately)."""
    re = PchipInterpolator(x, y.real, axis=0)(xq)
    if np.iscomplexobj(y):
        return re + 1j * PchipInterpolator(x, y.imag, axis=0)(xq)
    return re


def _default_s_axis(r: Axis) -> Axis:
    lo, hi = r.origin**2, r.last**2
    n = 2 * r.n
    return Axis(origin=lo, spacing=(hi - lo) / (n - 1), n=n)


def _substitute(spec: SpectralSinogram, s_axis: Axis | None, divisor) -> SpectralSinogram:
    if spec.radial_kind != "r":
        raise ValidationError("substitution expects a spectrum in the radius variable")
    r = spec.radial.values
    if r.size < 64:
        raise ValidationError("substitution needs at least 64 radius samples")
    if s_axis is None:
        s_axis = _default_s_axis(spec.radial)
    s = s_axis.values
    if s[0] <= 1.0 or s[-1] > spec.radial.last**2 * (1.0 + 1e-12):
        raise ValidationError(
            f"s grid [{s[0]}, {s[-1]}] must lie inside (1, r_m² = {spec.radial.last ** 2}]"
        )
    root = np.sqrt(s)
    eps = 1e-12 * max(1.0, r[-1])
    if root[0] < r[0] - eps or root[-1] > r[-1] + eps:
        raise ValidationError("s grid maps outside the sampled radius range")
    vals = _pchip_complex(r, spec.values, np.clip(root, r[0], r[-1]))
    shape = (len(s),) + (1,) * (spec.values.ndim - 1)
    vals = vals / divisor(root).reshape(shape)
    return SpectralSinogram(
        radial=s_axis,
        omegas=spec.omegas,
        tr_axes=spec.tr_axes,
        values=vals,
        n_orig=spec.n_orig,
        radial_kind="s",
    )


def substitute_square_2d(spec: SpectralSinogram, s_axis: Axis | None = None) -> SpectralSinogram:
    """Resample a 2-D spectrum from radius r to s = r², dividing by 4√s."""
    if len(spec.omegas) != 1:
        raise ValidationError("substitute_square_2d expects one translation axis")
    return _substitute(spec, s_axis, lambda root: 4.0 * root)


def substitute_square_3d(spec: SpectralSinogram, s_axis: Axis | None = None) -> SpectralSinogram:
    """Resample a 3-D spectrum from radius r to s = r², dividing by √s."""
    if len(spec.omegas) != 2:
        raise ValidationError("substitute_square_3d expects two translation axes")
    return _substitute(spec, s_axis, lambda root: root)


def unsubstitute(spec: SpectralSinogram, zeta_axis: Axis | None = None) -> SpectralSinogram:
    """Invert the squared-radius substitution: f̂₁(ω, ζ) = 2ζ · f̂₂(ω, ζ²)."""
    if spec.radial_kind != "s":
        raise ValidationError("unsubstitute expects a spectrum in the squared-radius variable")
    s = spec.radial.values
    if zeta_axis is None:
        lo, hi = np.sqrt(s[0]), np.sqrt(s[-1])
        n = max(s.size // 2, 2)
        zeta_axis = Axis(origin=lo, spacing=(hi - lo) / (n - 1), n=n)
    zeta = zeta_axis.values
    sq = zeta**2
    eps = 1e-12 * max(1.0, s[-1])
    if sq[0] < s[0] - eps or sq[-1] > s[-1] + eps:
        raise ValidationError("zeta grid maps outside the sampled s range")
    vals = _pchip_complex(s, spec.values, np.clip(sq, s[0], s[-1]))
    shape = (len(zeta),) + (1,) * (spec.values.ndim - 1)
    vals = vals * (2.0 * zeta).reshape(shape)
    return SpectralSinogram(
        radial=zeta_axis,
        omegas=spec.omegas,
        tr_axes=spec.tr_axes,
        values=vals,
        n_orig=spec.n_orig,
        radial_kind="zeta",
    )


def reflect_z(grid: DensityGrid) -> DensityGrid:
    """Reflect the height axis about z = 1: output(z) = input(2 − z).

    The output axis is the reflected input axis re-sorted ascending, so the
    operation is an exact (bit-wise) involution.
    """
    zax = grid.z_axis
    new_z = Axis(origin=2.0 - zax.last, spacing=zax.spacing, n=zax.n)
    return DensityGrid(axes=(new_z,) + grid.axes[1:], values=grid.values[::-1].copy())


# ---------------------------------------------------------------------------
# stable band
# ---------------------------------------------------------------------------


@dataclass
class StableBand:
    """Raised-cosine frequency mask on the translation-frequency grid.

    weight = 1 for |ω| ≤ (1−τ)·Ω_max, 0 for |ω| ≥ Ω_max, and the monotone
    raised-cosine ½(1+cos(π(|ω|−(1−τ)Ω)/(τΩ))) in between. ``omegas`` holds
    one frequency array per translation axis (unshifted ordering); ``weights``
    has one value per frequency sample (shape (n_ωy, n_ωx) in 3-D).
    """

    omegas: tuple
    weights: np.ndarray = field(repr=False)
    omega_max: float = 0.0
    taper: float = 0.0

    def __post_init__(self):
        expect = tuple(len(o) for o in self.omegas)
        if self.weights.shape != expect:
            raise ValidationError(
                f"StableBand weights shape {self.weights.shape} != frequency grid {expect}"
            )
        if np.any(self.weights < 0.0) or np.any(self.weights > 1.0):
            raise ValidationError("StableBand weights must lie in [0, 1]")

    @property
    def abs_omega(self) -> np.ndarray:
        if len(self.omegas) == 1:
            return np.abs(np.asarray(self.omegas[0]))
        oy, ox = (np.asarray(o) for o in self.omegas)
        return np.sqrt(oy[:, None] ** 2 + ox[None, :] ** 2)

    def with_weights(self, weights: np.ndarray) -> "StableBand":
        return StableBand(
            omegas=self.omegas, weights=weights, omega_max=self.omega_max, taper=self.taper
        )


def band_weight_profile(abs_omega: np.ndarray, omega_max: float, taper: float) -> np.ndarray:
    """Raised-cosine weight as a function of |ω| (taper=0 → hard indicator of |ω| < Ω)."""
    if not (omega_max > 0.0):
        raise ValidationError("omega_max must be positive")
    if not (0.0 <= taper <= 1.0):
        raise ValidationError("taper must lie in [0, 1]")
    a = np.abs(np.asarray(abs_omega, dtype=float))
    flat_edge = (1.0 - taper) * omega_max
    w = np.zeros(a.shape)
    w[(a <= flat_edge) & (a < omega_max)] = 1.0
    if taper > 0.0:
        mid = (a > flat_edge) & (a < omega_max)
        w[mid] = 0.5 * (1.0 + np.cos(np.pi * (a[mid] - flat_edge) / (taper * omega_max)))
    return w


def build_stable_band(
    cfg: ScanConfig,
    mode: str,
    taper: float | None = None,
    axes: tuple | None = None,
    omega_max: float | None = None,
) -> StableBand:
    """Stable-band mask for the configured scan (radial in (ω₁, ω₂) for 3-D).

    ``axes`` defaults to the pad_factor-padded translation axes of the scan;
    pass explicit axes to build a mask matching some other grid (for example a
    reconstruction output or a reference grid).
    """
    mode = mode.lower()
    if mode not in ("2d", "3d"):
        raise ValidationError(f"mode must be '2d' or '3d', got {mode!r}")
    if taper is None:
        taper = cfg.taper
    if omega_max is None:
        omega_max = stable_band_limit(cfg.r_m, mode)
    if axes is None:
        if mode == "2d":
            axes = (_pad_axis(cfg.x0_axis(), cfg.pad_factor),)
        else:
            axes = (
                _pad_axis(cfg.y0_axis(), cfg.pad_factor),
                _pad_axis(cfg.x0_axis(), cfg.pad_factor),
            )
    omegas = tuple(_omega_axis(ax) for ax in axes)
    if len(omegas) == 1:
        absw = np.abs(omegas[0])
    else:
        absw = np.sqrt(omegas[0][:, None] ** 2 + omegas[1][None, :] ** 2)
    return StableBand(
        omegas=omegas,
        weights=band_weight_profile(absw, omega_max, taper),
        omega_max=float(omega_max),
        taper=float(taper),
    )
