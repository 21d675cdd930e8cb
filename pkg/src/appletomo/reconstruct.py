"""End-to-end inversion of toric-section (2-D) and apple (3-D) sinograms.

Each translation frequency is processed independently (the problem decouples
after the translation-direction DFT):

2-D, per frequency ω₁ inside the stable band:
  data → /cos(ω₁√(s−1)) → Abel integral → (1/π)·d/ds → second-kind solve with
  kernel K(s,z) and λ = −ω₁²/π → recovered density spectrum.

3-D, per frequency pair (ω₁, ω₂):
  data → Abel integral → d/ds → divide by the radial normalizer
  2π²·2√(s−1)J₀(|ω|√(s−1)) → second-kind solve with the kernel
  ∂K₁/∂s / (2π²·2√(s−1)J₀(|ω|√(s−1))), λ = 1.

Frequencies whose normalizer dips below ``eps_norm`` anywhere on the s-grid
are dropped (the division would amplify noise unboundedly near the normalizer
roots); the result records them and carries the *effective* band mask with
those bins zeroed, which is the correct mask for reference comparisons.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalGuardError, ValidationError
from .geometry import ScanConfig
from .grids import Axis, DensityGrid, Sinogram2D, Sinogram3D
from .spectral import (
    SpectralSinogram,
    StableBand,
    build_stable_band,
    dft_translations,
    idft_translations,
    reflect_z,
    substitute_square_2d,
    substitute_square_3d,
    unsubstitute,
)
from .volterra import (
    abel_weights,
    bessel_j0,
    build_kernel_table_2d,
    build_kernel_table_3d_dk1,
    derivative_matrix,
    integration_matrix,
)

__all__ = [
    "normalizer_2d",
    "normalizer_3d",
    "FrequencyDiagnostic",
    "ReconstructionResult",
    "reconstruct_2d",
    "reconstruct_3d",
    "metrics",
]

# The u-integral of the arcsine weight (π) times the axial angle factor (2π)
# sit in front of the radial normalizer on the diagonal of the 3-D kernel;
# the pipeline divides them out together with normalizer_3d.
K1_DIAGONAL_FACTOR_3D = 2.0 * math.pi**2


def normalizer_2d(omega1, s):
    """Radial normalizer of the 2-D inversion: cos(ω₁·√(s−1))."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 1.0):
        raise ValidationError("normalizer_2d requires s >= 1")
    return np.cos(omega1 * np.sqrt(s - 1.0))


def normalizer_3d(omega_mag, s):
    """Radial normalizer of the 3-D inversion: 2√(s−1)·J₀(|ω|·√(s−1))."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 1.0):
        raise ValidationError("normalizer_3d requires s >= 1")
    root = np.sqrt(s - 1.0)
    return 2.0 * root * bessel_j0(omega_mag * root)


@dataclass(frozen=True)
class FrequencyDiagnostic:
    """Condition record for one processed frequency (or frequency pair)."""

    omega: float            # |ω| of the bin
    retained: bool          # False when dropped by the eps_norm floor
    normalizer_min: float   # min |normalizer| over the s grid
    residual: float         # relative discrete residual of the solve (0 if dropped)


@dataclass
class ReconstructionResult:
    """Recovered density plus the band actually used and per-frequency health."""

    grid: DensityGrid
    band: StableBand              # requested mask on the (padded) frequency grid
    band_effective: StableBand    # requested mask with dropped frequencies zeroed
    diagnostics: list = field(default_factory=list)
    amplification_bound: float = float("nan")
    runtime_seconds: float = 0.0
    workers: int = 1
    mode: str = "2d"

    def __post_init__(self):
        if not np.all(np.isfinite(self.grid.values)):
            raise ValidationError("reconstruction produced non-finite values")


# ---------------------------------------------------------------------------
# shared per-frequency machinery
# ---------------------------------------------------------------------------


def _solve_lower_multi(K: np.ndarray, lam: float, h: float, G: np.ndarray) -> np.ndarray:
    """Forward substitution of the trapezoid-discretized second-kind system,
    vectorized over the columns of G (shape (n, m))."""
    n = K.shape[0]
    diag = 1.0 + 0.5 * lam * h * np.diag(K)
    if np.any(np.abs(diag) < 1e-8):
        raise NumericalGuardError("near-singular diagonal in the per-frequency solve")
    f = np.zeros_like(G, dtype=complex)
    f[0] = G[0]
    for i in range(1, n):
        acc = 0.5 * K[i, 0] * f[0]
        if i > 1:
            acc = acc + K[i, 1:i] @ f[1:i]
        f[i] = (G[i] - lam * h * acc) / diag[i]
    return f


def _solve_residuals(K, lam, h, f, G) -> np.ndarray:
    """Relative ∞-norm residuals of f + λ∫Kf = G, one per column."""
    integ = h * (K @ f - 0.5 * (K[:, :1] * f[:1, :] + np.diag(K)[:, None] * f))
    integ[0] = 0.0
    res = f + lam * integ - G
    scale = np.maximum(np.max(np.abs(G), axis=0), 1e-300)
    return np.max(np.abs(res), axis=0) / scale


def _lower_matrix(K: np.ndarray, lam: float, h: float) -> np.ndarray:
    """The dense lower-triangular operator L with L f = g of the discrete solve."""
    return np.eye(K.shape[0]) + lam * integration_matrix(K, h)


def _inverse_gain(K: np.ndarray, lam: float, h: float) -> float:
    """Spectral-norm gain of the solve stage, ‖L⁻¹‖₂ = 1/σ_min(L)."""
    sv = np.linalg.svd(_lower_matrix(K, lam, h), compute_uv=False)
    return 1.0 / float(sv[-1])


def _process_bins_2d(payload) -> tuple:
    """Worker: run steps normalize→Abel→derivative→solve for a chunk of ω₁ bins."""
    (s, cols, omegas, eps_norm, n_theta) = payload
    h = float(s[1] - s[0])
    W = abel_weights(s)
    D = derivative_matrix(s.size, h)
    out = np.zeros_like(cols, dtype=complex)
    diags, gains = [], []
    for j, om in enumerate(omegas):
        norm = normalizer_2d(om, s)
        norm_min = float(np.min(np.abs(norm)))
        if norm_min < eps_norm:
            diags.append((abs(om), False, norm_min, 0.0))
            gains.append(0.0)
            continue
        data = cols[:, j] / norm
        g1 = (D @ (W @ data)) / np.pi
        lam = -(om**2) / np.pi
        K = build_kernel_table_2d(s, om, n_theta=n_theta).values
        f = _solve_lower_multi(K, lam, h, g1[:, None])
        res = float(_solve_residuals(K, lam, h, f, g1[:, None])[0])
        out[:, j] = f[:, 0]
        diags.append((abs(om), True, norm_min, res))
        gains.append(_inverse_gain(K, lam, h) / norm_min)
    return out, diags, gains


def _process_groups_3d(payload) -> tuple:
    """Worker: process a chunk of |ω| groups of (ω₁, ω₂) bins for the 3-D pipeline."""
    (s, col_blocks, group_omegas, eps_norm, n_theta, delta_floor) = payload
    h = float(s[1] - s[0])
    W = abel_weights(s)
    D = derivative_matrix(s.size, h)
    out_blocks, diag_blocks, gains = [], [], []
    for cols, om in zip(col_blocks, group_omegas):
        norm = normalizer_3d(om, s)
        norm_min = float(np.min(np.abs(norm)))
        m = cols.shape[1]
        if norm_min < eps_norm:
            out_blocks.append(np.zeros_like(cols, dtype=complex))
            diag_blocks.append([(om, False, norm_min, 0.0)] * m)
            gains.append(0.0)
            continue
        denom = (K1_DIAGONAL_FACTOR_3D * norm)[:, None]
        rhs = (D @ (W @ cols)) / denom
        K = build_kernel_table_3d_dk1(s, om, n_theta=n_theta, delta_floor=delta_floor).values
        K = K / denom
        f = _solve_lower_multi(K, 1.0, h, rhs)
        res = _solve_residuals(K, 1.0, h, f, rhs)
        out_blocks.append(f)
        diag_blocks.append([(om, True, norm_min, float(r)) for r in res])
        gains.append(_inverse_gain(K, 1.0, h) / (K1_DIAGONAL_FACTOR_3D * norm_min))
    return out_blocks, diag_blocks, gains


def _map_chunks(worker, payloads, workers: int):
    if workers <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, payloads))


def _chunk(seq, k: int):
    k = max(1, k)
    return [seq[i : i + k] for i in range(0, len(seq), k)]


# ---------------------------------------------------------------------------
# 2-D pipeline
# ---------------------------------------------------------------------------


def _check_sino_axes(sino, cfg: ScanConfig, mode: str):
    if not sino.r_axis.close_to(cfg.r_axis()):
        raise ValidationError("sinogram radius grid does not match the configuration")
    if not sino.x0_axis.close_to(cfg.x0_axis()):
        raise ValidationError("sinogram x0 grid does not match the configuration")
    if mode == "3d" and not sino.y0_axis.close_to(cfg.y0_axis()):
        raise ValidationError("sinogram y0 grid does not match the configuration")


def _check_band(band: StableBand, spec: SpectralSinogram):
    for bo, so in zip(band.omegas, spec.omegas):
        if len(bo) != len(so) or not np.allclose(bo, so, rtol=1e-10, atol=1e-12):
            raise ValidationError(
                "stable band was built for a different frequency grid than the data"
            )


def reconstruct_2d(
    sino: Sinogram2D,
    cfg: ScanConfig,
    band: StableBand | None = None,
    taper: float | None = None,
    eps_norm: float | None = None,
    workers: int = 1,
) -> ReconstructionResult:
    """Invert a toric-section sinogram on the stable frequency band."""
    t_start = time.perf_counter()
    cfg.validate_mode("2d")
    _check_sino_axes(sino, cfg, "2d")
    if eps_norm is None:
        eps_norm = cfg.eps_norm
    spec = dft_translations(sino, cfg.pad_factor)
    if band is None:
        band = build_stable_band(cfg, "2d", taper)
    _check_band(band, spec)

    s_axis = cfg.s_axis("2d")
    spec_s = substitute_square_2d(spec, s_axis)
    s = s_axis.values
    omegas = np.asarray(spec.omegas[0])
    n_om = omegas.size

    # canonical bins: nonnegative frequencies with positive band weight;
    # negative-frequency mirrors are filled by conjugate symmetry afterwards
    canon = [k for k in range(n_om) if band.weights[k] > 0.0 and omegas[k] >= 0.0]
    fhat2 = np.zeros_like(spec_s.values)
    diags: list[FrequencyDiagnostic] = []
    w_eff = band.weights.copy()

    payload_bins = _chunk(canon, max(1, len(canon) // max(workers, 1)))
    payloads = [
        (s, spec_s.values[:, bins], omegas[bins], eps_norm, 64) for bins in payload_bins
    ]
    results = _map_chunks(_process_bins_2d, payloads, workers)

    gains = []
    for bins, (out, dg, gn) in zip(payload_bins, results):
        for j, k in enumerate(bins):
            fhat2[:, k] = out[:, j]
            mirror = (n_om - k) % n_om
            fhat2[:, mirror] = np.conj(out[:, j])
            om, retained, nmin, res = dg[j]
            diags.append(FrequencyDiagnostic(om, bool(retained), nmin, res))
            if not retained:
                w_eff[k] = 0.0
                w_eff[mirror] = 0.0
        gains.extend(gn)

    fhat2 = fhat2 * w_eff[None, :]
    spec_f2 = SpectralSinogram(
        radial=s_axis, omegas=spec.omegas, tr_axes=spec.tr_axes,
        values=fhat2, n_orig=spec.n_orig, radial_kind="s",
    )
    spec_f1 = unsubstitute(spec_f2, cfg.zeta_axis("2d"))
    sino_f1 = idft_translations(spec_f1)
    grid_f1 = DensityGrid(axes=(spec_f1.radial, sino_f1.x0_axis), values=sino_f1.values)
    grid = reflect_z(grid_f1)

    h = s_axis.spacing
    dw_gain = float(np.linalg.svd(
        derivative_matrix(s.size, h) @ abel_weights(s) / np.pi, compute_uv=False
    )[0])
    amp = max(gains) * dw_gain * 2.0 * cfg.r_m if gains else float("nan")

    return ReconstructionResult(
        grid=grid,
        band=band,
        band_effective=band.with_weights(w_eff),
        diagnostics=diags,
        amplification_bound=amp,
        runtime_seconds=time.perf_counter() - t_start,
        workers=workers,
        mode="2d",
    )


# ---------------------------------------------------------------------------
# 3-D pipeline
# ---------------------------------------------------------------------------


def reconstruct_3d(
    sino: Sinogram3D,
    cfg: ScanConfig,
    band: StableBand | None = None,
    taper: float | None = None,
    eps_norm: float | None = None,
    workers: int = 1,
    delta_floor: float = 1e-3,
) -> ReconstructionResult:
    """Invert an apple-transform sinogram on the radial stable band."""
    t_start = time.perf_counter()
    cfg.validate_mode("3d")
    _check_sino_axes(sino, cfg, "3d")
    if eps_norm is None:
        eps_norm = cfg.eps_norm
    spec = dft_translations(sino, cfg.pad_factor)
    if band is None:
        band = build_stable_band(cfg, "3d", taper)
    _check_band(band, spec)

    s_axis = cfg.s_axis("3d")
    spec_s = substitute_square_3d(spec, s_axis)
    s = s_axis.values
    om_y = np.asarray(spec.omegas[0])
    om_x = np.asarray(spec.omegas[1])
    ny, nx = om_y.size, om_x.size

    # canonical = lexicographically-not-after its conjugate mirror
    canon = []
    for ky in range(ny):
        for kx in range(nx):
            if band.weights[ky, kx] <= 0.0:
                continue
            my, mx = (ny - ky) % ny, (nx - kx) % nx
            if (ky, kx) <= (my, mx):
                canon.append((ky, kx))

    # group by |ω| so each group shares one kernel table (the costly part)
    groups: dict = {}
    for ky, kx in canon:
        om = float(np.hypot(om_y[ky], om_x[kx]))
        groups.setdefault(round(om, 12), []).append((ky, kx))
    group_keys = sorted(groups)

    fhat2 = np.zeros_like(spec_s.values)
    w_eff = band.weights.copy()
    diags: list[FrequencyDiagnostic] = []

    chunked = _chunk(group_keys, max(1, len(group_keys) // max(workers, 1)))
    payloads = []
    for keys in chunked:
        blocks = [
            np.stack([spec_s.values[:, ky, kx] for ky, kx in groups[key]], axis=1)
            for key in keys
        ]
        payloads.append((s, blocks, [float(k) for k in keys], eps_norm, 96, delta_floor))
    results = _map_chunks(_process_groups_3d, payloads, workers)

    gains = []
    for keys, (out_blocks, diag_blocks, gn) in zip(chunked, results):
        for key, out, dg in zip(keys, out_blocks, diag_blocks):
            for (ky, kx), col, row in zip(groups[key], out.T, dg):
                fhat2[:, ky, kx] = col
                my, mx = (ny - ky) % ny, (nx - kx) % nx
                fhat2[:, my, mx] = np.conj(col)
                om, retained, nmin, res = row
                diags.append(FrequencyDiagnostic(om, bool(retained), nmin, res))
                if not retained:
                    w_eff[ky, kx] = 0.0
                    w_eff[my, mx] = 0.0
        gains.extend(gn)

    fhat2 = fhat2 * w_eff[None, :, :]
    spec_f2 = SpectralSinogram(
        radial=s_axis, omegas=spec.omegas, tr_axes=spec.tr_axes,
        values=fhat2, n_orig=spec.n_orig, radial_kind="s",
    )
    spec_f1 = unsubstitute(spec_f2, cfg.zeta_axis("3d"))
    sino_f1 = idft_translations(spec_f1)
    grid_f1 = DensityGrid(
        axes=(spec_f1.radial, sino_f1.y0_axis, sino_f1.x0_axis), values=sino_f1.values
    )
    grid = reflect_z(grid_f1)

    h = s_axis.spacing
    dw_gain = float(np.linalg.svd(
        derivative_matrix(s.size, h) @ abel_weights(s), compute_uv=False
    )[0])
    amp = max(gains) * dw_gain * 2.0 * cfg.r_m if gains else float("nan")

    return ReconstructionResult(
        grid=grid,
        band=band,
        band_effective=band.with_weights(w_eff),
        diagnostics=diags,
        amplification_bound=amp,
        runtime_seconds=time.perf_counter() - t_start,
        workers=workers,
        mode="3d",
    )


# ---------------------------------------------------------------------------
# quality metrics
# ---------------------------------------------------------------------------


def metrics(recon: DensityGrid, reference: DensityGrid, band: StableBand | None = None) -> dict:
    """rmse / psnr (and band_rmse when a band is given) between two grids."""
    if not recon.same_axes(reference):
        raise ValidationError("metrics needs grids on identical axes")
    diff = recon.values - reference.values
    rmse = float(np.sqrt(np.mean(diff**2)))
    peak = float(np.max(np.abs(reference.values)))
    if rmse == 0.0:
        psnr = float("inf")
    elif peak == 0.0:
        psnr = float("-inf")
    else:
        psnr = 20.0 * math.log10(peak / rmse)
    out = {"rmse": rmse, "psnr": psnr}
    if band is not None:
        from .phantom import band_limited_reference

        a = band_limited_reference(recon, band)
        b = band_limited_reference(reference, band)
        out["band_rmse"] = float(np.sqrt(np.mean((a.values - b.values) ** 2)))
    return out
