"""The inversion pipelines: normalizers, diagnostics, and small end-to-end runs."""

import math

import numpy as np
import pytest

from appletomo import (
    Axis,
    DensityGrid,
    FrequencyDiagnostic,
    ReconstructionResult,
    ScanConfig,
    Sinogram2D,
    Sinogram3D,
    ValidationError,
    band_limited_reference,
    bessel_j0,
    build_stable_band,
    cell_centered_axis,
    metrics,
    reconstruct_2d,
    reconstruct_3d,
    sample_on_axes,
    sinogram_2d,
    strip_clipped,
)
from appletomo.reconstruct import K1_DIAGONAL_FACTOR_3D, normalizer_2d, normalizer_3d
from conftest import gaussian_2d


@pytest.fixture(scope="module")
def cfg96() -> ScanConfig:
    return ScanConfig(r_m=2.0, n_x0=96, n_r=96, n_z=96, x0_min=-4.8, x0_max=4.8)


@pytest.fixture(scope="module")
def recon96(cfg96):
    ph = strip_clipped(gaussian_2d(0.0, 0.3, 0.15), cfg96.r_m, cfg96.delta)
    sino = sinogram_2d(ph, cfg96)
    return ph, sino, reconstruct_2d(sino, cfg96)


# --- normalizer profiles -----------------------------------------------------


def test_normalizer_2d_values(rng):
    s = np.linspace(1.0, 4.0, 50)
    for om in (0.0, 0.5, 1.3):
        np.testing.assert_allclose(
            normalizer_2d(om, s), np.cos(om * np.sqrt(s - 1.0)), rtol=0, atol=1e-15
        )
    assert normalizer_2d(0.7, 1.0) == 1.0
    with pytest.raises(ValidationError):
        normalizer_2d(0.5, 0.9)


def test_normalizer_3d_values():
    s = np.linspace(1.0, 4.0, 50)
    for om in (0.0, 0.8):
        want = 2.0 * np.sqrt(s - 1.0) * bessel_j0(om * np.sqrt(s - 1.0))
        np.testing.assert_allclose(normalizer_3d(om, s), want, rtol=0, atol=1e-14)
    assert normalizer_3d(0.8, 1.0) == 0.0  # vanishes at the inner edge


def test_3d_diagonal_factor():
    assert abs(K1_DIAGONAL_FACTOR_3D - 2.0 * math.pi**2) < 1e-14


# --- result containers ----------------------------------------------------------


def test_frequency_diagnostic_is_frozen():
    d = FrequencyDiagnostic(omega=0.5, retained=True, normalizer_min=0.3, residual=1e-14)
    with pytest.raises(Exception):
        d.omega = 1.0


def test_reconstruction_result_rejects_non_finite():
    zax = cell_centered_axis(0.0, 1.0, 4)
    xax = cell_centered_axis(-1.0, 1.0, 4)
    vals = np.zeros((4, 4))
    vals[1, 2] = np.nan
    band = build_stable_band(ScanConfig(n_x0=4, pad_factor=1), "2d")
    with pytest.raises(ValidationError):
        ReconstructionResult(
            grid=DensityGrid(axes=(zax, xax), values=vals),
            band=band, band_effective=band,
        )


# --- 2-D pipeline ------------------------------------------------------------------


def test_reconstruct_2d_recovers_band_limited_truth(cfg96, recon96):
    ph, sino, result = recon96
    ref = sample_on_axes(ph, result.grid.axes)
    band = result.band
    a = band_limited_reference(result.grid, band)
    b = band_limited_reference(ref, band)
    rel = np.linalg.norm(a.values - b.values) / np.linalg.norm(b.values)
    assert rel < 0.25
    assert result.mode == "2d"
    assert result.runtime_seconds > 0.0


def test_reconstruct_2d_diagnostics_consistent(cfg96, recon96):
    _, _, result = recon96
    assert result.diagnostics, "expected at least one processed frequency"
    for d in result.diagnostics:
        assert d.omega >= 0.0
        assert d.normalizer_min >= 0.0
        if d.retained:
            assert d.residual < 1e-10  # triangular solve is residual-exact
        else:
            assert d.residual == 0.0
    # every dropped frequency is zeroed in the effective band
    dropped = {round(d.omega, 12) for d in result.diagnostics if not d.retained}
    absw = np.abs(result.band_effective.omegas[0])
    for om in dropped:
        assert np.all(result.band_effective.weights[np.isclose(absw, om)] == 0.0)
    assert math.isfinite(result.amplification_bound)
    assert result.amplification_bound > 0.0


def test_reconstruct_2d_deterministic(cfg96, recon96):
    _, sino, result = recon96
    again = reconstruct_2d(sino, cfg96)
    np.testing.assert_array_equal(result.grid.values, again.grid.values)


def test_reconstruct_2d_workers_bitwise_equal(cfg96, recon96):
    _, sino, result = recon96
    parallel = reconstruct_2d(sino, cfg96, workers=2)
    np.testing.assert_array_equal(result.grid.values, parallel.grid.values)
    assert parallel.workers == 2


def test_reconstruct_2d_huge_floor_drops_everything(cfg96, recon96):
    _, sino, _ = recon96
    result = reconstruct_2d(sino, cfg96, eps_norm=2.0)
    assert not any(d.retained for d in result.diagnostics)
    assert np.all(result.grid.values == 0.0)
    assert np.all(result.band_effective.weights == 0.0)
    assert result.amplification_bound == 0.0


def test_reconstruct_2d_rejects_mismatched_axes(cfg96):
    other = ScanConfig(r_m=2.0, n_x0=64, n_r=64, n_z=64)
    ph = strip_clipped(gaussian_2d(0.0, 0.3, 0.15), 2.0, 0.0)
    sino = sinogram_2d(ph, other)
    with pytest.raises(ValidationError):
        reconstruct_2d(sino, cfg96)


def test_reconstruct_2d_rejects_foreign_band(cfg96, recon96):
    _, sino, _ = recon96
    off_grid = build_stable_band(
        cfg96, "2d", axes=(cell_centered_axis(-4.8, 4.8, 100),)
    )
    with pytest.raises(ValidationError):
        reconstruct_2d(sino, cfg96, band=off_grid)


def test_reconstruct_2d_zero_sinogram_gives_zero(cfg96):
    sino = Sinogram2D(
        r_axis=cfg96.r_axis(), x0_axis=cfg96.x0_axis(),
        values=np.zeros((cfg96.n_r, cfg96.n_x0)),
    )
    result = reconstruct_2d(sino, cfg96)
    assert np.all(result.grid.values == 0.0)


# --- 3-D pipeline mechanics ----------------------------------------------------------


def test_reconstruct_3d_zero_sinogram_mechanics():
    cfg = ScanConfig(
        r_m=2.0, delta=0.1, n_x0=24, n_y0=16, n_r=64, n_z=24,
        x0_min=-3.6, x0_max=3.6, y0_min=-2.4, y0_max=2.4, pad_factor=2,
    )
    sino = Sinogram3D(
        r_axis=cfg.r_axis(), y0_axis=cfg.y0_axis(), x0_axis=cfg.x0_axis(),
        values=np.zeros((64, 16, 24)),
    )
    result = reconstruct_3d(sino, cfg)
    assert result.mode == "3d"
    assert np.all(result.grid.values == 0.0)
    assert result.grid.values.shape == (cfg.n_r, 16 * 2, 24 * 2)
    assert result.diagnostics
    # each diagnostic row reports the shared |ω| of its frequency group
    assert all(d.omega >= 0.0 for d in result.diagnostics)
    again = reconstruct_3d(sino, cfg, workers=2)
    np.testing.assert_array_equal(result.grid.values, again.grid.values)


def test_reconstruct_3d_requires_positive_delta():
    cfg = ScanConfig(r_m=2.0, delta=0.0, n_x0=16, n_y0=16, n_r=24, n_z=16)
    sino = Sinogram3D(
        r_axis=cfg.r_axis(), y0_axis=cfg.y0_axis(), x0_axis=cfg.x0_axis(),
        values=np.zeros((24, 16, 16)),
    )
    with pytest.raises(ValidationError):
        reconstruct_3d(sino, cfg)


# --- metrics --------------------------------------------------------------------------


def test_metrics_identical_grids(cfg96, recon96):
    _, _, result = recon96
    m = metrics(result.grid, result.grid)
    assert m["rmse"] == 0.0
    assert m["psnr"] == float("inf")
    assert "band_rmse" not in m


def test_metrics_with_band(cfg96, recon96):
    ph, _, result = recon96
    ref = sample_on_axes(ph, result.grid.axes)
    band = build_stable_band(cfg96, "2d", axes=result.grid.axes[1:])
    m = metrics(result.grid, ref, band=band)
    assert 0.0 < m["band_rmse"] < m["rmse"]
    assert m["psnr"] > 0.0


def test_metrics_zero_reference():
    zax = cell_centered_axis(0.0, 1.0, 8)
    xax = cell_centered_axis(-1.0, 1.0, 8)
    a = DensityGrid(axes=(zax, xax), values=np.ones((8, 8)))
    b = DensityGrid(axes=(zax, xax), values=np.zeros((8, 8)))
    m = metrics(a, b)
    assert m["psnr"] == float("-inf")


def test_metrics_requires_matching_axes():
    a = DensityGrid(
        axes=(cell_centered_axis(0.0, 1.0, 8), cell_centered_axis(-1.0, 1.0, 8)),
        values=np.zeros((8, 8)),
    )
    b = DensityGrid(
        axes=(cell_centered_axis(0.0, 1.0, 9), cell_centered_axis(-1.0, 1.0, 9)),
        values=np.zeros((9, 9)),
    )
    with pytest.raises(ValidationError):
        metrics(a, b)
