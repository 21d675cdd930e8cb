"""Phantom primitives, support handling, sampling, and band-limited filtering."""

import math

import numpy as np
import pytest

from appletomo import (
    DensityGrid,
    Phantom,
    Primitive,
    ScanConfig,
    StableBand,
    ValidationError,
    band_limited_reference,
    build_stable_band,
    cell_centered_axis,
    format_phantom,
    parse_phantom,
    sample_grid,
    sample_on_axes,
    strip_clipped,
)
from conftest import WIDE_2D, gaussian_2d


# --- primitives ----------------------------------------------------------------


def test_gaussian_truncates_at_six_sigma():
    p = Primitive(kind="gaussian", center=(0.0, 0.0), size=0.1, amplitude=2.0)
    assert p.eval((np.array(0.0), np.array(0.0))) == 2.0
    assert p.eval((np.array(0.61), np.array(0.0))) == 0.0  # beyond 6σ on one axis
    v = p.eval((np.array(0.59), np.array(0.0)))
    assert abs(v - 2.0 * math.exp(-0.5 * 5.9**2)) < 1e-18


def test_ball_and_box_indicators():
    ball = Primitive(kind="ball", center=(0.0, 0.0), size=(0.2, 0.1), amplitude=1.5)
    assert ball.eval((np.array(0.19), np.array(0.0))) == 1.5
    assert ball.eval((np.array(0.21), np.array(0.0))) == 0.0
    assert ball.eval((np.array(0.0), np.array(0.11))) == 0.0
    box = Primitive(kind="box", center=(1.0, 0.5), size=0.25, amplitude=-1.0)
    assert box.eval((np.array(1.2), np.array(0.5))) == -1.0
    assert box.eval((np.array(1.3), np.array(0.5))) == 0.0


def test_primitive_validation():
    with pytest.raises(ValidationError):
        Primitive(kind="cone", center=(0.0, 0.0), size=0.1, amplitude=1.0)
    with pytest.raises(ValidationError):
        Primitive(kind="gaussian", center=(0.0,), size=0.1, amplitude=1.0)
    with pytest.raises(ValidationError):
        Primitive(kind="gaussian", center=(0.0, 0.0), size=-0.1, amplitude=1.0)
    with pytest.raises(ValidationError):
        Primitive(kind="gaussian", center=(0.0, 0.0), size=(0.1, 0.1, 0.1), amplitude=1.0)


# --- phantom support semantics ----------------------------------------------------


def test_phantom_eval_is_linear_in_primitives():
    a = Primitive(kind="gaussian", center=(0.1, 0.4), size=0.2, amplitude=0.7)
    b = Primitive(kind="ball", center=(-0.3, 0.5), size=0.15, amplitude=-0.4)
    both = Phantom(dim=2, primitives=(a, b), support=WIDE_2D)
    only_a = Phantom(dim=2, primitives=(a,), support=WIDE_2D)
    only_b = Phantom(dim=2, primitives=(b,), support=WIDE_2D)
    x = np.linspace(-1.0, 1.0, 41)
    z = np.linspace(0.0, 1.0, 41)
    X, Z = np.meshgrid(x, z, indexing="ij")
    np.testing.assert_allclose(
        both.eval_at(X, Z), only_a.eval_at(X, Z) + only_b.eval_at(X, Z), rtol=0, atol=1e-15
    )


def test_declared_support_clips_hard():
    ph = Phantom(
        dim=2,
        primitives=(Primitive(kind="gaussian", center=(0.0, 0.5), size=0.2, amplitude=1.0),),
        support=((-0.3, 0.3), (0.2, 0.8)),
    )
    assert ph.eval_at(0.0, 0.5) == 1.0
    assert ph.eval_at(0.31, 0.5) == 0.0   # inside 6σ but outside the declared box
    assert ph.eval_at(0.0, 0.81) == 0.0


def test_primitive_entirely_outside_support_rejected():
    with pytest.raises(ValidationError):
        Phantom(
            dim=2,
            primitives=(Primitive(kind="gaussian", center=(5.0, 5.0), size=0.1, amplitude=1.0),),
            support=((-1.0, 1.0), (0.0, 1.0)),
        )


def test_validate_strip():
    ok = Phantom(
        dim=2,
        primitives=(Primitive(kind="gaussian", center=(0.0, 0.5), size=0.05, amplitude=1.0),),
        support=((-1.0, 1.0), (0.1, 0.8)),
    )
    ok.validate_strip(r_m=2.0, delta=0.1)
    # declared z-support reaching the standoff plane is rejected
    touching = Phantom(
        dim=2,
        primitives=(Primitive(kind="gaussian", center=(0.0, 0.5), size=0.05, amplitude=1.0),),
        support=((-1.0, 1.0), (0.1, 0.95)),
    )
    with pytest.raises(ValidationError):
        touching.validate_strip(r_m=2.0, delta=0.1)


def test_strip_clipped():
    wide = gaussian_2d(0.0, 0.5, 0.2)
    clipped = strip_clipped(wide, r_m=2.0, delta=0.1)
    clipped.validate_strip(r_m=2.0, delta=0.1)
    lo, hi = clipped.z_support
    assert lo > 0.0 and hi < 0.9
    # values inside the strip are unchanged, values outside vanish
    assert clipped.eval_at(0.0, 0.5) == wide.eval_at(0.0, 0.5)
    assert clipped.eval_at(0.0, 0.95) == 0.0
    with pytest.raises(ValidationError):
        strip_clipped(gaussian_2d(0.0, 5.0, 0.05, support=((-1, 1), (4.5, 5.5))), 2.0, 0.1)


def test_values_vanish_outside_scanning_strip():
    r_m, delta = 2.0, 0.05
    ph = strip_clipped(gaussian_2d(0.3, 0.9, 0.3), r_m, delta)
    x = np.linspace(-1.0, 1.0, 21)
    assert np.all(ph.eval_at(x, np.full_like(x, 1.0 - delta)) == 0.0)
    assert np.all(ph.eval_at(x, np.full_like(x, 2.0 - r_m)) == 0.0)


# --- sampling -----------------------------------------------------------------


def test_sample_grid_matches_eval(small_cfg_2d):
    ph = strip_clipped(gaussian_2d(0.2, 0.4, 0.15), small_cfg_2d.r_m, small_cfg_2d.delta)
    grid = sample_grid(ph, small_cfg_2d)
    assert grid.values.shape == (small_cfg_2d.n_z, small_cfg_2d.n_x0)
    z = grid.axes[0].values
    x = grid.axes[1].values
    Z, X = np.meshgrid(z, x, indexing="ij")
    np.testing.assert_array_equal(grid.values, ph.eval_at(X, Z))


def test_sample_on_axes_roundtrip(small_cfg_2d):
    ph = strip_clipped(gaussian_2d(-0.1, 0.6, 0.1), small_cfg_2d.r_m, small_cfg_2d.delta)
    base = sample_grid(ph, small_cfg_2d)
    again = sample_on_axes(ph, base.axes)
    np.testing.assert_array_equal(base.values, again.values)
    assert base.same_axes(again)


def test_sample_grid_requires_strip_support(small_cfg_2d):
    with pytest.raises(ValidationError):
        sample_grid(gaussian_2d(0.0, 0.5, 0.3), small_cfg_2d)  # support box too tall


# --- band-limited reference ------------------------------------------------------


def _grid_with_cosine(n: int, k: int) -> DensityGrid:
    """A 2-D grid holding cos over an exact DFT bin k of the x axis."""
    zax = cell_centered_axis(0.0, 1.0, 8)
    xax = cell_centered_axis(-2.0, 2.0, n)
    x = xax.values
    period = n * xax.spacing
    vals = np.tile(np.cos(2.0 * np.pi * k * x / period), (8, 1))
    return DensityGrid(axes=(zax, xax), values=vals)


def _band_for(grid: DensityGrid, omega_max: float, taper: float = 0.0) -> StableBand:
    cfg = ScanConfig()
    return build_stable_band(cfg, "2d", taper=taper, axes=grid.axes[1:], omega_max=omega_max)


def test_band_reference_all_pass_is_identity(small_cfg_2d):
    ph = strip_clipped(gaussian_2d(0.0, 0.4, 0.12), small_cfg_2d.r_m, small_cfg_2d.delta)
    grid = sample_grid(ph, small_cfg_2d)
    band = _band_for(grid, omega_max=1e9)
    out = band_limited_reference(grid, band)
    assert np.max(np.abs(out.values - grid.values)) < 1e-12


def test_band_reference_all_stop_is_zero(small_cfg_2d):
    ph = strip_clipped(gaussian_2d(0.0, 0.4, 0.12), small_cfg_2d.r_m, small_cfg_2d.delta)
    grid = sample_grid(ph, small_cfg_2d)
    band = _band_for(grid, omega_max=1.0)
    band = band.with_weights(np.zeros_like(band.weights))
    out = band_limited_reference(grid, band)
    assert np.max(np.abs(out.values)) == 0.0


def test_band_reference_passes_in_band_sinusoid():
    grid = _grid_with_cosine(n=128, k=3)
    omega3 = 2.0 * np.pi * 3 / (128 * grid.axes[1].spacing)
    band = _band_for(grid, omega_max=2.0 * omega3)  # bin 3 well inside the flat region
    out = band_limited_reference(grid, band)
    assert np.max(np.abs(out.values - grid.values)) < 1e-10


def test_band_reference_removes_out_of_band_sinusoid():
    grid = _grid_with_cosine(n=128, k=40)
    omega3 = 2.0 * np.pi * 3 / (128 * grid.axes[1].spacing)
    band = _band_for(grid, omega_max=2.0 * omega3)  # bin 40 far beyond the cutoff
    out = band_limited_reference(grid, band)
    assert np.max(np.abs(out.values)) < 1e-12


def test_band_reference_idempotent(small_cfg_2d):
    ph = strip_clipped(gaussian_2d(0.1, 0.5, 0.1), small_cfg_2d.r_m, small_cfg_2d.delta)
    grid = sample_grid(ph, small_cfg_2d)
    band = _band_for(grid, omega_max=1.0, taper=0.25)
    once = band_limited_reference(grid, band)
    twice = band_limited_reference(once, band)
    scale = np.max(np.abs(once.values))
    assert np.max(np.abs(twice.values - once.values)) < 1e-12 * max(scale, 1.0)


def test_band_reference_rejects_mismatched_frequencies(small_cfg_2d):
    ph = strip_clipped(gaussian_2d(0.0, 0.4, 0.12), small_cfg_2d.r_m, small_cfg_2d.delta)
    grid = sample_grid(ph, small_cfg_2d)
    other = _grid_with_cosine(n=100, k=2)
    band = _band_for(other, omega_max=1.0)
    with pytest.raises(ValidationError):
        band_limited_reference(grid, band)


# --- text format -----------------------------------------------------------------


def test_parse_format_roundtrip():
    text = "# two components\ngaussian 0.0 0.3 0.15 1.0\nball -0.4 0.55 0.1 0.5\n"
    ph = parse_phantom(text, support=WIDE_2D)
    assert len(ph.primitives) == 2
    again = parse_phantom(format_phantom(ph), support=WIDE_2D)
    assert again.primitives == ph.primitives


def test_parse_phantom_3d():
    ph = parse_phantom("gaussian 0.0 0.1 0.3 0.15 1.0\n", support=((-8, 8), (-8, 8), (-8, 8)))
    assert ph.primitives[0].dim == 3


def test_parse_phantom_errors():
    with pytest.raises(ValidationError):
        parse_phantom("blob 0 0 1 1\n", support=WIDE_2D)
    with pytest.raises(ValidationError):
        parse_phantom("gaussian 0 0 1\n", support=WIDE_2D)
    with pytest.raises(ValidationError):
        parse_phantom("gaussian 0 zero 1 1\n", support=WIDE_2D)
    with pytest.raises(ValidationError):
        # inconsistent dimensions across lines
        parse_phantom("gaussian 0 0 1 1\ngaussian 0 0 0 1 1\n", support=WIDE_2D)
