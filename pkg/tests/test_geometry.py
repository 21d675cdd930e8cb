"""Geometry of toric sections, apples, and the stable frequency band."""

import math

import numpy as np
import pytest

from appletomo import (
    ScanConfig,
    ValidationError,
    alpha_max,
    alpha_of_height,
    apple_point,
    apple_profile_family,
    arc_measure,
    cone_profile_family,
    height_of_alpha,
    stable_band_limit,
    surface_measure,
    toric_branch_x,
    torus_params,
)

SQRT3 = math.sqrt(3.0)


# --- torus parameters --------------------------------------------------------


def test_torus_params_degenerate_r1():
    p = torus_params(1.0)
    assert p.R == 0.0
    assert p.h == 1.0


def test_torus_params_r2():
    p = torus_params(2.0)
    assert abs(p.R - SQRT3) < 1e-15
    assert p.h == 0.0


def test_torus_params_r_1_25():
    p = torus_params(1.25)
    assert abs(p.R - 0.75) < 1e-15
    assert abs(p.h - 0.75) < 1e-15


def test_torus_params_consistency_random(rng):
    for _ in range(200):
        r = float(rng.uniform(1.0, 6.0))
        p = torus_params(r)
        assert abs(p.R**2 - (r**2 - 1.0)) < 1e-12 * max(1.0, r**2)
        assert p.h == 2.0 - r
        if r > 1.0:
            assert p.R > 0.0


def test_torus_params_rejects_small_radius():
    with pytest.raises(ValidationError):
        torus_params(0.999)


# --- branch coordinates -------------------------------------------------------


def test_branch_x_top_of_section():
    # at z = 1 the half-chord equals R, so the two right branches meet at 0
    assert abs(toric_branch_x(2.0, 1.0, 1) - 2.0 * SQRT3) < 1e-14
    assert abs(toric_branch_x(2.0, 1.0, 2)) < 1e-14
    assert abs(toric_branch_x(2.0, 1.0, 3)) < 1e-14
    assert abs(toric_branch_x(2.0, 1.0, 4) + 2.0 * SQRT3) < 1e-14


def test_branch_x_bottom_of_circle():
    # at z = 2 − r the half-chord vanishes and each pair of branches meets at ±R
    assert abs(toric_branch_x(2.0, 0.0, 1) - SQRT3) < 1e-14
    assert abs(toric_branch_x(2.0, 0.0, 2) - SQRT3) < 1e-14
    assert abs(toric_branch_x(2.0, 0.0, 3) + SQRT3) < 1e-14
    assert abs(toric_branch_x(2.0, 0.0, 4) + SQRT3) < 1e-14


def test_branch_x_frozen_value():
    # independently computed: 0.75 − √(1.25² − 1.1²)
    assert abs(toric_branch_x(1.25, 0.9, 2) - 0.15628289564810427) < 1e-15


def test_branch_symmetries_random(rng):
    for _ in range(300):
        r = float(rng.uniform(1.01, 5.0))
        z = float(rng.uniform(2.0 - r, 1.0))
        x = [toric_branch_x(r, z, j) for j in (1, 2, 3, 4)]
        R = torus_params(r).R
        assert abs(x[0] + x[3]) < 1e-12          # x4 = −x1
        assert abs(x[1] + x[2]) < 1e-12          # x3 = −x2
        assert abs(x[0] + x[1] - 2.0 * R) < 1e-12  # branches share the center offset
        # every branch point lies on a circle of radius r centered at (±R, 2)
        for j, xj in enumerate(x, start=1):
            cx = R if j in (1, 2) else -R
            assert abs((xj - cx) ** 2 + (z - 2.0) ** 2 - r**2) < 1e-10


def test_branch_x_rejects_bad_height():
    with pytest.raises(ValidationError):
        toric_branch_x(2.0, 1.5, 1)
    with pytest.raises(ValidationError):
        toric_branch_x(2.0, -0.5, 1)
    with pytest.raises(ValidationError):
        toric_branch_x(2.0, 0.5, 5)


def test_branch_x_vectorized():
    z = np.array([0.2, 0.5, 0.9])
    out = toric_branch_x(2.0, z, 1)
    assert out.shape == (3,)
    for i, zi in enumerate(z):
        assert out[i] == toric_branch_x(2.0, float(zi), 1)


# --- apple sheets -------------------------------------------------------------


def test_apple_point_on_equator():
    x, y = apple_point(2.0, 1.0, 0.0, 1)
    assert abs(x - 2.0 * SQRT3) < 1e-14
    assert abs(y) < 1e-14


def test_apple_point_rotation_and_sheet_sum(rng):
    for _ in range(200):
        r = float(rng.uniform(1.01, 4.0))
        z = float(rng.uniform(2.0 - r, 1.0))
        phi = float(rng.uniform(0.0, 2.0 * math.pi))
        R = torus_params(r).R
        rho = []
        for sheet in (1, 2):
            x, y = apple_point(r, z, phi, sheet)
            rho_j = math.hypot(x, y)
            rho.append(rho_j)
            # the azimuth of the point equals phi (up to 2π) when rho > 0
            if rho_j > 1e-9:
                assert abs(math.atan2(y, x) % (2 * math.pi) - phi % (2 * math.pi)) < 1e-9
        # outer and inner radial profiles sum to the full chord 2R
        assert abs(rho[0] + rho[1] - 2.0 * R) < 1e-12
        assert rho[0] >= rho[1] - 1e-12  # sheet 1 is the outer sheet


# --- measures -----------------------------------------------------------------


def test_arc_measure_values():
    assert abs(arc_measure(2.0, 1.0) - 2.0 / SQRT3) < 1e-14
    assert abs(arc_measure(1.25, 0.9) - 2.105379802666298) < 1e-14


def test_arc_measure_matches_angular_jacobian(rng):
    # along z = 2 − r·cos(a), the arc element r·da equals arc_measure(r,z)·dz
    for _ in range(100):
        r = float(rng.uniform(1.05, 4.0))
        a = float(rng.uniform(0.05, alpha_max(r) - 0.05))
        z = height_of_alpha(r, a)
        dz_da = r * math.sin(a)
        assert abs(arc_measure(r, z) * dz_da - r) < 1e-9


def test_surface_measure_values():
    assert abs(surface_measure(2.0, 1.0, 1) - 4.0) < 1e-13
    assert abs(surface_measure(1.25, 0.9, 2) - 0.32903485199972343) < 1e-14


def test_surface_measure_is_arc_times_profile(rng):
    for _ in range(100):
        r = float(rng.uniform(1.05, 4.0))
        z = float(rng.uniform(2.0 - r + 0.01, 0.99))
        for sheet in (1, 2):
            x, y = apple_point(r, z, 0.0, sheet)
            rho = math.hypot(x, y)
            assert abs(surface_measure(r, z, sheet) - arc_measure(r, z) * rho) < 1e-11


# --- angular parameterization ---------------------------------------------------


def test_alpha_height_round_trip(rng):
    for _ in range(200):
        r = float(rng.uniform(1.01, 5.0))
        a = float(rng.uniform(0.0, alpha_max(r)))
        assert abs(alpha_of_height(r, height_of_alpha(r, a)) - a) < 1e-10


def test_alpha_max_is_height_one():
    for r in (1.1, 1.5, 2.0, 3.0):
        assert abs(height_of_alpha(r, alpha_max(r)) - 1.0) < 1e-12
        assert abs(alpha_max(r) - math.acos(1.0 / r)) < 1e-14


# --- stable band limits ---------------------------------------------------------


def test_stable_band_limit_2d():
    # largest frequency for which cos(ω√(s−1)) stays clear of zero on s ≤ r_m²
    got = stable_band_limit(2.0, "2d")
    assert abs(got - 0.9068996821171089) < 1e-13
    assert abs(got - (math.pi / 2.0) / SQRT3) < 1e-13


def test_stable_band_limit_3d():
    got = stable_band_limit(2.0, "3d")
    assert abs(got - 1.3884266830897465) < 1e-12
    assert abs(got - 2.404825557695773 / SQRT3) < 1e-12


def test_stable_band_limit_scales_inversely(rng):
    for _ in range(20):
        r_m = float(rng.uniform(1.2, 4.0))
        spread = math.sqrt(r_m**2 - 1.0)
        assert abs(stable_band_limit(r_m, "2d") * spread - math.pi / 2.0) < 1e-10
        assert abs(stable_band_limit(r_m, "3d") * spread - 2.404825557695773) < 1e-10


# --- scan configuration ----------------------------------------------------------


def test_scan_config_defaults_valid():
    cfg = ScanConfig()
    assert cfg.r_m == 2.0
    cfg.validate_mode("2d")


def test_scan_config_rejects_bad_values():
    with pytest.raises(ValidationError):
        ScanConfig(r_m=1.0)
    with pytest.raises(ValidationError):
        ScanConfig(delta=-0.1)
    with pytest.raises(ValidationError):
        ScanConfig(r_m=2.0, delta=1.0)
    with pytest.raises(ValidationError):
        ScanConfig(n_r=1)
    with pytest.raises(ValidationError):
        ScanConfig(taper=1.5)
    with pytest.raises(ValidationError):
        ScanConfig(pad_factor=0)


def test_scan_config_3d_needs_positive_delta():
    cfg = ScanConfig(delta=0.0)
    cfg.validate_mode("2d")
    with pytest.raises(ValidationError):
        cfg.validate_mode("3d")
    ScanConfig(delta=0.1).validate_mode("3d")


def test_scan_config_axes():
    cfg = ScanConfig(r_m=2.0, delta=0.1, n_x0=32, n_r=16, n_z=24)
    r = cfg.r_axis().values
    assert r[0] > 1.0 and abs(r[-1] - 2.0) < 1e-15 and len(r) == 16
    z = cfg.z_axis().values
    assert z[0] > 2.0 - 2.0 and z[-1] < 1.0 - 0.1 and len(z) == 24
    x0 = cfg.x0_axis().values
    assert len(x0) == 32 and abs((x0[0] - cfg.x0_min) - (cfg.x0_max - x0[-1])) < 1e-12
    s = cfg.s_axis("3d")
    assert s.n == 32 and abs(s.values[0] - 1.1**2) < 1e-12 and abs(s.values[-1] - 4.0) < 1e-12
    zeta = cfg.zeta_axis("3d")
    assert zeta.n == 16 and abs(zeta.values[0] - 1.1) < 1e-12 and abs(zeta.values[-1] - 2.0) < 1e-12


# --- profile families -------------------------------------------------------------


def test_apple_profile_family_sheets():
    # profiles live on the generalized height range z ∈ (1, r); scan height 2−z
    fam = apple_profile_family(2.0)
    assert len(fam.profiles) == 2
    rng_ = np.random.default_rng(1)
    for _ in range(100):
        r = float(rng_.uniform(1.01, 2.0))
        zg = float(rng_.uniform(1.0, r))
        R = torus_params(r).R
        rho_out = float(fam.profiles[0][0](r, zg))
        rho_in = float(fam.profiles[1][0](r, zg))
        assert abs(rho_out + rho_in - 2.0 * R) < 1e-12
        assert rho_out >= 0.0 and rho_in >= -1e-12
        # the revolved profile graphs are exactly the two apple sheets
        for sheet, rho in ((1, rho_out), (2, rho_in)):
            x, y = apple_point(r, 2.0 - zg, 0.0, sheet)
            assert abs(math.hypot(x, y) - rho) < 1e-12
    assert fam.M >= 2.0 * math.sqrt(2.0**2 - 1.0) - 1e-9


def test_profile_derivatives_match_finite_differences():
    fam = apple_profile_family(2.0)
    h = 1e-6
    for rho, drho in fam.profiles:
        for (r, zg) in ((1.5, 1.2), (1.8, 1.5), (1.9, 1.05)):
            fd = (float(rho(r, zg + h)) - float(rho(r, zg - h))) / (2 * h)
            assert abs(float(drho(r, zg)) - fd) < 1e-6 * max(1.0, abs(fd))


def test_cone_profile_family():
    fam = cone_profile_family(2.0, beta=0.5)
    assert len(fam.profiles) == 1
    rho, drho = fam.profiles[0]
    assert float(rho(1.5, 1.2)) >= 0.0
    h = 1e-6
    fd = (float(rho(1.5, 1.2 + h)) - float(rho(1.5, 1.2 - h))) / (2 * h)
    assert abs(float(drho(1.5, 1.2)) - fd) < 1e-6
    with pytest.raises(ValidationError):
        cone_profile_family(2.0, beta=2.0)
