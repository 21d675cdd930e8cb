"""Built-in invariant suite behind the ``selftest`` command.

Each check is a small, self-contained verification of a mathematical identity
or contract the pipeline relies on (kernel diagonals, Plancherel equality,
solver oracles, geometry closed forms). The quick tier runs in seconds; the
full tier adds forward-projector oracles and a coarse end-to-end inversion.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .forward import BranchSpec, apple_transform, oracle_integral, toric_transform
from .geometry import (
    ScanConfig,
    alpha_of_height,
    apple_point,
    arc_measure,
    height_of_alpha,
    stable_band_limit,
    surface_measure,
    toric_branch_x,
    torus_params,
)
from .grids import Axis, DensityGrid, Sinogram2D
from .phantom import Phantom, Primitive, band_limited_reference, sample_on_axes
from .reconstruct import metrics, normalizer_2d, normalizer_3d, reconstruct_2d
from .spectral import (
    band_weight_profile,
    dft_translations,
    idft_translations,
    plancherel_residual,
    reflect_z,
    substitute_square_2d,
    unsubstitute,
)
from .volterra import (
    VolterraSystem,
    abel_weights,
    bessel_j0,
    bessel_j1,
    build_kernel_table_2d,
    derivative_matrix,
    first_j0_root,
    kernel_2d,
    kernel_2d_firstkind,
    kernel_3d_K1,
    kernel_3d_dK1,
    resolvent_neumann,
    solve_second_kind,
)

__all__ = ["run_selftest", "QUICK_CHECKS", "FULL_CHECKS"]


def _require(ok: bool, detail: str):
    if not ok:
        raise AssertionError(detail)


# ---------------------------------------------------------------------------
# quick checks
# ---------------------------------------------------------------------------


def check_geometry_points():
    x = toric_branch_x(1.25, 0.9, 2)
    _require(abs(x - 0.15628289564810427) < 1e-14, f"branch point off: {x!r}")
    p = apple_point(2.0, 1.0, 0.0, 1)   # outer-sheet radius R + √3 = 2√3 at z = 1
    _require(
        abs(p[0] - 2.0 * math.sqrt(3.0)) < 1e-12 and abs(p[1]) < 1e-15,
        f"apple point off: {p!r}",
    )
    rng = np.random.default_rng(7)
    for _ in range(200):
        r = float(rng.uniform(1.01, 3.0))
        z = float(rng.uniform(2.0 - r, 1.0))
        R = torus_params(r).R
        rho_sum = apple_point(r, z, 0.0, 1)[0] + apple_point(r, z, 0.0, 2)[0]
        _require(abs(rho_sum - 2.0 * R) < 1e-12, "sheet radii do not sum to 2R")


def check_geometry_measures():
    a = arc_measure(1.25, 0.9)
    _require(abs(a - 2.105379802666298) < 1e-12, f"arc measure off: {a!r}")
    a = arc_measure(2.0, 1.0)
    _require(abs(a - 2.0 / math.sqrt(3.0)) < 1e-14, f"arc measure off: {a!r}")
    s = surface_measure(1.25, 0.9, 2)
    _require(abs(s - 0.32903485199972343) < 1e-12, f"surface measure off: {s!r}")
    s = surface_measure(2.0, 1.0, 1)    # (2/√3)·2√3 = 4
    _require(abs(s - 4.0) < 1e-12, f"surface measure off: {s!r}")


def check_geometry_angles():
    rng = np.random.default_rng(11)
    for _ in range(200):
        r = float(rng.uniform(1.01, 4.0))
        al = float(rng.uniform(0.0, math.acos(1.0 / r)))
        back = alpha_of_height(r, height_of_alpha(r, al))
        _require(abs(back - al) < 1e-10, "alpha/height round trip failed")


def check_bessel_accuracy():
    from scipy.special import j0 as sp_j0, j1 as sp_j1

    x = np.linspace(0.0, 50.0, 20_001)
    e0 = float(np.max(np.abs(bessel_j0(x) - sp_j0(x))))
    e1 = float(np.max(np.abs(bessel_j1(x) - sp_j1(x))))
    _require(e0 < 1e-12, f"J0 max error {e0:.3e}")
    _require(e1 < 1e-12, f"J1 max error {e1:.3e}")


def check_j0_root():
    t0 = first_j0_root()
    _require(abs(t0 - 2.404825557695773) < 1e-12, f"t0 off: {t0!r}")
    _require(abs(bessel_j0(t0)) < 1e-12, "J0(t0) not ~ 0")


def check_kernel_2d_diag_and_bound():
    rng = np.random.default_rng(3)
    for _ in range(200):
        s = float(rng.uniform(1.0, 4.0))
        om = float(rng.uniform(0.0, 2.0))
        k = kernel_2d(s, s, om)
        _require(abs(k - math.pi / 2.0) < 1e-12, "K(s,s) != pi/2")
        z = float(rng.uniform(1.0, s))
        k = kernel_2d(s, z, om)
        _require(abs(k) <= math.pi / 2.0 + 1e-12, "|K| exceeds pi/2")


def check_kernel_2d_firstkind_diag_limit():
    # the Abel integral of the weakly singular kernel, ∫_z^s k(r,z)/√(s−r) dr,
    # tends to π on the diagonal; the kernel depends on (r, z) only through the
    # gap r − z, so the limit is probed at z = 0 where r − z = r is exact in
    # floating point (no cancellation at the tiny gap)
    from .volterra import _gl_theta

    theta, w = _gl_theta(64)
    sin_t = np.sin(theta)
    gap = 1e-8
    for om in (0.3, 0.7, 1.3):
        r = gap * sin_t**2
        vals = kernel_2d_firstkind(r, 0.0, om)
        k1 = float(np.sum(w * vals * 2.0 * math.sqrt(gap) * sin_t))
        _require(abs(k1 - math.pi) < 1e-6, f"first-kind diagonal limit off: {k1!r}")


def check_kernel_3d_diag_identity():
    rng = np.random.default_rng(5)
    for _ in range(40):
        s = float(rng.uniform(1.1, 4.0))
        a = float(rng.uniform(0.0, 1.5))
        rho = math.sqrt(s - 1.0)
        f = bessel_j0(a * rho) - a * rho * bessel_j1(a * rho)
        fp = -a * bessel_j1(a * rho) - a * a * rho * bessel_j0(a * rho)
        expect = math.pi**2 * (f / rho + fp)
        got = kernel_3d_dK1(s, s, a)
        _require(abs(got - expect) < 1e-8 * max(1.0, abs(expect)), "dK1 diagonal identity")
        k1 = kernel_3d_K1(s, s, a)
        _require(
            abs(k1 - 2.0 * math.pi**2 * normalizer_3d(a, s)) < 1e-8 * max(1.0, abs(k1)),
            "K1 diagonal vs normalizer",
        )


def check_abel_piecewise_linear_exact():
    # product integration integrates (s − t)^(−1/2) against the piecewise-
    # linear interpolant exactly, so linear data must come out machine-exact
    s = np.linspace(1.2, 4.0, 97)
    g = 0.7 * s - 0.3
    got = abel_weights(s) @ g

    def exact(si):
        if si == s[0]:
            return 0.0
        # ∫_{s0}^{si} (0.7 t − 0.3) / sqrt(si − t) dt with u = si − t
        u = si - s[0]
        return (0.7 * si - 0.3) * 2.0 * math.sqrt(u) - 0.7 * (2.0 / 3.0) * u**1.5

    want = np.array([exact(si) for si in s])
    err = float(np.max(np.abs(got - want)))
    _require(err < 1e-12, f"Abel product integration not exact on linear data: {err:.3e}")


def check_derivative_stencils():
    n, h = 64, 0.05
    x = 1.0 + h * np.arange(n)
    D = derivative_matrix(n, h)
    p = 2.0 * x**3 - x**2 + 3.0 * x - 5.0
    dp = 6.0 * x**2 - 2.0 * x + 3.0
    err = float(np.max(np.abs(D @ p - dp)))
    _require(err < 1e-9, f"derivative stencil not exact on cubic: {err:.3e}")


def check_volterra_exponential():
    n = 1024
    x = np.linspace(0.0, 1.0, n)
    sys = VolterraSystem(s=x, lam=1.0, kernel=lambda a, b: 1.0, g=np.ones(n), bound=1.0)
    f = solve_second_kind(sys)
    err = float(np.max(np.abs(f - np.exp(-x)) / np.exp(-x)))
    _require(err < 1e-6, f"exp oracle error {err:.3e}")


def check_volterra_resolvent_agrees():
    s = np.linspace(1.0, 4.0, 200)
    table = build_kernel_table_2d(s, 0.5)
    g = np.sin(s) + 0.5 * s
    sys = VolterraSystem(s=s, lam=-(0.5**2) / math.pi, kernel=table, g=g, bound=math.pi / 2)
    f_direct = solve_second_kind(sys)
    f_res = resolvent_neumann(sys, depth=30)
    err = float(np.max(np.abs(f_direct - f_res)) / np.max(np.abs(f_direct)))
    _require(err < 1e-8, f"resolvent mismatch {err:.3e}")


def check_plancherel_and_roundtrip():
    rng = np.random.default_rng(13)
    vals = rng.standard_normal((64, 128))
    r_axis = Axis(origin=1.1, spacing=0.01, n=64)
    x_axis = Axis(origin=-2.0, spacing=0.03, n=128)
    sino = Sinogram2D(r_axis=r_axis, x0_axis=x_axis, values=vals)
    res = plancherel_residual(vals[0], x_axis.spacing)
    _require(res < 1e-12, f"Plancherel residual {res:.3e}")
    spec = dft_translations(sino)
    back = idft_translations(spec)
    err = float(np.max(np.abs(back.values - vals)))
    _require(err < 1e-12, f"DFT round trip error {err:.3e}")


def check_substitution_analytic():
    # forward resample: data v(r) = r⁵ on the square grid must give
    # v(√s)/(4√s) = s²/4 up to the interpolation error of a smooth function
    r_axis = Axis(origin=1.05, spacing=(2.0 - 1.05) / 511, n=512)
    x_axis = Axis(origin=-1.0, spacing=0.125, n=16)
    vals = (r_axis.values**5)[:, None] * np.ones((1, 16))
    sino = Sinogram2D(r_axis=r_axis, x0_axis=x_axis, values=vals)
    spec = dft_translations(sino)
    spec_s = substitute_square_2d(spec)
    s = spec_s.radial.values
    col0 = spec_s.values[:, 0] / spec.values[np.argmin(np.abs(r_axis.values - 1.5)), 0]
    want = (s**2 / 4.0) / vals[np.argmin(np.abs(r_axis.values - 1.5)), 0]
    err = float(np.max(np.abs(col0 - want)) / np.max(np.abs(want)))
    _require(err < 1e-8, f"square-variable resample off: {err:.3e}")
    # reverse map: a solution spectrum u(s) = s must return 2ζ·u(ζ²) = 2ζ³
    # exactly (the monotone-cubic interpolant reproduces linear data exactly)
    from .spectral import SpectralSinogram

    u = SpectralSinogram(
        radial=spec_s.radial,
        omegas=spec_s.omegas,
        tr_axes=spec_s.tr_axes,
        values=(s[:, None] + 0.0j) * np.ones((1, spec_s.values.shape[1])),
        n_orig=spec_s.n_orig,
        radial_kind="s",
    )
    back = unsubstitute(u)
    zeta = back.radial.values
    err = float(np.max(np.abs(back.values[:, 0] - 2.0 * zeta**3)))
    _require(err < 1e-10, f"inverse change of variables off: {err:.3e}")


def check_reflection_involution():
    rng = np.random.default_rng(17)
    g = DensityGrid(
        axes=(Axis(0.0, 0.01, 32), Axis(-1.0, 0.05, 16)),
        values=rng.standard_normal((32, 16)),
    )
    twice = reflect_z(reflect_z(g))
    _require(np.array_equal(twice.values, g.values), "reflection is not a bit-exact involution")
    _require(twice.axes[0].close_to(g.axes[0]), "reflection does not restore the axis")


def check_normalizer_values():
    _require(normalizer_2d(0.7, 1.0) == 1.0, "cos normalizer at s=1")
    _require(abs(normalizer_3d(0.3, 1.0)) == 0.0, "radial normalizer at s=1")
    _require(abs(normalizer_3d(0.0, 2.0) - 2.0) < 1e-15, "radial normalizer at omega=0")
    t0 = first_j0_root()
    s = 1.0 + (t0 / 1.1) ** 2
    _require(abs(normalizer_3d(1.1, s)) < 1e-12, "radial normalizer root at t0")


def check_band_profiles():
    om = np.linspace(0.0, 2.0, 4001)
    w = band_weight_profile(om, omega_max=0.9, taper=0.25)
    _require(np.all(w[om >= 0.9] == 0.0), "band weight not hard zero beyond the limit")
    _require(np.all(np.diff(w) <= 1e-15), "band weight not monotone in |omega|")
    _require(np.all(w[om <= 0.9 * 0.75] == 1.0), "band weight not flat inside the knee")
    b2 = stable_band_limit(2.0, "2d")
    b3 = stable_band_limit(2.0, "3d")
    _require(abs(b2 - 0.9068996821171089) < 1e-15, f"2-D band limit {b2!r}")
    _require(abs(b3 - 1.3884266830897465) < 1e-13, f"3-D band limit {b3!r}")


QUICK_CHECKS = [
    ("geometry points", check_geometry_points),
    ("geometry measures", check_geometry_measures),
    ("geometry angles", check_geometry_angles),
    ("bessel accuracy vs scipy", check_bessel_accuracy),
    ("first J0 root", check_j0_root),
    ("2-D kernel diagonal and bound", check_kernel_2d_diag_and_bound),
    ("2-D first-kind kernel diagonal limit", check_kernel_2d_firstkind_diag_limit),
    ("3-D kernel diagonal identities", check_kernel_3d_diag_identity),
    ("Abel product integration exactness", check_abel_piecewise_linear_exact),
    ("derivative stencils", check_derivative_stencils),
    ("Volterra exponential oracle", check_volterra_exponential),
    ("Volterra resolvent agreement", check_volterra_resolvent_agrees),
    ("Plancherel and DFT round trip", check_plancherel_and_roundtrip),
    ("square-variable substitution", check_substitution_analytic),
    ("reflection involution", check_reflection_involution),
    ("normalizer values", check_normalizer_values),
    ("stable band profiles", check_band_profiles),
]


# ---------------------------------------------------------------------------
# full-tier checks
# ---------------------------------------------------------------------------


def check_forward_oracle_2d():
    phantom = Phantom(
        dim=2,
        primitives=(Primitive("gaussian", (0.2, 0.4), (0.2,), 1.0),),
        support=((-1.3, 1.7), (1e-9, 1.0 - 1e-9)),
    )
    for r, x0 in ((1.5, 0.3), (2.0, -0.7), (1.2, 0.0)):
        val = float(toric_transform(phantom, np.array([x0]), r)[0])
        want = sum(
            oracle_integral(phantom, BranchSpec(r=r, x0=x0, branch=j), n=200_000)
            for j in (1, 2, 3, 4)
        )
        _require(abs(val - want) <= 2e-5 * max(1e-12, abs(want)), f"2-D forward vs oracle at r={r}")


def check_forward_apple_area():
    one = Phantom(
        dim=3,
        primitives=(Primitive("box", (0.0, 0.0, 0.0), (50.0,), 1.0),),
        support=((-60.0, 60.0), (-60.0, 60.0), (-60.0, 60.0)),
    )
    val = apple_transform(one, 0.0, 0.0, 2.0)
    _require(abs(val - 45.58575006211244) < 1e-6, f"apple surface area off: {val!r}")


def check_dk1_matches_fd():
    rng = np.random.default_rng(23)
    for _ in range(10):
        s = float(rng.uniform(1.2, 4.0))
        z = float(rng.uniform(1.05, s - 0.05))
        a = float(rng.uniform(0.1, 1.4))
        eps = 1e-5
        fd = (kernel_3d_K1(s + eps, z, a) - kernel_3d_K1(s - eps, z, a)) / (2.0 * eps)
        got = kernel_3d_dK1(s, z, a)
        _require(abs(got - fd) < 1e-5 * max(1.0, abs(fd)), "dK1 vs finite difference")


def check_end_to_end_2d_coarse():
    cfg = ScanConfig(r_m=2.0, n_x0=96, n_r=96, n_z=96, taper=0.25)
    phantom = Phantom(
        dim=2,
        primitives=(Primitive("gaussian", (0.0, 0.3), (0.15,), 1.0),),
        support=((-0.9, 0.9), (1e-9, 1.0 - 1e-9)),
    )
    from .forward import sinogram_2d

    sino = sinogram_2d(phantom, cfg)
    result = reconstruct_2d(sino, cfg)
    ref = band_limited_reference(
        sample_on_axes(phantom, result.grid.axes), result.band_effective
    )
    zg = result.grid.z_axis.values
    xg = result.grid.x_axis.values
    mask = (np.abs(xg[None, :]) <= 0.9) & (zg[:, None] > 0.0) & (zg[:, None] < 1.0)
    num = math.sqrt(float(np.sum(((result.grid.values - ref.values) * mask) ** 2)))
    den = math.sqrt(float(np.sum((ref.values * mask) ** 2)))
    _require(den > 0 and num / den < 0.25, f"coarse end-to-end error {num / den:.4f}")
    m = metrics(result.grid, ref)
    _require(np.isfinite(m["rmse"]), "metrics rmse not finite")


FULL_CHECKS = QUICK_CHECKS + [
    ("2-D forward vs brute-force oracle", check_forward_oracle_2d),
    ("apple surface area", check_forward_apple_area),
    ("3-D kernel derivative vs finite differences", check_dk1_matches_fd),
    ("coarse end-to-end 2-D inversion", check_end_to_end_2d_coarse),
]


def run_selftest(quick: bool = False, emit=print) -> int:
    """Run the invariant suite; returns the number of failed checks."""
    checks = QUICK_CHECKS if quick else FULL_CHECKS
    failures = 0
    for name, fn in checks:
        t0 = time.perf_counter()
        try:
            fn()
        except Exception as exc:  # noqa: BLE001 — report and count every failure
            failures += 1
            emit(f"FAIL  {name}: {exc}")
        else:
            emit(f"ok    {name}  ({time.perf_counter() - t0:.2f}s)")
    tier = "quick" if quick else "full"
    emit(f"{tier} selftest: {len(checks) - failures}/{len(checks)} checks passed")
    return failures
