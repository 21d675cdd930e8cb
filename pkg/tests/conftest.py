"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from appletomo import Phantom, Primitive, ScanConfig

# A declared support box comfortably larger than any 6-sigma footprint used in
# the tests, so nothing is clipped unless a test asks for clipping explicitly.
WIDE_2D = ((-8.0, 8.0), (-8.0, 8.0))
WIDE_3D = ((-8.0, 8.0), (-8.0, 8.0), (-8.0, 8.0))


def gaussian_2d(cx: float, cz: float, sigma: float, amp: float = 1.0,
                support: tuple = WIDE_2D) -> Phantom:
    return Phantom(
        dim=2,
        primitives=(Primitive(kind="gaussian", center=(cx, cz), size=sigma, amplitude=amp),),
        support=support,
    )


def gaussian_3d(cx: float, cy: float, cz: float, sigma: float, amp: float = 1.0,
                support: tuple = WIDE_3D) -> Phantom:
    return Phantom(
        dim=3,
        primitives=(Primitive(kind="gaussian", center=(cx, cy, cz), size=sigma, amplitude=amp),),
        support=support,
    )


@pytest.fixture(scope="session")
def small_cfg_2d() -> ScanConfig:
    """A coarse 2-D scan that keeps unit tests fast."""
    return ScanConfig(r_m=2.0, n_x0=64, n_r=64, n_z=64, x0_min=-4.8, x0_max=4.8)


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20260819)
