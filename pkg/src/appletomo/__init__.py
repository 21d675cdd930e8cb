"""appletomo — toric-section and apple-surface tomography.

Forward projectors integrate a density over families of circular-arc branches
(2-D) and surfaces of revolution (3-D apples); the inversion recovers the
density on the stable translation-frequency band through a chain of DFT,
square-variable substitution, Abel product integration, and per-frequency
second-kind Volterra solves.
"""

from .errors import NumericalGuardError, ValidationError
from .grids import Axis, DensityGrid, Sinogram2D, Sinogram3D, cell_centered_axis
from .geometry import (
    ProfileFamily,
    ScanConfig,
    TorusParams,
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
from .phantom import (
    Phantom,
    Primitive,
    band_limited_reference,
    format_phantom,
    parse_phantom,
    sample_grid,
    sample_on_axes,
    strip_clipped,
)
from .volterra import (
    KernelTable,
    VolterraSystem,
    abel_apply,
    abel_derivative,
    abel_weights,
    bessel_j0,
    bessel_j1,
    build_kernel_table_2d,
    build_kernel_table_3d_dk1,
    derivative_matrix,
    first_j0_root,
    integration_matrix,
    kernel_2d,
    kernel_2d_firstkind,
    kernel_3d_K1,
    kernel_3d_dK1,
    resolvent_neumann,
    sinc,
    solve_second_kind,
    volterra_residual,
)
from .spectral import (
    SpectralSinogram,
    StableBand,
    band_weight_profile,
    build_stable_band,
    dft_translations,
    idft_translations,
    plancherel_residual,
    reflect_z,
    substitute_square_2d,
    substitute_square_3d,
    unsubstitute,
)
from .forward import (
    BranchSpec,
    GridDensity,
    SheetSpec,
    apple_transform,
    generalized_transform,
    oracle_integral,
    sinogram_2d,
    sinogram_3d,
    toric_transform,
)
from .reconstruct import (
    FrequencyDiagnostic,
    ReconstructionResult,
    metrics,
    normalizer_2d,
    normalizer_3d,
    reconstruct_2d,
    reconstruct_3d,
)
from .fileio import (
    export_csv,
    export_pgm,
    format_config,
    parse_config,
    read_config,
    read_cstk,
    write_cstk,
    write_diagnostics_csv,
)
from .selfcheck import run_selftest

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ValidationError",
    "NumericalGuardError",
    # grids
    "Axis",
    "cell_centered_axis",
    "DensityGrid",
    "Sinogram2D",
    "Sinogram3D",
    # geometry
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
    # phantom
    "Primitive",
    "Phantom",
    "strip_clipped",
    "sample_grid",
    "sample_on_axes",
    "band_limited_reference",
    "parse_phantom",
    "format_phantom",
    # volterra / special functions
    "sinc",
    "bessel_j0",
    "bessel_j1",
    "first_j0_root",
    "abel_weights",
    "abel_apply",
    "abel_derivative",
    "derivative_matrix",
    "kernel_2d",
    "kernel_2d_firstkind",
    "kernel_3d_K1",
    "kernel_3d_dK1",
    "KernelTable",
    "build_kernel_table_2d",
    "build_kernel_table_3d_dk1",
    "VolterraSystem",
    "solve_second_kind",
    "volterra_residual",
    "integration_matrix",
    "resolvent_neumann",
    # spectral
    "SpectralSinogram",
    "dft_translations",
    "idft_translations",
    "plancherel_residual",
    "substitute_square_2d",
    "substitute_square_3d",
    "unsubstitute",
    "reflect_z",
    "StableBand",
    "band_weight_profile",
    "build_stable_band",
    # forward
    "toric_transform",
    "apple_transform",
    "generalized_transform",
    "sinogram_2d",
    "sinogram_3d",
    "GridDensity",
    "BranchSpec",
    "SheetSpec",
    "oracle_integral",
    # reconstruction
    "normalizer_2d",
    "normalizer_3d",
    "FrequencyDiagnostic",
    "ReconstructionResult",
    "reconstruct_2d",
    "reconstruct_3d",
    "metrics",
    # file I/O
    "write_cstk",
    "read_cstk",
    "parse_config",
    "format_config",
    "read_config",
    "write_diagnostics_csv",
    "export_csv",
    "export_pgm",
    # selftest
    "run_selftest",
]
