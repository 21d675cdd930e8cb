"""Command-line interface.

Subcommands: ``phantom``, ``project``, ``reconstruct``, ``metrics``,
``export``, ``selftest``, ``report``. Exit codes: 0 success, 1 validation
error (including malformed files and bad usage), 2 numerical-guard error.
Numeric output uses 17 significant digits throughout; identical inputs and
seed produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import NumericalGuardError, ValidationError
from .fileio import (
    export_csv,
    export_pgm,
    g17,
    read_config,
    read_cstk,
    write_cstk,
    write_diagnostics_csv,
)
from .forward import GridDensity, sinogram_2d, sinogram_3d
from .geometry import ScanConfig
from .grids import DensityGrid, Sinogram2D, Sinogram3D
from .phantom import parse_phantom, sample_grid, sample_on_axes, strip_clipped
from .reconstruct import FrequencyDiagnostic, metrics, reconstruct_2d, reconstruct_3d
from .selfcheck import run_selftest
from .spectral import build_stable_band

__all__ = ["main", "build_parser"]


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors (exit 1)."""

    def error(self, message):  # noqa: D102 — argparse hook
        raise ValidationError(f"usage: {message}")


def _load_config(path: str | None) -> ScanConfig:
    return read_config(path) if path else ScanConfig()


def _read_phantom_file(path: str, cfg: ScanConfig):
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read file ({exc.strerror})") from None
    return strip_clipped(parse_phantom(text), cfg.r_m, cfg.delta)


def _load_phantom_or_grid(path: str, cfg: ScanConfig):
    """Forward-projection input: a phantom description or a sampled grid."""
    if path.endswith(".cstk"):
        obj, _meta = read_cstk(path)
        if not isinstance(obj, DensityGrid):
            raise ValidationError(f"{path}: forward projection needs a grid file, got a sinogram")
        return GridDensity(obj)
    return _read_phantom_file(path, cfg)


def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="appletomo", description=__doc__.splitlines()[0])
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="sample a phantom description onto a grid file")
    p.add_argument("spec", help="phantom description text file")
    p.add_argument("--config", help="scan configuration file")
    p.add_argument(
        "--like",
        help="sample onto the axes of this existing grid .cstk instead of the "
        "scan grid (for references matching a reconstruction output)",
    )
    p.add_argument("-o", "--output", required=True, help="output grid .cstk")

    p = sub.add_parser("project", help="forward-project a phantom or grid to a sinogram")
    p.add_argument("input", help="phantom description (.txt) or grid (.cstk)")
    p.add_argument("--mode", choices=("2d", "3d"), required=True)
    p.add_argument("--config", help="scan configuration file")
    p.add_argument("--noise", type=float, default=0.0, help="additive gaussian noise sigma")
    p.add_argument("--seed", type=int, default=0, help="noise seed (default 0)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", required=True, help="output sinogram .cstk")

    p = sub.add_parser("reconstruct", help="invert a sinogram on the stable band")
    p.add_argument("sinogram", help="input sinogram .cstk")
    p.add_argument("--config", help="scan configuration file")
    p.add_argument("--taper", type=float, default=None, help="band taper fraction override")
    p.add_argument("--eps-norm", type=float, default=None, help="normalizer floor override")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("-o", "--output", required=True, help="output grid .cstk")
    p.add_argument("--diag", help="per-frequency diagnostics CSV")

    p = sub.add_parser("metrics", help="compare two grid files")
    p.add_argument("recon")
    p.add_argument("reference")
    p.add_argument("--band", action="store_true", help="also report band-limited rmse")
    p.add_argument("--config", help="configuration used to build the band (with --band)")
    p.add_argument("--taper", type=float, default=None, help="band taper override (with --band)")

    p = sub.add_parser("export", help="convert a .cstk file to CSV or 16-bit PGM")
    p.add_argument("input")
    p.add_argument("--format", choices=("csv", "pgm"), required=True)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("selftest", help="run the built-in invariant suite")
    p.add_argument("--quick", action="store_true", help="fast tier only")

    p = sub.add_parser("report", help="render figures and a delimited summary")
    p.add_argument("recon", help="reconstruction grid .cstk")
    p.add_argument("--reference", help="reference grid .cstk on the same axes")
    p.add_argument("--diag", help="diagnostics CSV from `reconstruct --diag`")
    p.add_argument("--config", help="configuration for band-limited metrics")
    p.add_argument("--taper", type=float, default=None)
    p.add_argument("-o", "--output", required=True, help="output directory")
    return top


def _read_diagnostics(path: str) -> list:
    rows = []
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read file ({exc.strerror})") from None
    if not lines or lines[0] != "omega,retained,normalizer_min,residual":
        raise ValidationError(f"{path}: missing header key 'omega,retained,normalizer_min,residual'")
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise ValidationError(f"{path}: diagnostics line {lineno} needs 4 fields")
        try:
            rows.append(
                FrequencyDiagnostic(
                    omega=float(parts[0]),
                    retained=bool(int(parts[1])),
                    normalizer_min=float(parts[2]),
                    residual=float(parts[3]),
                )
            )
        except ValueError:
            raise ValidationError(f"{path}: diagnostics line {lineno} is not numeric") from None
    return rows


def _cmd_phantom(args) -> int:
    if args.like:
        template, meta = read_cstk(args.like)
        if not isinstance(template, DensityGrid):
            raise ValidationError(f"{args.like}: --like needs a grid file")
        r_m, delta = meta["r_m"], meta["delta"]
        ph = _read_phantom_file(args.spec, ScanConfig(r_m=r_m, delta=delta))
        grid = sample_on_axes(ph, template.axes)
        write_cstk(args.output, grid, r_m=r_m, delta=delta)
    else:
        cfg = _load_config(args.config)
        ph = _read_phantom_file(args.spec, cfg)
        grid = sample_grid(ph, cfg)
        write_cstk(args.output, grid, r_m=cfg.r_m, delta=cfg.delta)
    print(f"grid {grid.values.shape} -> {args.output}")
    return 0


def _cmd_project(args) -> int:
    cfg = _load_config(args.config)
    cfg.validate_mode(args.mode)
    density = _load_phantom_or_grid(args.input, cfg)
    if args.mode == "2d":
        sino = sinogram_2d(density, cfg, workers=args.workers)
    else:
        sino = sinogram_3d(density, cfg, workers=args.workers)
    if args.noise != 0.0:
        rng = np.random.default_rng(args.seed)
        noisy = sino.values + args.noise * rng.standard_normal(sino.values.shape)
        if args.mode == "2d":
            sino = Sinogram2D(r_axis=sino.r_axis, x0_axis=sino.x0_axis, values=noisy)
        else:
            sino = Sinogram3D(
                r_axis=sino.r_axis, y0_axis=sino.y0_axis, x0_axis=sino.x0_axis, values=noisy
            )
    write_cstk(args.output, sino, r_m=cfg.r_m, delta=cfg.delta)
    print(f"sinogram {sino.values.shape} -> {args.output}")
    return 0


def _cmd_reconstruct(args) -> int:
    cfg = _load_config(args.config)
    obj, _meta = read_cstk(args.sinogram)
    if isinstance(obj, Sinogram2D):
        result = reconstruct_2d(
            obj, cfg, taper=args.taper, eps_norm=args.eps_norm, workers=args.workers
        )
    elif isinstance(obj, Sinogram3D):
        result = reconstruct_3d(
            obj, cfg, taper=args.taper, eps_norm=args.eps_norm, workers=args.workers
        )
    else:
        raise ValidationError(f"{args.sinogram}: reconstruction needs a sinogram file, got a grid")
    write_cstk(args.output, result.grid, r_m=cfg.r_m, delta=cfg.delta)
    if args.diag:
        write_diagnostics_csv(args.diag, result.diagnostics)
    kept = sum(1 for d in result.diagnostics if d.retained)
    print(f"frequencies_retained {kept}")
    print(f"frequencies_dropped {len(result.diagnostics) - kept}")
    print(f"amplification_bound {g17(result.amplification_bound)}")
    print(f"runtime_seconds {result.runtime_seconds:.3f}", file=sys.stderr)
    return 0


def _cmd_metrics(args) -> int:
    recon, _ = read_cstk(args.recon)
    ref, _ = read_cstk(args.reference)
    if not isinstance(recon, DensityGrid) or not isinstance(ref, DensityGrid):
        raise ValidationError("metrics compares two grid files")
    band = None
    if args.band:
        cfg = _load_config(args.config)
        mode = "2d" if recon.dim == 2 else "3d"
        tr_axes = recon.axes[1:]
        band = build_stable_band(cfg, mode, taper=args.taper, axes=tr_axes)
    out = metrics(recon, ref, band=band)
    for key in ("rmse", "psnr", "band_rmse"):
        if key in out:
            print(f"{key} {g17(out[key])}")
    return 0


def _cmd_export(args) -> int:
    obj, _ = read_cstk(args.input)
    if args.format == "csv":
        export_csv(args.output, obj)
        print(f"csv -> {args.output}")
    else:
        if not isinstance(obj, DensityGrid):
            raise ValidationError(f"{args.input}: PGM export needs a grid file")
        paths = export_pgm(args.output, obj)
        print(f"pgm -> {paths[0]}" + (f" .. {paths[-1]}" if len(paths) > 1 else ""))
    return 0


def _cmd_selftest(args) -> int:
    failures = run_selftest(quick=args.quick)
    return 1 if failures else 0


def _cmd_report(args) -> int:
    from .plots import render_report

    recon, _ = read_cstk(args.recon)
    if not isinstance(recon, DensityGrid):
        raise ValidationError(f"{args.recon}: report needs a grid file")
    reference = None
    summary: dict = {}
    band = None
    if args.config:
        cfg = _load_config(args.config)
        mode = "2d" if recon.dim == 2 else "3d"
        band = build_stable_band(cfg, mode, taper=args.taper, axes=recon.axes[1:])
    if args.reference:
        reference, _ = read_cstk(args.reference)
        if not isinstance(reference, DensityGrid):
            raise ValidationError(f"{args.reference}: report reference must be a grid file")
        summary.update(metrics(recon, reference, band=band))
    diagnostics = _read_diagnostics(args.diag) if args.diag else None
    paths = render_report(
        args.output, recon, reference=reference, diagnostics=diagnostics, summary=summary
    )
    print("\n".join(paths))
    return 0


_COMMANDS = {
    "phantom": _cmd_phantom,
    "project": _cmd_project,
    "reconstruct": _cmd_reconstruct,
    "metrics": _cmd_metrics,
    "export": _cmd_export,
    "selftest": _cmd_selftest,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalGuardError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
