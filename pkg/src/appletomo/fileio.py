"""File formats: the CSTK1 container, config files, CSV/PGM exports.

CSTK1 container
---------------
A text header followed by a raw float64 payload::

    CSTK1
    kind sinogram            # or: grid
    dim 2                    # or: 3
    r_m 2
    delta 0.10000000000000001
    axes r x0                # slowest → fastest storage order
    n_r 256
    origin_r 1.0000009999999999
    spacing_r 0.0039215647058823528
    n_x0 256
    origin_x0 -4.78125
    spacing_x0 0.0375
    DATA
    <n_r · n_x0 little-endian IEEE-754 float64, row-major, fastest axis last>

All numbers are written with 17 significant digits so that write → read is
bit-exact for float64. Malformed files raise a one-line diagnostic naming the
offending header key or byte offset.
"""

from __future__ import annotations

import dataclasses
import io

import numpy as np

from .errors import ValidationError
from .geometry import ScanConfig
from .grids import Axis, DensityGrid, Sinogram2D, Sinogram3D

__all__ = [
    "g17",
    "write_cstk",
    "read_cstk",
    "parse_config",
    "format_config",
    "read_config",
    "write_diagnostics_csv",
    "export_csv",
    "export_pgm",
]

MAGIC = "CSTK1"


def g17(x) -> str:
    """Format a float with 17 significant digits (float64 round-trip exact)."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# CSTK1 container
# ---------------------------------------------------------------------------

_AXIS_NAMES = {
    ("grid", 2): ("z", "x"),
    ("grid", 3): ("z", "y", "x"),
    ("sinogram", 2): ("r", "x0"),
    ("sinogram", 3): ("r", "y0", "x0"),
}


def _kind_of(obj) -> tuple:
    if isinstance(obj, DensityGrid):
        return "grid", obj.dim
    if isinstance(obj, Sinogram2D):
        return "sinogram", 2
    if isinstance(obj, Sinogram3D):
        return "sinogram", 3
    raise ValidationError(f"cannot serialize objects of type {type(obj).__name__}")


def _axes_of(obj) -> tuple:
    if isinstance(obj, DensityGrid):
        return obj.axes
    if isinstance(obj, Sinogram2D):
        return (obj.r_axis, obj.x0_axis)
    return (obj.r_axis, obj.y0_axis, obj.x0_axis)


def write_cstk(path: str, obj, r_m: float = float("nan"), delta: float = float("nan")) -> None:
    """Write a grid or sinogram to a CSTK1 file."""
    kind, dim = _kind_of(obj)
    names = _AXIS_NAMES[(kind, dim)]
    axes = _axes_of(obj)
    head = io.StringIO()
    head.write(f"{MAGIC}\n")
    head.write(f"kind {kind}\n")
    head.write(f"dim {dim}\n")
    head.write(f"r_m {g17(r_m)}\n")
    head.write(f"delta {g17(delta)}\n")
    head.write("axes " + " ".join(names) + "\n")
    for name, ax in zip(names, axes):
        head.write(f"n_{name} {ax.n}\n")
        head.write(f"origin_{name} {g17(ax.origin)}\n")
        head.write(f"spacing_{name} {g17(ax.spacing)}\n")
    head.write("DATA\n")
    values = obj.values
    with open(path, "wb") as fh:
        fh.write(head.getvalue().encode("ascii"))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def _header_value(header: dict, key: str, parse, path: str):
    if key not in header:
        raise ValidationError(f"{path}: missing header key '{key}'")
    try:
        return parse(header[key])
    except (TypeError, ValueError):
        raise ValidationError(
            f"{path}: invalid value for header key '{key}': {header[key]!r}"
        ) from None


def read_cstk(path: str):
    """Read a CSTK1 file → (grid-or-sinogram, header metadata dict)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read file ({exc.strerror})") from None
    sep = b"\nDATA\n"
    split = blob.find(sep)
    if split < 0:
        raise ValidationError(f"{path}: missing DATA marker line")
    try:
        text = blob[:split].decode("ascii")
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{path}: non-ASCII header at byte offset {exc.start}") from None
    lines = text.splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise ValidationError(f"{path}: bad magic line, expected '{MAGIC}'")
    header: dict = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ValidationError(f"{path}: header line {lineno} has no value: {line!r}")
        header[parts[0]] = parts[1].strip()

    kind = _header_value(header, "kind", str, path)
    dim = _header_value(header, "dim", int, path)
    if (kind, dim) not in _AXIS_NAMES:
        raise ValidationError(f"{path}: invalid value for header key 'kind'/'dim': {kind} {dim}")
    names = _AXIS_NAMES[(kind, dim)]
    declared = tuple(_header_value(header, "axes", str, path).split())
    if declared != names:
        raise ValidationError(
            f"{path}: invalid value for header key 'axes': expected '{' '.join(names)}'"
        )
    axes, shape = [], []
    for name in names:
        n = _header_value(header, f"n_{name}", int, path)
        origin = _header_value(header, f"origin_{name}", float, path)
        spacing = _header_value(header, f"spacing_{name}", float, path)
        if n < 1:
            raise ValidationError(f"{path}: invalid value for header key 'n_{name}': {n}")
        axes.append(Axis(origin=origin, spacing=spacing, n=n))
        shape.append(n)
    meta = {
        "kind": kind,
        "dim": dim,
        "r_m": _header_value(header, "r_m", float, path),
        "delta": _header_value(header, "delta", float, path),
    }

    offset = split + len(sep)
    payload = blob[offset:]
    want = int(np.prod(shape)) * 8
    if len(payload) != want:
        raise ValidationError(
            f"{path}: payload is {len(payload)} bytes at byte offset {offset}, "
            f"expected {want} (= {'x'.join(str(n) for n in shape)} x 8)"
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()

    if kind == "grid":
        obj = DensityGrid(axes=tuple(axes), values=values)
    elif dim == 2:
        obj = Sinogram2D(r_axis=axes[0], x0_axis=axes[1], values=values)
    else:
        obj = Sinogram3D(r_axis=axes[0], y0_axis=axes[1], x0_axis=axes[2], values=values)
    return obj, meta


# ---------------------------------------------------------------------------
# config files: `key value` text
# ---------------------------------------------------------------------------

_INT_KEYS = {"n_x0", "n_y0", "n_r", "n_z", "n_alpha", "n_phi", "quad_max", "pad_factor"}
_FLOAT_KEYS = {
    "r_m", "delta", "x0_min", "x0_max", "y0_min", "y0_max",
    "z_min", "z_max", "quad_tol", "taper", "eps_norm", "eps_r",
}


def parse_config(text: str, path: str = "<config>") -> ScanConfig:
    """Parse `key value` configuration text into a ScanConfig."""
    kwargs: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise ValidationError(f"{path}: config line {lineno} has no value: {line!r}")
        key, value = parts[0], parts[1].strip()
        if key in _INT_KEYS:
            parse = int
        elif key in _FLOAT_KEYS:
            parse = float
        else:
            raise ValidationError(f"{path}: unknown config key '{key}'")
        try:
            kwargs[key] = parse(value)
        except ValueError:
            raise ValidationError(
                f"{path}: invalid value for config key '{key}': {value!r}"
            ) from None
    return ScanConfig(**kwargs)


def format_config(cfg: ScanConfig) -> str:
    """Serialize a ScanConfig to `key value` text (17 significant digits)."""
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        lines.append(f"{f.name} {v if isinstance(v, int) else g17(v)}")
    return "\n".join(lines) + "\n"


def read_config(path: str) -> ScanConfig:
    try:
        with open(path, "r", encoding="ascii") as fh:
            return parse_config(fh.read(), path)
    except OSError as exc:
        raise ValidationError(f"{path}: cannot read file ({exc.strerror})") from None
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{path}: non-ASCII config at byte offset {exc.start}") from None


# ---------------------------------------------------------------------------
# diagnostics CSV
# ---------------------------------------------------------------------------


def write_diagnostics_csv(path: str, diagnostics) -> None:
    """Per-frequency health rows with the fixed header."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("omega,retained,normalizer_min,residual\n")
        for d in diagnostics:
            fh.write(
                f"{g17(d.omega)},{1 if d.retained else 0},"
                f"{g17(d.normalizer_min)},{g17(d.residual)}\n"
            )


# ---------------------------------------------------------------------------
# exports
# ---------------------------------------------------------------------------


def export_csv(path: str, obj) -> None:
    """Coordinate/value rows, one line per cell, fastest axis first.

    Grids emit ``x,z,value`` (2-D) or ``x,y,z,value`` (3-D); sinograms emit
    ``x0,r,value`` / ``x0,y0,r,value``. Row order matches the storage order.
    """
    kind, dim = _kind_of(obj)
    names = _AXIS_NAMES[(kind, dim)]
    axes = _axes_of(obj)
    coords = np.meshgrid(*(ax.values for ax in axes), indexing="ij")
    cols = [c.ravel() for c in reversed(coords)] + [obj.values.ravel()]
    header = ",".join(reversed(names)) + ",value"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, np.column_stack(cols), fmt="%.17g", delimiter=",")


def _pgm_bytes(image: np.ndarray, lo: float, hi: float) -> bytes:
    h, w = image.shape
    if hi > lo:
        scaled = np.round((image - lo) / (hi - lo) * 65535.0)
    else:
        scaled = np.zeros_like(image)
    data = np.clip(scaled, 0.0, 65535.0).astype(">u2")
    return f"P5\n{w} {h}\n65535\n".encode("ascii") + data.tobytes()


def _write_meta(path: str, lo: float, hi: float, extra: dict) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"min {g17(lo)}\n")
        fh.write(f"max {g17(hi)}\n")
        for k, v in extra.items():
            fh.write(f"{k} {v if isinstance(v, (int, str)) else g17(v)}\n")


def export_pgm(path: str, grid: DensityGrid) -> list:
    """16-bit PGM image(s) with linear scaling recorded in `.meta` sidecars.

    2-D grids produce one image (rows = z, columns = x); 3-D grids produce one
    image per z-slice (rows = y, columns = x) with a zero-padded index suffix.
    Scaling uses the global min/max of the whole grid so slices share one scale.
    """
    stem = path[:-4] if path.endswith(".pgm") else path
    lo = float(np.min(grid.values))
    hi = float(np.max(grid.values))
    written = []
    if grid.dim == 2:
        out = f"{stem}.pgm"
        with open(out, "wb") as fh:
            fh.write(_pgm_bytes(grid.values, lo, hi))
        _write_meta(f"{stem}.meta", lo, hi, {"width": grid.x_axis.n, "height": grid.z_axis.n})
        written.append(out)
    else:
        for i in range(grid.z_axis.n):
            out = f"{stem}_{i:04d}.pgm"
            with open(out, "wb") as fh:
                fh.write(_pgm_bytes(grid.values[i], lo, hi))
            _write_meta(
                f"{stem}_{i:04d}.meta",
                lo,
                hi,
                {
                    "width": grid.x_axis.n,
                    "height": grid.y_axis.n,
                    "slice_index": i,
                    "slice_z": grid.z_axis.origin + i * grid.z_axis.spacing,
                },
            )
            written.append(out)
    return written
