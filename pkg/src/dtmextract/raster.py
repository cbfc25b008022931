"""Elevation rasters and ESRI ASCII Grid (.asc) input/output.

Values are held row-major with the top raster row first, exactly as the
file stores them, so cell ``(r, c)`` maps to vector index ``r * cols + c``.
"""
from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass, field
from typing import BinaryIO, TextIO, Union

import numpy as np

from .errors import (
    DimensionMismatch,
    IoFailure,
    MalformedData,
    MalformedHeader,
    NodataPresent,
    NonFiniteValue,
)

PathLike = Union[str, os.PathLike]

_HEADER_KEYS = (
    "ncols",
    "nrows",
    "xllcorner",
    "xllcenter",
    "yllcorner",
    "yllcenter",
    "cellsize",
    "nodata_value",
)


@dataclass(frozen=True, eq=False)
class Grid:
    """A complete raster of elevations in meters.

    ``values`` has shape ``(rows, cols)``; it is copied to float64 and
    frozen on construction.
    """

    values: np.ndarray
    cell_size: float = 1.0
    x_origin: float = 0.0
    y_origin: float = 0.0
    rows: int = field(init=False)
    cols: int = field(init=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values.reshape(1, -1)
        if values.ndim != 2:
            raise DimensionMismatch(f"grid values must be 2-D, got ndim={values.ndim}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DimensionMismatch(f"grid must have at least one cell, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteValue("grid contains NaN or infinite values")
        if not (math.isfinite(self.cell_size) and self.cell_size > 0):
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "rows", int(values.shape[0]))
        object.__setattr__(self, "cols", int(values.shape[1]))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def size(self) -> int:
        return self.rows * self.cols

    def vector(self) -> np.ndarray:
        """Flattened (read-only) view in vector-index order."""
        return self.values.reshape(-1)

    def with_values(self, values) -> "Grid":
        """Same georeferencing, new cell values."""
        values = np.asarray(values, dtype=np.float64).reshape(self.rows, self.cols)
        return Grid(values, self.cell_size, self.x_origin, self.y_origin)

    def same_header(self, other: "Grid") -> bool:
        return (
            self.shape == other.shape
            and self.cell_size == other.cell_size
            and self.x_origin == other.x_origin
            and self.y_origin == other.y_origin
        )


def _as_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("ascii")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("ascii")
    return data


def read_ascii_grid(source: BinaryIO | TextIO | bytes) -> Grid:
    """Parse an ESRI ASCII grid from a stream (binary or text) or bytes."""
    try:
        text = _as_text(source)
    except UnicodeDecodeError as exc:
        raise MalformedHeader(f"non-ASCII content: {exc}") from exc
    tokens = text.split()

    header: dict[str, str] = {}
    pos = 0
    while pos < len(tokens):
        key = tokens[pos].lower()
        if key not in _HEADER_KEYS:
            # first token that is not a header key starts the data block
            try:
                float(tokens[pos])
            except ValueError:
                raise MalformedHeader(f"unknown header key {tokens[pos]!r}") from None
            break
        if key in header:
            raise MalformedHeader(f"duplicate header key {key!r}")
        if pos + 1 >= len(tokens):
            raise MalformedHeader(f"header key {key!r} has no value")
        header[key] = tokens[pos + 1]
        pos += 2

    if "xllcorner" in header and "xllcenter" in header:
        raise MalformedHeader("both xllcorner and xllcenter given")
    if "yllcorner" in header and "yllcenter" in header:
        raise MalformedHeader("both yllcorner and yllcenter given")
    for required in ("ncols", "nrows", "cellsize"):
        if required not in header:
            raise MalformedHeader(f"missing header key {required!r}")
    if "xllcorner" not in header and "xllcenter" not in header:
        raise MalformedHeader("missing header key 'xllcorner'")
    if "yllcorner" not in header and "yllcenter" not in header:
        raise MalformedHeader("missing header key 'yllcorner'")

    try:
        ncols = int(header["ncols"])
        nrows = int(header["nrows"])
        cell_size = float(header["cellsize"])
        x0 = float(header.get("xllcorner", header.get("xllcenter")))
        y0 = float(header.get("yllcorner", header.get("yllcenter")))
        nodata = float(header["nodata_value"]) if "nodata_value" in header else None
    except ValueError as exc:
        raise MalformedHeader(f"bad header value: {exc}") from exc
    if ncols < 1 or nrows < 1:
        raise MalformedHeader(f"ncols/nrows must be positive, got {ncols}x{nrows}")
    if not (math.isfinite(cell_size) and cell_size > 0):
        raise MalformedHeader(f"cellsize must be positive, got {header['cellsize']}")
    if "xllcenter" in header:
        x0 -= cell_size / 2.0
    if "yllcenter" in header:
        y0 -= cell_size / 2.0

    data = tokens[pos:]
    if len(data) != nrows * ncols:
        raise DimensionMismatch(
            f"expected {nrows * ncols} values for {nrows}x{ncols} grid, got {len(data)}"
        )
    try:
        values = np.array(data, dtype=np.float64)
    except ValueError as exc:
        raise MalformedData(f"unparseable data token: {exc}") from exc
    if nodata is not None and np.any(values == nodata):
        n_bad = int(np.count_nonzero(values == nodata))
        raise NodataPresent(f"{n_bad} cell(s) equal NODATA_value {nodata:g}")
    if not np.all(np.isfinite(values)):
        raise NonFiniteValue("grid contains NaN or infinite values")
    return Grid(values.reshape(nrows, ncols), cell_size, x0, y0)


def write_ascii_grid(grid: Grid, sink: BinaryIO | TextIO, decimals: int = 6) -> None:
    """Write ``grid`` with fixed-point values, one raster row per line."""
    if not 1 <= decimals <= 17:
        raise ValueError(f"decimals must be in [1, 17], got {decimals}")
    lines = [
        f"ncols {grid.cols}",
        f"nrows {grid.rows}",
        f"xllcorner {grid.x_origin!r}",
        f"yllcorner {grid.y_origin!r}",
        f"cellsize {grid.cell_size!r}",
    ]
    fmt = f"{{:.{decimals}f}}"
    for row in grid.values:
        lines.append(" ".join(fmt.format(v) for v in row.tolist()))
    text = "\n".join(lines) + "\n"
    try:
        if isinstance(sink, io.TextIOBase):
            sink.write(text)
        else:
            sink.write(text.encode("ascii"))
    except (OSError, ValueError) as exc:
        raise IoFailure(str(exc)) from exc


def load_grid(path: PathLike) -> Grid:
    try:
        with open(path, "rb") as fh:
            return read_ascii_grid(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read {os.fspath(path)}: {exc}") from exc


def save_grid(grid: Grid, path: PathLike, decimals: int = 6) -> None:
    try:
        with open(path, "wb") as fh:
            write_ascii_grid(grid, fh, decimals)
    except OSError as exc:
        raise IoFailure(f"cannot write {os.fspath(path)}: {exc}") from exc
