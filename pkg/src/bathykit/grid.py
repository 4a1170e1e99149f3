"""Raster depth grid and its ESRI ASCII / PGM exports."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

NODATA = -9999.0
MAX_VALID_DEPTH_M = 457.0


@dataclass(eq=False)
class DepthGrid:
    """Row-major depth raster.

    ``origin`` is the centre of cell ``(row 0, col 0)``, the south-west
    corner cell; rows run north. Masked cells hold NaN in ``depths``.
    """

    origin: tuple[float, float]
    cell_m: float
    depths: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        if not self.cell_m > 0:
            raise ValueError("cell_m must be positive")
        self.depths = np.asarray(self.depths, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.depths.shape != self.mask.shape or self.depths.ndim != 2:
            raise ValueError("depths and mask must be equal-shaped 2-D arrays")
        self.depths = np.where(self.mask, self.depths, np.nan)
        valid = self.depths[self.mask]
        if valid.size and (np.any(~np.isfinite(valid)) or valid.min() < 0
                           or valid.max() > MAX_VALID_DEPTH_M):
            raise ValueError("valid depths must be finite and within [0, 457] m")

    @property
    def height(self) -> int:
        return self.depths.shape[0]

    @property
    def width(self) -> int:
        return self.depths.shape[1]

    @property
    def cell_area(self) -> float:
        return self.cell_m * self.cell_m

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids of cell-centre x and y."""
        gx = self.origin[0] + self.cell_m * np.arange(self.width)
        gy = self.origin[1] + self.cell_m * np.arange(self.height)
        return np.meshgrid(gx, gy)

    def valid_depths(self) -> np.ndarray:
        return self.depths[self.mask]

    @classmethod
    def from_function(cls, fn, xmin, ymin, xmax, ymax, cell_m, valid=None) -> "DepthGrid":
        """Sample ``fn(x, y)`` at cell centres covering the given box.

        ``valid(x, y)`` optionally returns the mask; otherwise every cell
        with a finite value is valid.
        """
        width = int(np.ceil((xmax - xmin) / cell_m))
        height = int(np.ceil((ymax - ymin) / cell_m))
        gx = xmin + cell_m * (np.arange(width) + 0.5)
        gy = ymin + cell_m * (np.arange(height) + 0.5)
        X, Y = np.meshgrid(gx, gy)
        d = np.asarray(fn(X, Y), dtype=float)
        mask = np.isfinite(d) if valid is None else np.asarray(valid(X, Y), dtype=bool)
        return cls((gx[0], gy[0]), cell_m, d, mask)


def write_asc(grid: DepthGrid, path, decimals: int = 3):
    """ESRI ASCII grid, north row first, masked cells as -9999."""
    rows = np.where(grid.mask, grid.depths, NODATA)[::-1]
    lines = [
        f"ncols {grid.width}",
        f"nrows {grid.height}",
        f"xllcorner {grid.origin[0] - grid.cell_m / 2:.6f}",
        f"yllcorner {grid.origin[1] - grid.cell_m / 2:.6f}",
        f"cellsize {grid.cell_m:.6f}",
        f"NODATA_value {NODATA:.0f}",
    ]
    for row in rows:
        lines.append(" ".join(
            f"{NODATA:.0f}" if v == NODATA else f"{v:.{decimals}f}" for v in row
        ))
    Path(path).write_text("\n".join(lines) + "\n")


def read_asc(path) -> DepthGrid:
    header = {}
    with open(path) as fh:
        for _ in range(6):
            key, value = fh.readline().split()
            header[key.lower()] = value
        data = np.loadtxt(fh, ndmin=2)
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    cell = float(header["cellsize"])
    nodata = float(header.get("nodata_value", NODATA))
    if data.shape != (nrows, ncols):
        raise ValueError(f"{path}: expected {nrows}x{ncols} values, got {data.shape}")
    data = data[::-1]
    mask = data != nodata
    origin = (float(header["xllcorner"]) + cell / 2, float(header["yllcorner"]) + cell / 2)
    return DepthGrid(origin, cell, np.where(mask, data, np.nan), mask)


def write_pgm(grid: DepthGrid, path, max_depth: float | None = None):
    """8-bit binary PGM heat map, north up; 0 for masked cells."""
    valid = grid.valid_depths()
    top = max_depth if max_depth is not None else (valid.max() if valid.size else 1.0)
    top = top if top > 0 else 1.0
    scaled = np.zeros(grid.depths.shape, dtype=np.uint8)
    scaled[grid.mask] = np.clip(np.rint(grid.depths[grid.mask] / top * 255.0), 0, 255)
    body = scaled[::-1].tobytes()
    Path(path).write_bytes(f"P5\n{grid.width} {grid.height}\n255\n".encode() + body)


def read_pgm(path) -> np.ndarray:
    """Return the PGM raster with row 0 at the top."""
    data = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    magic, w, h, maxval = fields
    if magic != b"P5" or maxval != b"255":
        raise ValueError(f"{path}: not an 8-bit binary PGM")
    w, h = int(w), int(h)
    body = data[pos + 1 : pos + 1 + w * h]
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)
