"""Cache placements in the plane: Poisson fields, imported stations, distance orders."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EARTH_RADIUS_M = 6371008.8
MAX_EXPECTED_POINTS = 10**7


class GeometryError(ValueError):
    pass


class StationFormatError(GeometryError):
    """Bad station file: malformed row (with line number) or unknown schema."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Rectangle:
    x0: float
    y0: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise GeometryError("rectangle dimensions must be positive")

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x0 + self.width / 2, self.y0 + self.height / 2)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        # x0 + width can round one ulp below the largest coordinate it was built from
        ex = 1e-12 * max(abs(self.x0), abs(self.x0 + self.width))
        ey = 1e-12 * max(abs(self.y0), abs(self.y0 + self.height))
        return (
            (pts[:, 0] >= self.x0 - ex)
            & (pts[:, 0] <= self.x0 + self.width + ex)
            & (pts[:, 1] >= self.y0 - ey)
            & (pts[:, 1] <= self.y0 + self.height + ey)
        )

    def uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((n, 2))
        return np.column_stack((self.x0 + u[:, 0] * self.width, self.y0 + u[:, 1] * self.height))


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("disk radius must be positive")

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def center(self) -> tuple[float, float]:
        return (self.cx, self.cy)

    def contains(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        # small slack for points generated exactly on the rim
        return np.hypot(pts[:, 0] - self.cx, pts[:, 1] - self.cy) <= self.radius * (1 + 1e-12)

    def uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((n, 2))
        rad = self.radius * np.sqrt(u[:, 0])
        theta = 2 * np.pi * u[:, 1]
        return np.column_stack((self.cx + rad * np.cos(theta), self.cy + rad * np.sin(theta)))


Region = Rectangle | Disk


@dataclass(frozen=True, eq=False)
class CacheField:
    """Cache positions in meters, shape (n, 2).

    ``source`` is ``"hpp"`` for synthetic fields (with ``intensity`` set) or
    ``"imported"``.  ``region`` is None only for an empty imported field.
    """

    positions: np.ndarray
    region: Region | None
    source: str = "imported"
    intensity: float | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if not np.all(np.isfinite(pos)):
            raise GeometryError("cache positions must be finite")
        if len(pos) and self.region is not None and not np.all(self.region.contains(pos)):
            raise GeometryError("cache positions lie outside the declared region")

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def empty(self) -> bool:
        return len(self.positions) == 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, CacheField):
            return NotImplemented
        return (
            self.region == other.region
            and self.source == other.source
            and self.intensity == other.intensity
            and np.array_equal(self.positions, other.positions)
        )

    __hash__ = None


@dataclass(frozen=True)
class DistanceOrder:
    """Caches sorted by distance to ``client``; ``indices[i]`` is the original index
    of the (i+1)-th nearest cache."""

    client: tuple[float, float]
    distances: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return len(self.distances)


def sample_hpp(intensity: float, region: Region, rng: np.random.Generator,
               max_expected: float = MAX_EXPECTED_POINTS) -> CacheField:
    """Homogeneous Poisson process of ``intensity`` points per m^2 on ``region``."""
    if not intensity > 0:
        raise GeometryError("intensity must be positive")
    mean = intensity * region.area
    if mean > max_expected:
        raise MemoryError(f"expected point count {mean:.3g} exceeds cap {max_expected:.3g}")
    n = rng.poisson(mean)
    return CacheField(region.uniform(n, rng), region, source="hpp", intensity=intensity)


def order_by_distance(field: CacheField, client) -> DistanceOrder:
    if field.empty:
        raise GeometryError("cannot order an empty cache field")
    client = (float(client[0]), float(client[1]))
    dist = np.hypot(field.positions[:, 0] - client[0], field.positions[:, 1] - client[1])
    # stable sort: ties keep ascending original index
    idx = np.argsort(dist, kind="stable")
    return DistanceOrder(client, dist[idx], idx)


def sample_client(region: Region, rng: np.random.Generator, fraction: float | None = 0.5):
    """Uniform client position on the centered sub-rectangle whose sides are
    ``fraction`` times those of ``region``; ``fraction=None`` samples anywhere."""
    if fraction is None:
        x, y = region.uniform(1, rng)[0]
        return (float(x), float(y))
    if not 0 < fraction <= 1:
        raise GeometryError("fraction must lie in (0, 1]")
    if not isinstance(region, Rectangle):
        raise GeometryError("centered sub-rectangle sampling needs a rectangular region")
    cx, cy = region.center
    w, h = region.width * fraction, region.height * fraction
    u = rng.random(2)
    return (float(cx - w / 2 + u[0] * w), float(cy - h / 2 + u[1] * h))


def bounding_rectangle(pts: np.ndarray) -> Rectangle | None:
    if len(pts) == 0:
        return None
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    # degenerate extents (single point, collinear) get a 1 m side
    w = max(hi[0] - lo[0], 1.0)
    h = max(hi[1] - lo[1], 1.0)
    return Rectangle(float(lo[0]), float(lo[1]), float(w), float(h))


def equirectangular(lat, lon, ref_lat: float, lat0: float, lon0: float):
    """Project degrees to meters about ``ref_lat``, origin at (lat0, lon0)."""
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    x = EARTH_RADIUS_M * np.radians(lon - lon0) * math.cos(math.radians(ref_lat))
    y = EARTH_RADIUS_M * np.radians(lat - lat0)
    return x, y


def load_stations(path, projection: str | None = None, ref_lat: float | None = None) -> CacheField:
    """Read a station CSV with header ``x_m,y_m`` or ``lat,lon``.

    ``projection`` is ``"none"`` (planar input only), ``"equirectangular"``, or
    None to pick by header.  Lat/lon input is projected about ``ref_lat``
    (default: the middle of the latitude range) with the south-west corner of
    the data as origin.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise StationFormatError("missing header", line=1) from None
        if header == ["x_m", "y_m"]:
            schema = "xy"
        elif header == ["lat", "lon"]:
            schema = "latlon"
        else:
            raise StationFormatError(f"unknown header {','.join(header)!r}; "
                                     "expected 'x_m,y_m' or 'lat,lon'", line=1)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise StationFormatError(f"expected 2 columns, got {len(row)}", line=lineno)
            try:
                vals = (float(row[0]), float(row[1]))
            except ValueError:
                raise StationFormatError(f"non-numeric value in {row!r}", line=lineno) from None
            if not all(math.isfinite(v) for v in vals):
                raise StationFormatError("non-finite coordinate", line=lineno)
            rows.append(vals)

    data = np.array(rows, dtype=float).reshape(-1, 2)
    if schema == "xy":
        if projection not in (None, "none"):
            raise StationFormatError("planar x_m,y_m input cannot be projected")
        pts = data
    else:
        if projection == "none":
            raise StationFormatError("lat,lon input needs the equirectangular projection")
        if len(data):
            lat, lon = data[:, 0], data[:, 1]
            if ref_lat is None:
                ref_lat = float((lat.min() + lat.max()) / 2)
            x, y = equirectangular(lat, lon, ref_lat, float(lat.min()), float(lon.min()))
            pts = np.column_stack((x, y))
        else:
            pts = data
    return CacheField(pts, bounding_rectangle(pts), source="imported")


def write_stations(field: CacheField, dest) -> None:
    """Write ``x_m,y_m`` rows to a path or an open text stream."""
    if hasattr(dest, "write"):
        _write_rows(field, dest)
        return
    with Path(dest).open("w", newline="", encoding="utf-8") as fh:
        _write_rows(field, fh)


def _write_rows(field: CacheField, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["x_m", "y_m"])
    for x, y in field.positions:
        w.writerow([repr(float(x)), repr(float(y))])
