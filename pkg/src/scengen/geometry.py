"""Pure 2D geometric kernel.

Conventions used throughout the package:

* headings are angles in radians, measured anticlockwise, with zero pointing
  North (the +y axis);
* ``rotate((x, y), t) = (x cos t - y sin t, x sin t + y cos t)``;
* the heading of a vector ``v`` is the ``h`` with ``rotate((0, |v|), h) = v``,
  i.e. ``atan2(-x, y)``;
* regions are closed point sets: boundary points count as contained.

Polygon algebra is delegated to shapely.  Curved boundaries (discs, sectors,
buffer arcs) are approximated by regular 64-gons.  The approximation is always
rounded *outward*: dilation circumscribes the true disc and erosion never
removes more than the exact erosion would, so the pruning passes built on top
of these operations can only keep extra area, never discard valid area.
Coordinates of every constructed region are snapped to a 1e-9 m grid to keep
the set algebra deterministic.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
import shapely
import shapely.ops
from shapely.geometry import GeometryCollection, MultiPolygon, Point, Polygon
from shapely.geometry.polygon import orient
from shapely.strtree import STRtree

from .errors import ScenError

TWO_PI = 2.0 * math.pi

# 16 segments per quarter circle = 64-gon approximations everywhere.
QUAD_SEGS = 16
CIRCLE_SEGMENTS = 4 * QUAD_SEGS
# Circumscription factor: a regular n-gon of radius r*OUTWARD contains the
# disc of radius r.
OUTWARD = 1.0 / math.cos(math.pi / CIRCLE_SEGMENTS)
SNAP_GRID = 1e-9
EULER_STEPS = 4


class DegenerateDirectionError(ScenError):
    """Direction of the zero vector was requested."""


class EmptyRegionError(ScenError):
    """A positive-area region was required."""


class Vector(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Vector(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return Vector(self.x - other.x, self.y - other.y)

    def __neg__(self):
        return Vector(-self.x, -self.y)

    def __mul__(self, k):  # type: ignore[override]
        return Vector(self.x * k, self.y * k)

    __rmul__ = __mul__

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


class OrientedValue(NamedTuple):
    """A bare (position, heading) pair, the value produced by operators that
    return oriented points without creating an object."""

    position: Vector
    heading: float


def normalize_heading(h: float) -> float:
    """Canonical representative of a heading in (-pi, pi]."""
    h = math.fmod(h, TWO_PI)
    if h <= -math.pi:
        h += TWO_PI
    elif h > math.pi:
        h -= TWO_PI
    return h


def rotate(v: Vector, theta: float) -> Vector:
    c = math.cos(theta)
    s = math.sin(theta)
    return Vector(v.x * c - v.y * s, v.x * s + v.y * c)


def angle_of(v: Vector) -> float:
    """Heading of a nonzero vector: the h with rotate((0,|v|), h) = v.

    The result is the canonical representative in (-pi, pi]; atan2's signed
    zero would otherwise yield -pi for due South."""
    if v.x == 0.0 and v.y == 0.0:
        raise DegenerateDirectionError("direction of the zero vector is undefined")
    h = math.atan2(-v.x, v.y)
    return math.pi if h == -math.pi else h


def heading_to_direction(h: float) -> Vector:
    """Unit vector pointing along heading h."""
    return Vector(-math.sin(h), math.cos(h))


def offset_local(origin: Vector, heading: float, offset: Vector) -> Vector:
    return origin + rotate(offset, heading)


def bounding_box_polygon(position: Vector, heading: float, width: float, height: float) -> Polygon:
    """Rotated rectangle with the given center, heading and dimensions.

    Corners are the four (+-width/2, +-height/2) local offsets; the ring is
    counterclockwise.
    """
    if not (width > 0.0 and height > 0.0):
        raise ScenError(f"bounding box requires positive dimensions, got {width} x {height}")
    hw, hh = width / 2.0, height / 2.0
    corners = [Vector(hw, hh), Vector(-hw, hh), Vector(-hw, -hh), Vector(hw, -hh)]
    pts = [tuple(offset_local(position, heading, c)) for c in corners]
    return Polygon(pts)


def box_corners(position: Vector, heading: float, width: float, height: float) -> list[Vector]:
    """Front-right, front-left, back-left, back-right corners."""
    hw, hh = width / 2.0, height / 2.0
    offs = [Vector(hw, hh), Vector(-hw, hh), Vector(-hw, -hh), Vector(hw, -hh)]
    return [offset_local(position, heading, o) for o in offs]


# ---------------------------------------------------------------------------
# Vector fields
# ---------------------------------------------------------------------------


class VectorField:
    """Total map from positions to headings."""

    name: str = "field"

    def value_at(self, p: Vector) -> float:
        raise NotImplementedError

    def __repr__(self):
        return f"<field {self.name}>"


class ConstantField(VectorField):
    def __init__(self, heading: float, name: str = "constant"):
        self.heading = float(heading)
        self.name = name

    def value_at(self, p: Vector) -> float:
        return self.heading


class PiecewiseField(VectorField):
    """Constant heading inside each cell polygon, a default heading outside.

    Cells must be pairwise interior-disjoint; a point on a shared boundary
    resolves to the lowest-index cell covering it.
    """

    def __init__(self, cells: Sequence[tuple[Polygon, float]], default: float = 0.0,
                 name: str = "field"):
        self.cells = [(poly, float(h)) for poly, h in cells]
        self.default = float(default)
        self.name = name
        self._tree = STRtree([poly for poly, _ in self.cells]) if self.cells else None

    @property
    def polygons(self) -> list[Polygon]:
        return [poly for poly, _ in self.cells]

    @property
    def headings(self) -> list[float]:
        return [h for _, h in self.cells]

    def cell_index_at(self, p: Vector) -> Optional[int]:
        if self._tree is None:
            return None
        pt = Point(p.x, p.y)
        hits = sorted(self._tree.query(pt, predicate="intersects"))
        return int(hits[0]) if len(hits) else None

    def value_at(self, p: Vector) -> float:
        idx = self.cell_index_at(p)
        return self.default if idx is None else self.cells[idx][1]

    def cell_heading(self, polygon_or_index) -> float:
        if isinstance(polygon_or_index, int):
            return self.cells[polygon_or_index][1]
        for poly, h in self.cells:
            if poly is polygon_or_index or poly.equals(polygon_or_index):
                return h
        raise ScenError(f"polygon is not a cell of field {self.name!r}")


class OffsetField(VectorField):
    """A field plus a constant heading offset."""

    def __init__(self, base: VectorField, offset: float):
        self.base = base
        self.offset = float(offset)
        self.name = f"{base.name}+offset"

    def value_at(self, p: Vector) -> float:
        return self.base.value_at(p) + self.offset


def rel_head(p, q, field: PiecewiseField) -> float:
    """Relative heading between two cells of a piecewise field: f(q) - f(p),
    normalized to (-pi, pi]."""
    return normalize_heading(field.cell_heading(q) - field.cell_heading(p))


def forward_euler(x: Vector, d: float, field: VectorField, steps: int = EULER_STEPS) -> Vector:
    step = d / steps
    for _ in range(steps):
        x = x + rotate(Vector(0.0, step), field.value_at(x))
    return x


# ---------------------------------------------------------------------------
# Sectors and discs
# ---------------------------------------------------------------------------


class Sector(NamedTuple):
    """Circular sector (or full disc) used for visibility.

    ``heading`` may be None, in which case the sector is the full disc of the
    given radius regardless of aperture, mirroring how an unoriented viewer
    sees in every direction.
    """

    center: Vector
    radius: float
    heading: Optional[float]
    aperture: float

    @property
    def is_disc(self) -> bool:
        return self.heading is None or self.aperture >= TWO_PI - 1e-12

    def contains(self, p: Vector) -> bool:
        d = (p - self.center).norm()
        if d > self.radius:
            return False
        if self.is_disc:
            return True
        if d == 0.0:
            return True
        off = normalize_heading(angle_of(p - self.center) - self.heading)
        return abs(off) <= self.aperture / 2.0

    def polygon(self) -> Polygon:
        """Inscribed polygonal approximation (never over-approximates)."""
        cx, cy = self.center
        if self.is_disc:
            angles = np.linspace(0.0, TWO_PI, CIRCLE_SEGMENTS, endpoint=False)
            pts = [(cx - self.radius * math.sin(a), cy + self.radius * math.cos(a))
                   for a in angles]
            return Polygon(pts)
        half = self.aperture / 2.0
        n = max(2, math.ceil(CIRCLE_SEGMENTS * self.aperture / TWO_PI))
        angles = np.linspace(self.heading - half, self.heading + half, n + 1)
        pts = [(cx, cy)]
        pts += [(cx - self.radius * math.sin(a), cy + self.radius * math.cos(a))
                for a in angles]
        return Polygon(pts)

    def to_region(self) -> "Region":
        return Region(self.polygon())


def visible_sector(position: Vector, heading: Optional[float], view_distance: float,
                   view_angle: float = TWO_PI) -> Sector:
    """The region visible from a viewer: a sector for an oriented viewer, the
    full disc for an unoriented one."""
    if view_distance <= 0.0:
        raise ScenError(f"view distance must be positive, got {view_distance}")
    return Sector(position, view_distance, heading, view_angle)


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


def _polygonal_parts(geom) -> list[Polygon]:
    if geom is None or geom.is_empty:
        return []
    if isinstance(geom, Polygon):
        return [geom]
    if isinstance(geom, (MultiPolygon, GeometryCollection)):
        out: list[Polygon] = []
        for g in geom.geoms:
            out.extend(_polygonal_parts(g))
        return out
    return []  # lines and points carry no area


def _normalize(geom) -> MultiPolygon:
    parts = _polygonal_parts(geom)
    if not parts:
        return MultiPolygon([])
    merged = shapely.set_precision(MultiPolygon(parts), SNAP_GRID)
    if not merged.is_valid:
        merged = shapely.make_valid(merged)
    parts = [orient(p, 1.0) for p in _polygonal_parts(merged) if p.area > 0.0]
    return MultiPolygon(parts)


class Region:
    """A union of polygons, optionally carrying a preferred-orientation field.

    Immutable; all set operations return new regions.  Boolean results are
    snapped to the fixed precision grid and re-oriented so that exteriors are
    counterclockwise and holes clockwise.
    """

    __slots__ = ("geom", "orientation", "name", "_tris", "_prep", "_box")

    def __init__(self, geom=None, orientation: Optional[VectorField] = None,
                 name: str | None = None):
        self.geom = _normalize(geom)
        self.orientation = orientation
        self.name = name
        self._tris = None
        self._prep = False
        # Fast path when the region is a single axis-aligned box.
        self._box = None
        if len(self.geom.geoms) == 1:
            poly = self.geom.geoms[0]
            if not poly.interiors:
                minx, miny, maxx, maxy = poly.bounds
                if abs(poly.area - (maxx - minx) * (maxy - miny)) <= 1e-9 * max(poly.area, 1.0):
                    self._box = (minx, miny, maxx, maxy)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_polygons(polys: Sequence[Polygon], orientation=None, name=None) -> "Region":
        return Region(shapely.union_all([MultiPolygon([p]) for p in polys])
                      if polys else None, orientation, name)

    @staticmethod
    def empty() -> "Region":
        return Region(None)

    # -- basic queries -----------------------------------------------------

    @property
    def polygons(self) -> list[Polygon]:
        return list(self.geom.geoms)

    @property
    def area(self) -> float:
        return self.geom.area

    @property
    def is_empty(self) -> bool:
        return self.geom.is_empty or self.geom.area <= 0.0

    def _label(self) -> str:
        return self.name or "region"

    def _ensure_prepared(self):
        if not self._prep:
            shapely.prepare(self.geom)
            self._prep = True

    def contains_point(self, p: Vector) -> bool:
        """Membership with boundary points counting as contained."""
        if self._box is not None:
            minx, miny, maxx, maxy = self._box
            return minx <= p.x <= maxx and miny <= p.y <= maxy
        self._ensure_prepared()
        return bool(shapely.intersects_xy(self.geom, p.x, p.y))

    def contains_points_xy(self, xs, ys):
        """Vectorized boundary-inclusive membership for numpy arrays."""
        self._ensure_prepared()
        return shapely.intersects_xy(self.geom, xs, ys)

    def covers_polygon(self, poly: Polygon) -> bool:
        if self._box is not None:
            minx, miny, maxx, maxy = self._box
            bx0, by0, bx1, by1 = poly.bounds
            return bx0 >= minx and by0 >= miny and bx1 <= maxx and by1 <= maxy
        self._ensure_prepared()
        return bool(self.geom.covers(poly))

    def intersects_polygon(self, poly: Polygon) -> bool:
        self._ensure_prepared()
        return bool(self.geom.intersects(poly))

    def distance_to_point(self, p: Vector) -> float:
        return float(self.geom.distance(Point(p.x, p.y)))

    def orientation_at(self, p: Vector) -> Optional[float]:
        if self.orientation is None:
            return None
        return self.orientation.value_at(p)

    # -- set algebra ---------------------------------------------------------

    def intersection(self, other: "Region") -> "Region":
        return Region(self.geom.intersection(other.geom),
                      self.orientation or other.orientation)

    def intersection_polygon(self, poly: Polygon) -> "Region":
        return Region(self.geom.intersection(poly), self.orientation)

    def union(self, other: "Region") -> "Region":
        return Region(self.geom.union(other.geom), self.orientation)

    def difference(self, other: "Region") -> "Region":
        return Region(self.geom.difference(other.geom), self.orientation)

    def erode(self, d: float) -> "Region":
        """Minkowski erosion by a disc of radius d.

        Reflex-corner arcs are approximated by inscribed chords, so the result
        contains the exact erosion (it never over-erodes).
        """
        if d < 0.0:
            raise ScenError(f"erosion radius must be nonnegative, got {d}")
        if d == 0.0 or self.is_empty:
            return self
        return Region(self.geom.buffer(-d, quad_segs=QUAD_SEGS), self.orientation)

    def dilate(self, d: float) -> "Region":
        """Minkowski dilation by a disc of radius d.

        The buffer radius is scaled so the polygonal arcs circumscribe the true
        disc: the result always contains the exact dilation.
        """
        if d < 0.0:
            raise ScenError(f"dilation radius must be nonnegative, got {d}")
        if d == 0.0 or self.is_empty:
            return self
        return Region(self.geom.buffer(d * OUTWARD, quad_segs=QUAD_SEGS), self.orientation)

    # -- uniform sampling ----------------------------------------------------

    def _triangulation(self):
        if self._tris is None:
            p0, e1, e2, areas = [], [], [], []
            for poly in self.geom.geoms:
                tris = shapely.constrained_delaunay_triangles(poly)
                for tri in tris.geoms:
                    coords = list(tri.exterior.coords)[:3]
                    a = np.asarray(coords[0])
                    b = np.asarray(coords[1])
                    c = np.asarray(coords[2])
                    area = abs((b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0]) / 2.0
                    if area <= 0.0:
                        continue
                    p0.append(a)
                    e1.append(b - a)
                    e2.append(c - a)
                    areas.append(area)
            if not areas:
                self._tris = (None, None, None, None)
            else:
                cum = np.cumsum(areas)
                self._tris = (np.array(p0), np.array(e1), np.array(e2), cum)
        return self._tris

    def uniform_point(self, rng: np.random.Generator) -> Vector:
        """Exactly uniform point over the region's area.

        The region is triangulated once (cached); a triangle is chosen with
        probability proportional to its area and a point drawn uniformly
        inside it, so thin or disconnected regions carry no rejection cost.
        """
        p0, e1, e2, cum = self._triangulation()
        if cum is None:
            raise EmptyRegionError(f"cannot sample a point in empty {self._label()}")
        total = cum[-1]
        i = int(np.searchsorted(cum, rng.random() * total, side="right"))
        i = min(i, len(cum) - 1)
        u = rng.random()
        v = rng.random()
        if u + v > 1.0:
            u, v = 1.0 - u, 1.0 - v
        pt = p0[i] + u * e1[i] + v * e2[i]
        return Vector(float(pt[0]), float(pt[1]))

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<Region{tag} polys={len(self.geom.geoms)} area={self.area:.3f}>"
