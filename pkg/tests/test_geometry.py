"""Geometric kernel tests: hand-derived cases at 1e-9 plus grid oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from shapely.geometry import Polygon

from scengen import geometry as G
from scengen.geometry import (ConstantField, PiecewiseField, Region, Vector,
                              angle_of, bounding_box_polygon, box_corners, forward_euler,
                              normalize_heading, offset_local, rel_head, rotate,
                              visible_sector)

TOL = 1e-9


def vec_close(a, b, tol=TOL):
    return abs(a.x - b.x) <= tol and abs(a.y - b.y) <= tol


def square(side, cx=0.0, cy=0.0):
    h = side / 2.0
    return Polygon([(cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h)])


class TestRotate:
    def test_identity(self):
        assert vec_close(rotate(Vector(0, 1), 0.0), Vector(0, 1))

    def test_quarter_turn_is_anticlockwise(self):
        assert vec_close(rotate(Vector(0, 1), math.pi / 2), Vector(-1, 0))

    def test_negative_quarter_turn_points_east(self):
        assert vec_close(rotate(Vector(0, 1), -math.pi / 2), Vector(1, 0))

    @given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-10, 10))
    @settings(max_examples=200)
    def test_preserves_norm(self, x, y, theta):
        v = Vector(x, y)
        assert rotate(v, theta).norm() == pytest.approx(v.norm(), abs=1e-9)

    def test_norm_preserved_bulk(self):
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            v = Vector(*rng.uniform(-50, 50, 2))
            t = rng.uniform(-10, 10)
            assert abs(rotate(v, t).norm() - v.norm()) <= 1e-9


class TestAngleOf:
    def test_north_is_zero(self):
        assert angle_of(Vector(0, 1)) == pytest.approx(0.0, abs=TOL)

    def test_east_is_minus_quarter(self):
        assert angle_of(Vector(1, 0)) == pytest.approx(-math.pi / 2, abs=TOL)

    def test_southwest(self):
        assert angle_of(Vector(-1, -1)) == pytest.approx(3 * math.pi / 4, abs=TOL)

    def test_zero_vector_rejected(self):
        with pytest.raises(G.DegenerateDirectionError):
            angle_of(Vector(0, 0))

    def test_inverts_rotate(self):
        rng = np.random.default_rng(3)
        for _ in range(10_000):
            h = rng.uniform(-12, 12)
            got = angle_of(rotate(Vector(0, 1), h))
            assert abs(normalize_heading(got - h)) <= 1e-9


class TestNormalize:
    @pytest.mark.parametrize("raw, expected", [
        (0.0, 0.0),
        (math.pi, math.pi),
        (-math.pi, math.pi),
        (3 * math.pi, math.pi),
        (-3 * math.pi / 2, math.pi / 2),
        (2 * math.pi, 0.0),
    ])
    def test_representatives(self, raw, expected):
        assert normalize_heading(raw) == pytest.approx(expected, abs=TOL)

    @given(st.floats(-50, 50))
    @settings(max_examples=200)
    def test_range(self, h):
        n = normalize_heading(h)
        assert -math.pi < n <= math.pi
        assert abs(math.sin(n - h)) <= 1e-9


class TestOffsetLocal:
    def test_zero_heading(self):
        assert vec_close(offset_local(Vector(0, 0), 0.0, Vector(1, 2)), Vector(1, 2))

    def test_quarter_turn(self):
        assert vec_close(offset_local(Vector(5, 5), math.pi / 2, Vector(0, 1)), Vector(4, 5))

    def test_half_turn(self):
        assert vec_close(offset_local(Vector(1, 1), math.pi, Vector(0, -2)), Vector(1, 3))


class TestBoundingBox:
    def test_axis_aligned_unit_square(self):
        box = bounding_box_polygon(Vector(0, 0), 0.0, 1.0, 1.0)
        assert box.area == pytest.approx(1.0, abs=TOL)
        assert set((round(x, 9), round(y, 9)) for x, y in box.exterior.coords[:4]) == {
            (0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)}

    def test_front_edge_midpoint_rotated(self):
        corners = box_corners(Vector(0, 0), math.pi / 2, 1.0, 1.0)
        front_mid = (corners[0] + corners[1]) * 0.5
        assert vec_close(front_mid, Vector(-0.5, 0))

    def test_back_right_corner(self):
        corners = box_corners(Vector(2, 3), 0.0, 2.0, 4.0)
        assert vec_close(corners[3], Vector(3, 1))

    def test_non_positive_dimensions_rejected(self):
        with pytest.raises(Exception):
            bounding_box_polygon(Vector(0, 0), 0.0, 0.0, 1.0)

    def test_counterclockwise(self):
        box = bounding_box_polygon(Vector(1, 2), 0.7, 2.0, 3.0)
        assert box.exterior.is_ccw


class TestSector:
    def test_default_distance_disc(self):
        s = visible_sector(Vector(0, 0), None, 50.0)
        assert s.is_disc
        assert s.contains(Vector(0, 49.999))
        assert not s.contains(Vector(0, 50.001))

    def test_oriented_sector(self):
        s = visible_sector(Vector(0, 0), 0.0, 30.0, math.radians(80))
        assert s.contains(Vector(0, 29))
        # half angle is 40 degrees
        assert s.contains(rotate(Vector(0, 20), math.radians(39.9)))
        assert not s.contains(rotate(Vector(0, 20), math.radians(40.1)))

    def test_beyond_radius(self):
        s = visible_sector(Vector(0, 0), 0.0, 30.0, math.radians(80))
        assert not s.contains(Vector(0, 30.01))

    def test_polygon_inscribed(self):
        s = visible_sector(Vector(0, 0), None, 10.0)
        poly = s.polygon()
        assert poly.area < math.pi * 100.0
        assert poly.area > math.pi * 100.0 * 0.99


class TestRegionOps:
    def test_intersection_self(self):
        r = Region(square(2))
        both = r.intersection(r)
        assert both.area == pytest.approx(r.area, abs=1e-9)
        assert both.geom.symmetric_difference(r.geom).area <= 1e-12

    def test_disjoint_intersection_empty(self):
        a = Region(square(1))
        b = Region(square(1, cx=2.0))
        assert a.intersection(b).is_empty

    def test_boundary_point_contained(self):
        r = Region(square(1))
        assert r.contains_point(Vector(0.5, 0.0))

    def test_union_area(self):
        a = Region(square(2))
        b = Region(square(2, cx=2.0))  # abutting squares
        assert a.union(b).area == pytest.approx(8.0, rel=1e-9)

    def test_difference(self):
        a = Region(square(4))
        b = Region(square(2))
        assert a.difference(b).area == pytest.approx(12.0, rel=1e-9)


class TestErodeDilate:
    def test_erode_square(self):
        r = Region(square(4)).erode(1.0)
        assert r.area == pytest.approx(4.0, rel=1e-9)

    def test_dilate_zero_identity(self):
        r = Region(square(3))
        assert r.dilate(0.0) is r

    def test_erode_to_empty(self):
        assert Region(square(1)).erode(1.0).is_empty

    def test_negative_radius_rejected(self):
        with pytest.raises(Exception):
            Region(square(1)).erode(-0.1)

    def test_dilate_contains_exact_dilation(self):
        r = Region(square(2)).dilate(1.0)
        # corner of the true dilation: distance exactly 1 from the square corner
        p = Vector(1 + math.sqrt(0.5), 1 + math.sqrt(0.5))
        assert r.contains_point(p)

    def test_erode_never_over_erodes(self):
        # L-shape with a reflex corner: every point at distance >= d from the
        # complement must survive erosion.
        poly = Polygon([(0, 0), (4, 0), (4, 2), (2, 2), (2, 4), (0, 4)])
        region = Region(poly)
        d = 0.5
        eroded = region.erode(d)
        outside = Region(square(40)).difference(region)
        xs, ys = np.meshgrid(np.arange(0.05, 4.0, 0.1), np.arange(0.05, 4.0, 0.1))
        for x, y in zip(xs.ravel(), ys.ravel()):
            p = Vector(x, y)
            if not region.contains_point(p):
                continue
            dist = outside.geom.distance(__import__("shapely").geometry.Point(x, y))
            if dist >= d + 1e-9:
                assert eroded.contains_point(p), (x, y, dist)

    def test_grid_duality(self):
        # every grid point of erode(r, d) is at least d - eps from the complement
        rng = np.random.default_rng(11)
        from shapely.geometry import Point
        for _ in range(5):
            pts = rng.uniform(-5, 5, (6, 2))
            hull = Polygon(pts).convex_hull
            if hull.area < 4:
                continue
            region = Region(hull)
            d = 0.4
            eroded = region.erode(d)
            if eroded.is_empty:
                continue
            complement = Region(square(30)).difference(region)
            minx, miny, maxx, maxy = eroded.geom.bounds
            eps = 0.1
            for x in np.arange(minx, maxx, eps):
                for y in np.arange(miny, maxy, eps):
                    if eroded.contains_point(Vector(x, y)):
                        assert complement.geom.distance(Point(x, y)) >= d - eps


class TestUniformPoint:
    def test_all_samples_inside(self):
        region = Region(square(4, cx=3, cy=-2))
        rng = np.random.default_rng(0)
        for _ in range(500):
            assert region.contains_point(region.uniform_point(rng))

    def test_mean_of_unit_square(self):
        region = Region(Polygon([(0, 0), (1, 0), (1, 1), (0, 1)]))
        rng = np.random.default_rng(1)
        pts = [region.uniform_point(rng) for _ in range(10_000)]
        mx = float(np.mean([p.x for p in pts]))
        my = float(np.mean([p.y for p in pts]))
        sigma = 1.0 / math.sqrt(12 * 10_000)
        assert abs(mx - 0.5) < 3 * sigma
        assert abs(my - 0.5) < 3 * sigma

    def test_disjoint_squares_hit_ratio(self):
        region = Region(square(1).union(square(1, cx=5.0)))
        rng = np.random.default_rng(2)
        hits = sum(1 for _ in range(10_000) if region.uniform_point(rng).x > 2)
        sigma = math.sqrt(10_000 * 0.25)
        assert abs(hits - 5000) < 3 * sigma

    def test_chi_square_uniformity(self):
        from scipy import stats
        region = Region(square(4))
        rng = np.random.default_rng(3)
        counts = np.zeros((4, 4))
        n = 10_000
        for _ in range(n):
            p = region.uniform_point(rng)
            i = min(3, int((p.x + 2.0) / 1.0))
            j = min(3, int((p.y + 2.0) / 1.0))
            counts[i, j] += 1
        _, pvalue = stats.chisquare(counts.ravel())
        assert pvalue > 0.01

    def test_empty_region_rejected(self):
        with pytest.raises(G.EmptyRegionError):
            Region.empty().uniform_point(np.random.default_rng(0))

    def test_region_with_hole(self):
        poly = Polygon([(-2, -2), (2, -2), (2, 2), (-2, 2)],
                       holes=[[(-1, -1), (-1, 1), (1, 1), (1, -1)]])
        region = Region(poly)
        rng = np.random.default_rng(4)
        for _ in range(300):
            p = region.uniform_point(rng)
            assert region.contains_point(p)
            assert not (abs(p.x) < 1 and abs(p.y) < 1)


class TestForwardEuler:
    def test_constant_field_exact(self):
        field = ConstantField(0.0)
        assert vec_close(forward_euler(Vector(0, 0), 8.0, field), Vector(0, 8))

    def test_constant_field_east(self):
        field = ConstantField(-math.pi / 2)
        assert vec_close(forward_euler(Vector(0, 0), 4.0, field), Vector(4, 0))

    def test_zero_distance(self):
        field = ConstantField(1.234)
        assert vec_close(forward_euler(Vector(3, 4), 0.0, field), Vector(3, 4))

    def test_uses_four_steps(self):
        # a field that turns by cell: the trajectory must bend exactly at the
        # step granularity d/4
        cells = [(square(100, cx=0, cy=25), 0.0)]
        field = PiecewiseField(cells, default=-math.pi / 2)
        # start outside the cell heading east; enters nothing: straight east
        end = forward_euler(Vector(0, -100), 8.0, field)
        assert vec_close(end, Vector(8, -100))


class TestFields:
    def test_piecewise_lookup(self):
        field = PiecewiseField([(square(2, cx=0), 0.1), (square(2, cx=10), 0.2)],
                               default=0.9)
        assert field.value_at(Vector(0, 0)) == 0.1
        assert field.value_at(Vector(10, 0)) == 0.2
        assert field.value_at(Vector(5, 0)) == 0.9

    def test_rel_head_same_cell(self):
        field = PiecewiseField([(square(2), 0.3)], default=0.0)
        assert rel_head(0, 0, field) == 0.0

    def test_rel_head_difference(self):
        field = PiecewiseField([(square(2, cx=0), 0.0), (square(2, cx=5), math.pi / 2)],
                               default=0.0)
        assert rel_head(0, 1, field) == pytest.approx(math.pi / 2, abs=TOL)

    def test_rel_head_normalizes(self):
        field = PiecewiseField([(square(2, cx=0), 3 * math.pi / 4),
                                (square(2, cx=5), -3 * math.pi / 4)], default=0.0)
        assert rel_head(0, 1, field) == pytest.approx(math.pi / 2, abs=TOL)

    def test_rel_head_unknown_cell(self):
        field = PiecewiseField([(square(2), 0.0)], default=0.0)
        with pytest.raises(Exception):
            field.cell_heading(square(3, cx=9))

    def test_offset_field(self):
        base = ConstantField(0.25)
        assert G.OffsetField(base, 0.5).value_at(Vector(0, 0)) == pytest.approx(0.75)

    def test_orientation_region(self):
        field = ConstantField(0.4)
        region = Region(square(2), orientation=field)
        assert region.orientation_at(Vector(0, 0)) == pytest.approx(0.4)
        assert Region(square(2)).orientation_at(Vector(0, 0)) is None


class TestConservativeBuffering:
    @given(st.lists(st.tuples(st.floats(-8, 8), st.floats(-8, 8)),
                    min_size=5, max_size=9),
           st.floats(0.2, 1.5))
    @settings(max_examples=60, deadline=None)
    def test_dilation_contains_exact_dilation(self, pts, d):
        from shapely.geometry import MultiPoint, Point
        hull = MultiPoint(pts).convex_hull
        if hull.geom_type != "Polygon" or hull.area < 1.0:
            return
        region = Region(hull)
        dilated = region.dilate(d)
        # points at distance exactly d from the boundary, in every direction
        boundary = hull.exterior
        for frac in np.linspace(0, 1, 24, endpoint=False):
            p = boundary.interpolate(frac, normalized=True)
            # walk outward along the local normal
            eps = 1e-6
            q = boundary.interpolate(min(frac + eps, 1.0), normalized=True)
            tx, ty = q.x - p.x, q.y - p.y
            norm = math.hypot(tx, ty)
            if norm == 0:
                continue
            nx, ny = ty / norm, -tx / norm
            candidate = Vector(p.x + nx * d, p.y + ny * d)
            if hull.distance(Point(candidate.x, candidate.y)) > d + 1e-9:
                continue  # normal pointed inward or past a corner
            assert dilated.contains_point(candidate)
