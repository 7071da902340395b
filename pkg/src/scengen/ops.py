"""Geometric operator implementations, registered into the symbolic-value
registry.  The evaluator lowers every surface operator to these tags; they
all take concrete geometry values and are pure."""

from __future__ import annotations

from . import geometry as geo
from .errors import NO_SPAN, ScenError
from .geometry import OrientedValue, Region, Sector, Vector, VectorField
from .values import register_op


def _vec(x, span, what="operand"):
    if not isinstance(x, Vector):
        raise ScenError(f"{what} must be a vector, got {type(x).__name__}", span)
    return x


def _heading(x, span, what="heading"):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ScenError(f"{what} must be a heading, got {type(x).__name__}", span)
    return float(x)


def _field(x, span):
    if not isinstance(x, VectorField):
        raise ScenError(f"expected a vector field, got {type(x).__name__}", span)
    return x


def _region(x, span):
    if not isinstance(x, Region):
        raise ScenError(f"expected a region, got {type(x).__name__}", span)
    return x


def _rotate(ctx, v, h, span=NO_SPAN):
    return geo.rotate(_vec(v, span), _heading(h, span))


def _angle_of(ctx, v, span=NO_SPAN):
    return geo.angle_of(_vec(v, span))


def _offset_local(ctx, origin, heading, off, span=NO_SPAN):
    return geo.offset_local(_vec(origin, span), _heading(heading, span), _vec(off, span))


def _normalize(ctx, h, span=NO_SPAN):
    return geo.normalize_heading(_heading(h, span))


def _rel_heading(ctx, h1, h2, span=NO_SPAN):
    return geo.normalize_heading(_heading(h1, span) - _heading(h2, span))


def _apparent_heading(ctx, h, pos, origin, span=NO_SPAN):
    los = geo.angle_of(_vec(pos, span) - _vec(origin, span))
    return geo.normalize_heading(_heading(h, span) - los)


def _distance(ctx, v1, v2, span=NO_SPAN):
    return (_vec(v2, span) - _vec(v1, span)).norm()


def _angle_between(ctx, v1, v2, span=NO_SPAN):
    return geo.angle_of(_vec(v2, span) - _vec(v1, span))


def _field_at(ctx, field, v, span=NO_SPAN):
    return _field(field, span).value_at(_vec(v, span))


def _offset_along_heading(ctx, v1, h, v2, span=NO_SPAN):
    return _vec(v1, span) + geo.rotate(_vec(v2, span), _heading(h, span))


def _offset_along_field(ctx, v1, f, v2, span=NO_SPAN):
    v1 = _vec(v1, span)
    return v1 + geo.rotate(_vec(v2, span), _field(f, span).value_at(v1))


def _oriented(ctx, pos, heading, span=NO_SPAN):
    return OrientedValue(_vec(pos, span), _heading(heading, span))


def _op_position(ctx, ov, span=NO_SPAN):
    if isinstance(ov, OrientedValue):
        return ov.position
    raise ScenError("expected an oriented point", span)


def _op_heading(ctx, ov, span=NO_SPAN):
    if isinstance(ov, OrientedValue):
        return ov.heading
    raise ScenError("expected an oriented point", span)


def _follow(ctx, field, start, dist, span=NO_SPAN):
    field = _field(field, span)
    y = geo.forward_euler(_vec(start, span), float(dist), field)
    return OrientedValue(y, field.value_at(y))


def _visible_sector(ctx, pos, heading, view_distance, view_angle, span=NO_SPAN):
    h = None if heading is None else _heading(heading, span)
    return geo.visible_sector(_vec(pos, span), h, float(view_distance), float(view_angle))


def _region_visible(ctx, region, sector, span=NO_SPAN):
    region = _region(region, span)
    if not isinstance(sector, Sector):
        raise ScenError("expected a visibility sector", span)
    return region.intersection_polygon(sector.polygon())


def _region_intersect(ctx, a, b, span=NO_SPAN):
    return _region(a, span).intersection(_region(b, span))


def _region_union(ctx, a, b, span=NO_SPAN):
    return _region(a, span).union(_region(b, span))


def _region_difference(ctx, a, b, span=NO_SPAN):
    return _region(a, span).difference(_region(b, span))


def _bbox(ctx, pos, heading, width, height, span=NO_SPAN):
    return geo.bounding_box_polygon(_vec(pos, span), _heading(heading, span),
                                    float(width), float(height))


def _can_see_box(ctx, sector, box, span=NO_SPAN):
    if not isinstance(sector, Sector):
        raise ScenError("expected a visibility sector", span)
    if sector.is_disc:
        import shapely
        from shapely.geometry import Point
        return bool(box.distance(Point(sector.center.x, sector.center.y)) <= sector.radius)
    return bool(sector.polygon().intersects(box))


def _can_see_point(ctx, sector, v, span=NO_SPAN):
    if not isinstance(sector, Sector):
        raise ScenError("expected a visibility sector", span)
    return sector.contains(_vec(v, span))


def _point_in_region(ctx, v, region, span=NO_SPAN):
    return _region(region, span).contains_point(_vec(v, span))


def _box_in_region(ctx, box, region, span=NO_SPAN):
    return _region(region, span).covers_polygon(box)


def _as_vector(ctx, v, span=NO_SPAN):
    if isinstance(v, Vector):
        return v
    if isinstance(v, OrientedValue):
        return v.position
    raise ScenError(f"expected a vector, got {type(v).__name__}", span)


def _as_heading(ctx, v, span=NO_SPAN):
    if isinstance(v, OrientedValue):
        return v.heading
    if isinstance(v, bool):
        raise ScenError("expected a heading, got a boolean", span)
    if isinstance(v, (int, float)):
        return float(v)
    raise ScenError(f"expected a heading, got {type(v).__name__}", span)


def _sector_region(ctx, sector, span=NO_SPAN):
    if not isinstance(sector, Sector):
        raise ScenError("expected a visibility sector", span)
    return Region(sector.polygon())


def _orientation_at(ctx, region, v, span=NO_SPAN):
    region = _region(region, span)
    h = region.orientation_at(_vec(v, span))
    if h is None:
        label = region.name or "the region"
        raise ScenError(f"{label} has no preferred orientation", span)
    return h


register_op("rotate", _rotate, "vector")
register_op("angle_of", _angle_of, "heading")
register_op("offset_local", _offset_local, "vector")
register_op("normalize_heading", _normalize, "heading")
register_op("rel_heading", _rel_heading, "heading")
register_op("apparent_heading", _apparent_heading, "heading")
register_op("distance", _distance, "scalar")
register_op("angle_between", _angle_between, "heading")
register_op("field_at", _field_at, "heading")
register_op("offset_along_heading", _offset_along_heading, "vector")
register_op("offset_along_field", _offset_along_field, "vector")
register_op("oriented", _oriented, "oriented")
register_op("op_position", _op_position, "vector")
register_op("op_heading", _op_heading, "heading")
register_op("follow", _follow, "oriented")
register_op("visible_sector", _visible_sector, "sector")
register_op("region_visible", _region_visible, "region")
register_op("region_intersect", _region_intersect, "region")
register_op("region_union", _region_union, "region")
register_op("region_difference", _region_difference, "region")
register_op("bbox", _bbox, "polygon")
register_op("can_see_box", _can_see_box, "boolean")
register_op("can_see_point", _can_see_point, "boolean")
register_op("point_in_region", _point_in_region, "boolean")
register_op("box_in_region", _box_in_region, "boolean")
register_op("orientation_at", _orientation_at, "heading")
register_op("as_vector", _as_vector, "vector")
register_op("as_heading", _as_heading, "heading")
register_op("sector_region", _sector_region, "region")
