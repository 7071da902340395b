"""Scene serialization: canonical JSON documents and SVG drawings.

JSON documents use sorted keys and Python's shortest round-trip float
representation, so identical scenes serialize byte-identically and every
numeric value survives a parse round trip exactly.
"""

from __future__ import annotations

import json
import math

from .geometry import Region, Vector, VectorField, heading_to_direction, visible_sector
from .sampler import Scene

SCHEMA_VERSION = 1


def _encode(value):
    if isinstance(value, Vector):
        return [value.x, value.y]
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (int, float, str)):
        return value
    if isinstance(value, list):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _encode(v) for k, v in value.items()}
    if isinstance(value, Region):
        return {"$type": "region", "name": value.name}
    if isinstance(value, VectorField):
        return {"$type": "field", "name": value.name}
    return {"$type": type(value).__name__}


def scene_document(scene: Scene) -> dict:
    objects = []
    for obj in scene.objects:
        objects.append({
            "class": obj.class_name,
            "name": obj.name,
            "properties": {k: _encode(v) for k, v in sorted(obj.properties.items())},
            "bounding_box": [[c.x, c.y] for c in obj.corners],
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "world": scene.world_name,
        "seed": list(scene.seed_path),
        "iterations": scene.iterations,
        "ego_index": scene.ego_index,
        "params": {k: _encode(v) for k, v in sorted(scene.params.items())},
        "objects": objects,
    }


def write_scene_json(scene: Scene, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene_document(scene), fh, sort_keys=True, indent=2)
        fh.write("\n")


def parse_scene_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_MAX_DIM = 1000.0
_MARGIN = 0.05


class _Canvas:
    def __init__(self, bounds):
        minx, miny, maxx, maxy = bounds
        spanx = max(maxx - minx, 1e-9)
        spany = max(maxy - miny, 1e-9)
        scale = _MAX_DIM * (1 - 2 * _MARGIN) / max(spanx, spany)
        self.scale = scale
        self.width = spanx * scale * (1 + 2 * _MARGIN)
        self.height = spany * scale * (1 + 2 * _MARGIN)
        self.minx = minx - spanx * _MARGIN
        self.maxy = maxy + spany * _MARGIN

    def pt(self, x, y):
        return ((x - self.minx) * self.scale, (self.maxy - y) * self.scale)

    def path(self, coords):
        return " ".join(f"{x:.2f},{y:.2f}" for x, y in (self.pt(px, py) for px, py in coords))


def _polygon_elems(canvas, geom, style, css=""):
    elems = []
    for poly in geom.geoms:
        rings = [poly.exterior.coords] + [r.coords for r in poly.interiors]
        d = " ".join("M " + " L ".join(f"{x:.2f} {y:.2f}"
                                       for x, y in (canvas.pt(px, py) for px, py in ring)) + " Z"
                     for ring in rings)
        cls = f' class="{css}"' if css else ""
        elems.append(f'<path{cls} d="{d}" {style} fill-rule="evenodd"/>')
    return elems


def render_svg(scene: Scene, world) -> str:
    canvas = _Canvas(world.workspace.geom.bounds)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" '
             f'width="{canvas.width:.0f}" height="{canvas.height:.0f}" '
             f'viewBox="0 0 {canvas.width:.2f} {canvas.height:.2f}">',
             f'<rect width="{canvas.width:.2f}" height="{canvas.height:.2f}" fill="#f8f6f0"/>']

    parts += _polygon_elems(canvas, world.workspace.geom,
                            'fill="#ffffff" stroke="#444444" stroke-width="1.5"', "workspace")
    shades = ["#d9d9d9", "#c9bfae", "#cfdacf", "#d5c9da"]
    for i, (name, region) in enumerate(sorted(world.regions.items())):
        style = f'fill="{shades[i % len(shades)]}" fill-opacity="0.8" stroke="none"'
        parts += _polygon_elems(canvas, region.geom, style, f"region-{name}")

    # field glyphs on a coarse grid
    minx, miny, maxx, maxy = world.workspace.geom.bounds
    if world.fields:
        field = next(iter(sorted(world.fields.items())))[1]
        steps = 14
        glyph = min(maxx - minx, maxy - miny) / steps * 0.3
        for i in range(steps):
            for j in range(steps):
                x = minx + (i + 0.5) * (maxx - minx) / steps
                y = miny + (j + 0.5) * (maxy - miny) / steps
                if not world.workspace.contains_point(Vector(x, y)):
                    continue
                d = heading_to_direction(field.value_at(Vector(x, y)))
                x0, y0 = canvas.pt(x - d.x * glyph, y - d.y * glyph)
                x1, y1 = canvas.pt(x + d.x * glyph, y + d.y * glyph)
                parts.append(f'<line class="field-glyph" x1="{x0:.1f}" y1="{y0:.1f}" '
                             f'x2="{x1:.1f}" y2="{y1:.1f}" '
                             f'stroke="#9aa7b5" stroke-width="1"/>')

    # ego visibility sector (the ego may be a non-physical reference point,
    # in which case no scene object carries it)
    if scene.ego_index >= 0:
        ego = scene.objects[scene.ego_index]
        sector = visible_sector(ego.properties["position"], ego.properties.get("heading"),
                                ego.properties.get("viewDistance", 50.0),
                                ego.properties.get("viewAngle", 2 * math.pi))
        parts.append(f'<polygon class="ego-sector" '
                     f'points="{canvas.path(sector.polygon().exterior.coords)}" '
                     f'fill="#4a90d9" fill-opacity="0.12" stroke="#4a90d9" '
                     f'stroke-dasharray="4 3" stroke-width="1"/>')

    for obj in scene.objects:
        color = "#c0392b" if obj.is_ego else "#2c3e50"
        pts = canvas.path([(c.x, c.y) for c in obj.corners])
        parts.append(f'<polygon class="obj" points="{pts}" fill="{color}" '
                     f'fill-opacity="0.75" stroke="{color}" stroke-width="1"/>')
        pos = obj.properties["position"]
        head = obj.properties.get("heading", 0.0)
        tip = pos + heading_to_direction(head) * (obj.properties.get("height", 1.0) * 0.5)
        x0, y0 = canvas.pt(pos.x, pos.y)
        x1, y1 = canvas.pt(tip.x, tip.y)
        parts.append(f'<line class="heading-tick" x1="{x0:.1f}" y1="{y0:.1f}" '
                     f'x2="{x1:.1f}" y2="{y1:.1f}" stroke="#ffffff" stroke-width="2"/>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_scene_svg(scene: Scene, world, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(scene, world))
