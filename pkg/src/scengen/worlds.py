"""World models: the workspace, named regions, vector fields, tables and the
library prelude that scenarios build on.

A world is one self-contained JSON file.  Polygons may be declared once under
"polygons" and referenced by name; piecewise fields list (polygon, heading)
pieces in degrees plus a default heading for points outside every piece.
The prelude is scenario source (a list of lines) compiled before the user
program, providing the world's classes and helper functions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

from shapely.geometry import Polygon

from .errors import WorldError
from .geometry import PiecewiseField, Region

BUNDLED_WORLDS = ("tworoads", "mars", "lanes_bench", "strips_bench")


@dataclass
class WorldModel:
    name: str
    workspace: Region
    regions: dict
    fields: dict
    tables: dict
    prelude: str = ""

    def bindings(self) -> dict:
        out: dict = {"workspace": self.workspace}
        out.update(self.regions)
        out.update(self.fields)
        out.update(self.tables)
        return out


def _ring_from(data, named: dict, path: str):
    if isinstance(data, str):
        if data not in named:
            raise WorldError(f"{path}: unknown polygon {data!r}")
        return named[data]
    if not isinstance(data, list) or len(data) < 3:
        raise WorldError(f"{path}: a polygon needs at least three [x, y] vertices")
    try:
        ring = [(float(x), float(y)) for x, y in data]
    except (TypeError, ValueError):
        raise WorldError(f"{path}: vertices must be [x, y] number pairs")
    for x, y in ring:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise WorldError(f"{path}: vertices must be finite")
    return ring


def _polygon_from(data, named: dict, path: str) -> Polygon:
    poly = Polygon(_ring_from(data, named, path))
    if not poly.is_valid or poly.area <= 0:
        raise WorldError(f"{path}: polygon is invalid or has no area")
    return poly


def parse_world(data: dict, name_hint: str = "world") -> WorldModel:
    if not isinstance(data, dict):
        raise WorldError("/: world file must be a JSON object")
    name = data.get("name", name_hint)

    named: dict = {}
    for pname, ring in data.get("polygons", {}).items():
        named[pname] = _ring_from(ring, {}, f"/polygons/{pname}")

    ws_items = data.get("workspace")
    if not ws_items:
        raise WorldError("/workspace: missing or empty")
    ws_polys = [_polygon_from(item, named, f"/workspace/{i}")
                for i, item in enumerate(ws_items)]
    workspace = Region.from_polygons(ws_polys, name="workspace")
    if workspace.is_empty:
        raise WorldError("/workspace: the workspace has no area")

    fields: dict = {}
    for fname, spec in data.get("fields", {}).items():
        fpath = f"/fields/{fname}"
        pieces = []
        for i, piece in enumerate(spec.get("pieces", [])):
            poly = _polygon_from(piece.get("polygon"), named, f"{fpath}/pieces/{i}/polygon")
            if "heading_deg" not in piece:
                raise WorldError(f"{fpath}/pieces/{i}: missing heading_deg")
            heading = math.radians(float(piece["heading_deg"]))
            if not workspace.covers_polygon(poly):
                raise WorldError(f"{fpath}/pieces/{i}: piece lies outside the workspace")
            pieces.append((poly, heading))
        for i in range(len(pieces)):
            for j in range(i + 1, len(pieces)):
                overlap = pieces[i][0].intersection(pieces[j][0])
                if overlap.area > 1e-9:
                    raise WorldError(f"{fpath}: pieces {i} and {j} overlap")
        default = math.radians(float(spec.get("default_deg", 0.0)))
        fields[fname] = PiecewiseField(pieces, default, name=fname)

    regions: dict = {}
    for rname, spec in data.get("regions", {}).items():
        rpath = f"/regions/{rname}"
        polys = [_polygon_from(item, named, f"{rpath}/polygons/{i}")
                 for i, item in enumerate(spec.get("polygons", []))]
        if not polys:
            raise WorldError(f"{rpath}: region has no polygons")
        orientation = None
        oname = spec.get("orientation")
        if oname is not None:
            if oname not in fields:
                raise WorldError(f"{rpath}/orientation: unknown field {oname!r}")
            orientation = fields[oname]
        regions[rname] = Region.from_polygons(polys, orientation, rname)

    tables = data.get("tables", {})
    if not isinstance(tables, dict):
        raise WorldError("/tables: must be an object")

    prelude = data.get("prelude", "")
    if isinstance(prelude, list):
        prelude = "\n".join(prelude) + "\n"

    return WorldModel(name, workspace, regions, fields, tables, prelude)


def load_world(path: str) -> WorldModel:
    """Load and validate a world file.  Fast point-to-cell lookup for the
    piecewise fields is provided by an STR-tree built at parse time."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise WorldError(f"cannot read world file: {err}")
    except json.JSONDecodeError as err:
        raise WorldError(f"/: not valid JSON ({err})")
    return parse_world(data, name_hint=path)


def load_bundled(name: str) -> WorldModel:
    ref = resources.files("scengen").joinpath(f"data/worlds/{name}.world.json")
    if not ref.is_file():
        raise WorldError(f"no bundled world named {name!r} "
                         f"(available: {', '.join(BUNDLED_WORLDS)})")
    data = json.loads(ref.read_text(encoding="utf-8"))
    return parse_world(data, name_hint=name)


def resolve_world(spec: str) -> WorldModel:
    """A --world argument: a bundled world name or a path to a world file."""
    if spec.endswith(".json"):
        return load_world(spec)
    return load_bundled(spec)


def gallery_path(filename: str) -> str:
    return str(resources.files("scengen").joinpath(f"data/gallery/{filename}"))


def gallery_scenarios() -> list:
    """(scenario path, world name) pairs for the bundled corpus."""
    root = resources.files("scengen").joinpath("data/gallery")
    out = []
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".scn"):
            world = "mars" if "mars" in entry.name else "tworoads"
            out.append((str(entry), world))
    return out


def benchmark_path(filename: str) -> str:
    return str(resources.files("scengen").joinpath(f"data/benchmarks/{filename}"))
