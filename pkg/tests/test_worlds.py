"""World-file loading, validation diagnostics, bundled worlds."""

import math

import pytest

from scengen.errors import WorldError
from scengen.geometry import Vector
from scengen.worlds import BUNDLED_WORLDS, load_bundled, parse_world

from conftest import rect


def base_world(**overrides):
    data = {
        "name": "t",
        "polygons": {"left": rect(-10, -10, 0, 10), "right": rect(0, -10, 10, 10)},
        "workspace": [rect(-10, -10, 10, 10)],
        "regions": {"road": {"polygons": ["left", "right"], "orientation": "dir"}},
        "fields": {"dir": {"default_deg": 0, "pieces": [
            {"polygon": "left", "heading_deg": 0},
            {"polygon": "right", "heading_deg": 180},
        ]}},
        "tables": {"speeds": {"slow": 10, "fast": 20}},
        "prelude": ["class Box:", "    width: 2"],
    }
    data.update(overrides)
    return data


class TestParsing:
    def test_valid_world(self):
        world = parse_world(base_world())
        assert world.workspace.area == pytest.approx(400.0)
        assert world.regions["road"].orientation is world.fields["dir"]
        assert world.fields["dir"].value_at(Vector(-5, 0)) == 0.0
        assert world.fields["dir"].value_at(Vector(5, 0)) == pytest.approx(math.pi)
        assert world.tables["speeds"]["fast"] == 20
        assert "class Box:" in world.prelude

    def test_bindings_expose_everything(self):
        world = parse_world(base_world())
        names = set(world.bindings())
        assert {"workspace", "road", "dir", "speeds"} <= names

    def test_empty_workspace_rejected(self):
        with pytest.raises(WorldError, match="/workspace"):
            parse_world(base_world(workspace=[]))

    def test_field_piece_outside_workspace(self):
        data = base_world()
        data["fields"]["dir"]["pieces"][0]["polygon"] = rect(-50, -50, -20, -20)
        with pytest.raises(WorldError, match="/fields/dir/pieces/0"):
            parse_world(data)

    def test_overlapping_field_pieces(self):
        data = base_world()
        data["fields"]["dir"]["pieces"][1]["polygon"] = rect(-5, -10, 10, 10)
        with pytest.raises(WorldError, match="overlap"):
            parse_world(data)

    def test_unknown_polygon_reference(self):
        data = base_world()
        data["regions"]["road"]["polygons"] = ["nowhere"]
        with pytest.raises(WorldError, match="unknown polygon"):
            parse_world(data)

    def test_unknown_orientation_field(self):
        data = base_world()
        data["regions"]["road"]["orientation"] = "ghost"
        with pytest.raises(WorldError, match="/regions/road/orientation"):
            parse_world(data)

    def test_degenerate_polygon(self):
        data = base_world()
        data["workspace"] = [[[0, 0], [1, 0], [2, 0]]]
        with pytest.raises(WorldError, match="invalid|area"):
            parse_world(data)

    def test_bad_vertices(self):
        data = base_world(workspace=[[[0, 0], [1], [1, 1]]])
        with pytest.raises(WorldError):
            parse_world(data)


class TestBundled:
    @pytest.mark.parametrize("name", BUNDLED_WORLDS)
    def test_loads(self, name):
        world = load_bundled(name)
        assert not world.workspace.is_empty

    def test_unknown_bundled(self):
        with pytest.raises(WorldError, match="no bundled world"):
            load_bundled("atlantis")

    def test_tworoads_shape(self, tworoads):
        road = tworoads.regions["road"]
        curb = tworoads.regions["curb"]
        field = tworoads.fields["roadDirection"]
        assert road.orientation is field
        assert road.contains_point(Vector(3, 50))
        assert not road.contains_point(Vector(50, 50))
        assert curb.contains_point(Vector(6.15, 50))
        # northbound lane, southbound lane, and the curbs follow their lanes
        assert field.value_at(Vector(3, 50)) == 0.0
        assert field.value_at(Vector(-3, 50)) == pytest.approx(math.pi)
        assert field.value_at(Vector(6.15, 50)) == 0.0
        assert field.value_at(Vector(50, -3)) == pytest.approx(-math.pi / 2)

    def test_tworoads_tables(self, tworoads):
        models = tworoads.tables["carModels"]
        weights = tworoads.tables["carModelWeights"]
        assert set(weights) <= set(models)
        assert all(m["width"] > 0 and m["height"] > 0 for m in models.values())

    def test_mars_is_flat(self, mars):
        assert mars.fields == {}
        assert mars.regions["ground"].orientation is None
