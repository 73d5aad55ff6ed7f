from __future__ import annotations

import json

import pytest

from gridnav.scene import (
    ALL_SCENE_TYPES,
    SCENE_TAXONOMY,
    GridMap,
    ObjectInstance,
    SceneError,
    house_from_dict,
    house_to_dict,
    load_house,
    save_house,
)

from conftest import make_house


def minimal_house_dict():
    return {
        "id": "h1",
        "scene_type": "bakery",
        "scene_category": "Store",
        "grid": {"cell_size_m": 0.25, "width": 1, "height": 1,
                 "origin": [0.0, 0.0], "reachable": [[0, 0]]},
        "rooms": [],
        "objects": [{"id": "o1", "category": "bread basket",
                     "position": [0.0, 0.0], "height_m": 1.0, "opaque": False}],
    }


class TestTaxonomy:
    def test_81_scene_types_in_5_categories(self):
        assert len(ALL_SCENE_TYPES) == 81
        assert len(set(ALL_SCENE_TYPES)) == 81
        assert [len(v) for v in SCENE_TAXONOMY.values()] == [16, 21, 9, 14, 21]

    def test_bakery_is_a_store(self):
        assert "bakery" in SCENE_TAXONOMY["Store"]


class TestHouseLoading:
    def test_minimal_house(self, tmp_path):
        path = tmp_path / "h.json"
        path.write_text(json.dumps(minimal_house_dict()))
        house = load_house(path)
        assert len(house.grid.reachable) == 1
        assert house.objects[0].category == "bread basket"

    def test_bakery_store_accepted(self):
        house = house_from_dict(minimal_house_dict())
        assert house.scene_type == "bakery"
        assert house.scene_category == "Store"

    def test_object_outside_bounds_names_the_object(self):
        data = minimal_house_dict()
        data["objects"][0]["position"] = [5.0, 0.0]
        with pytest.raises(SceneError) as exc:
            house_from_dict(data)
        assert "o1" in str(exc.value)
        assert "objects[0]" in str(exc.value)

    def test_unknown_scene_type(self):
        data = minimal_house_dict()
        data["scene_type"] = "spaceship"
        with pytest.raises(SceneError, match="unknown scene type"):
            house_from_dict(data)

    def test_scene_type_category_mismatch(self):
        data = minimal_house_dict()
        data["scene_category"] = "Home"
        with pytest.raises(SceneError, match="belongs to"):
            house_from_dict(data)

    def test_duplicate_object_id(self):
        data = minimal_house_dict()
        data["objects"].append(dict(data["objects"][0]))
        with pytest.raises(SceneError, match="duplicate object id"):
            house_from_dict(data)

    def test_missing_field_reports_path(self):
        data = minimal_house_dict()
        del data["grid"]["width"]
        with pytest.raises(SceneError, match="grid.width"):
            house_from_dict(data)

    def test_origin_must_be_quarter_aligned(self):
        data = minimal_house_dict()
        data["grid"]["origin"] = [0.1, 0.0]
        with pytest.raises(SceneError, match="multiple of 0.25"):
            house_from_dict(data)

    def test_wrong_cell_size_rejected(self):
        data = minimal_house_dict()
        data["grid"]["cell_size_m"] = 0.5
        with pytest.raises(SceneError, match="cell_size_m"):
            house_from_dict(data)


class TestRoundTrip:
    def test_save_load_semantic_equality(self, tmp_path):
        house = house_from_dict(minimal_house_dict())
        path = tmp_path / "h.json"
        save_house(house, path)
        assert load_house(path) == house

    def test_dict_round_trip_is_canonical(self):
        data = minimal_house_dict()
        house = house_from_dict(data)
        again = house_from_dict(house_to_dict(house))
        assert again == house


class TestGridGeometry:
    def test_origin_zero_cell_zero(self):
        grid = GridMap(1, 1, frozenset({(0, 0)}))
        assert grid.cell_to_world((0, 0)) == (0.0, 0.0)

    def test_quarter_multiples(self):
        grid = GridMap(3, 6, frozenset({(2, 5)}))
        assert grid.cell_to_world((2, 5)) == (0.5, 1.25)

    def test_offset_origin(self):
        grid = GridMap(5, 1, frozenset({(4, 0)}), origin_q=(-4, -4))
        assert grid.cell_to_world((4, 0)) == (0.0, -1.0)

    def test_out_of_bounds_cell(self):
        grid = GridMap(2, 2, frozenset({(0, 0)}))
        with pytest.raises(SceneError):
            grid.cell_to_world((2, 0))

    def test_world_coordinates_are_exact(self):
        # Quarter-meter arithmetic must not drift: every center times 4 is
        # an exact integer.
        grid = GridMap(40, 40, frozenset({(c, r) for c in range(40) for r in range(40)}),
                       origin_q=(-7, 13))
        for cell in [(0, 0), (13, 27), (39, 39)]:
            x, y = grid.cell_to_world(cell)
            assert x * 4 == int(x * 4)
            assert y * 4 == int(y * 4)

    def test_containing_cell_rounds_to_nearest(self):
        grid = GridMap(10, 10, frozenset({(0, 0)}))
        assert grid.containing_cell((1.13, 2.32)) == (5, 9)
        assert grid.containing_cell((0.0, 0.0)) == (0, 0)


class TestOpacity:
    def test_reachable_cells_never_block(self):
        blocker = ObjectInstance(id="b", category="crate", position=(0.25, 0.0),
                                 height_m=1.0, opaque=True)
        house = make_house({(0, 0), (1, 0), (2, 0)}, 3, 1, [blocker])
        assert house.opaque_cells == {}

    def test_opaque_object_on_unreachable_cell_blocks(self):
        blocker = ObjectInstance(id="b", category="crate", position=(0.25, 0.0),
                                 height_m=1.0, opaque=True)
        house = make_house({(0, 0), (2, 0)}, 3, 1, [blocker])
        assert house.opaque_cells == {(1, 0): ("b",)}
