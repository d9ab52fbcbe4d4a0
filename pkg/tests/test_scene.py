"""
Tests for placement geometry, visibility and scene sampling
"""

import math

import numpy as np
import pytest

from exceptions import SceneError
from models import Asset, AssetCatalog, AssetKind, BBox, Placement, Scene, SpatialRelation
from services.scene_service import (SceneParams, bbox_of, footprint_bbox, intersection_over_minimum,
                                    label_map, place_object, position_word, relation_table,
                                    sample_scene, spatial_relation, visible_mask, visible_masks)
from services.taskgen_service import make_rng


@pytest.fixture
def squares():
    """16x16 stickers with an opaque 8x8 core"""
    assets = []
    for name in ('a', 'b', 'c'):
        pixels = np.zeros((16, 16, 4), dtype=np.uint8)
        pixels[4:12, 4:12] = (255, 0, 0, 255)
        assets.append(Asset(f"stickers/{name}.png", pixels, AssetKind.STICKER, (name,)))
    return AssetCatalog(assets)


def test_placement_normalizes_rotation():
    placement = Placement('a', (1, 2), rotation=3 * math.pi / 2)
    assert placement.rotation == pytest.approx(-math.pi / 2)
    assert Placement('a', (0, 0), rotation=math.pi).rotation == pytest.approx(math.pi)
    with pytest.raises(SceneError):
        Placement('a', (0, 0), scale=0.01)


def test_scene_rejects_duplicate_z():
    with pytest.raises(SceneError):
        Scene(10, 10, (0, 0, 0), (Placement('a', (1, 1), z=0), Placement('b', (2, 2), z=0)))


def test_scene_round_trip():
    scene = Scene(64, 32, 'backgrounds/x.png', (Placement('a', (3.5, 4), 1.5, 0.25, 2),))
    assert Scene.from_dict(scene.to_dict()) == scene


def test_bbox_of_axis_aligned(squares):
    """The box covers the opaque core, not the transparent margin"""
    placement = Placement('stickers/a.png', (50, 50))
    box = bbox_of(placement, squares.get('stickers/a.png'), (100, 100))
    assert box.to_list() == [46, 46, 54, 54]
    scene = Scene(100, 100, (0, 0, 0), (placement,))
    assert footprint_bbox(scene, squares, 0) == box


def test_bbox_of_scaled_and_clipped(squares):
    asset = squares.get('stickers/a.png')
    box = bbox_of(Placement(asset.id, (50, 50), scale=2.0), asset, (100, 100))
    assert box.to_list() == [42, 42, 58, 58]
    clipped = bbox_of(Placement(asset.id, (2, 2)), asset, (100, 100))
    assert clipped.x0 == 0 and clipped.y0 == 0
    with pytest.raises(SceneError):
        bbox_of(Placement(asset.id, (-50, -50)), asset, (100, 100))


def test_rotated_box_grows(squares):
    asset = squares.get('stickers/a.png')
    box = bbox_of(Placement(asset.id, (50, 50), rotation=math.pi / 4), asset, (100, 100))
    assert box.width > 8 and box.width <= 13


def test_visible_masks_respect_occlusion(squares):
    lower = Placement('stickers/a.png', (20, 20), z=0)
    upper = Placement('stickers/b.png', (24, 20), z=1)
    scene = Scene(40, 40, (0, 0, 0), (lower, upper))
    masks = visible_masks(scene, squares)
    assert masks[1].sum() == 64
    assert masks[0].sum() == 64 - 4 * 8
    assert not np.any(masks[0] & masks[1])
    labels = label_map(scene, squares)
    assert labels[0, 0] == -1
    assert labels[20, 25] == 1
    assert np.array_equal(visible_mask(scene, squares, 0), masks[0])
    with pytest.raises(SceneError):
        visible_mask(scene, squares, 2)


def test_visible_masks_partition_coverage(catalog):
    """Each covered pixel belongs to exactly one placement's visible mask"""
    params = SceneParams(width=128, height=128, count=(3, 6), size_range=(0.2, 0.4), overlap='allow')
    for seed in range(10):
        scene = sample_scene(make_rng(seed), catalog, params)
        masks = visible_masks(scene, catalog)
        covered = label_map(scene, catalog) >= 0
        stacked = np.stack(masks).astype(int).sum(axis=0)
        assert stacked.max() <= 1
        assert np.array_equal(stacked == 1, covered)


def test_spatial_relation():
    canvas = (100, 100)
    left = BBox(0, 40, 20, 60)
    right = BBox(70, 40, 90, 60)
    top = BBox(40, 0, 60, 20)
    assert spatial_relation(left, right, canvas) == SpatialRelation.LEFT_OF
    assert spatial_relation(right, left, canvas) == SpatialRelation.RIGHT_OF
    assert spatial_relation(top, BBox(40, 70, 60, 90), canvas) == SpatialRelation.ABOVE
    assert spatial_relation(left, BBox(5, 45, 25, 65), canvas) == SpatialRelation.OVERLAPPING
    assert spatial_relation(BBox(0, 0, 10, 10), BBox(12, 2, 22, 12), (1000, 1000)) == SpatialRelation.NEAR


def test_relation_inverse_is_consistent():
    canvas = (200, 100)
    boxes = [BBox(0, 0, 20, 20), BBox(150, 10, 170, 30), BBox(60, 70, 90, 95), BBox(10, 5, 30, 25)]
    for a in boxes:
        for b in boxes:
            if a is b:
                continue
            assert spatial_relation(b, a, canvas) == spatial_relation(a, b, canvas).inverse()


def test_sample_scene_is_deterministic(catalog):
    params = SceneParams(width=128, height=128, count=(2, 4), size_range=(0.15, 0.25))
    first = sample_scene(make_rng(11), catalog, params)
    second = sample_scene(make_rng(11), catalog, params)
    assert first == second
    assert 2 <= len(first.placements) <= 4


def test_sample_scene_no_overlap(catalog):
    params = SceneParams(width=128, height=128, count=(3, 3), size_range=(0.15, 0.2), overlap='none')
    for seed in range(5):
        scene = sample_scene(make_rng(seed), catalog, params)
        boxes = [bbox_of(p, catalog.get(p.asset_id), scene.size) for p in scene.placements]
        for i in range(len(boxes)):
            assert 0 <= boxes[i].x0 and boxes[i].x1 <= 128
            for j in range(i + 1, len(boxes)):
                assert intersection_over_minimum(boxes[i], boxes[j]) <= 0.05


def test_place_object_crowded(squares):
    params = SceneParams(width=64, height=64, max_attempts=20, rotation_range=(0.0, 0.0))
    with pytest.raises(SceneError, match='crowded'):
        place_object(make_rng(0), squares, 'stickers/a.png', params, 0, [BBox(0, 0, 64, 64)])


def test_scene_params_validation():
    with pytest.raises(SceneError):
        SceneParams(overlap='sometimes')
    with pytest.raises(SceneError):
        SceneParams(count=(3, 1))


def test_position_word():
    canvas = (90, 90)
    assert position_word(BBox(40, 40, 50, 50), canvas) == 'in the center'
    assert position_word(BBox(0, 0, 10, 10), canvas) == 'in the top left'
    assert position_word(BBox(80, 40, 90, 50), canvas) == 'on the right'
    assert position_word(BBox(40, 80, 50, 90), canvas) == 'at the bottom'


def test_relation_table(squares):
    scene = Scene(100, 100, (0, 0, 0), (
        Placement('stickers/a.png', (20, 50), z=0),
        Placement('stickers/b.png', (80, 50), z=1),
    ))
    assert relation_table(scene, squares, [1, 0]) == {(0, 1): SpatialRelation.LEFT_OF}


if __name__ == '__main__':
    pytest.main([__file__])
