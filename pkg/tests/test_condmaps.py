"""
Tests for condition maps, editing masks and target drawing
"""

import numpy as np
import pytest
from scipy import ndimage

from exceptions import RenderError
from models import Asset, AssetCatalog, AssetKind, BBox, MaskKind, Placement, Scene
from services.condmap_service import (SEG_PALETTE, MaskParams, canny, color_highlight, depth_map,
                                      draw_bbox, frame_mask, gen_mask, seg_map, smear_strokes)
from services.taskgen_service import make_rng


@pytest.fixture
def two_layers():
    pixels = np.zeros((16, 16, 4), dtype=np.uint8)
    pixels[4:12, 4:12] = (0, 0, 255, 255)
    asset = Asset('stickers/sq.png', pixels, AssetKind.STICKER, ('square',))
    scene = Scene(40, 40, (255, 255, 255), (
        Placement(asset.id, (15, 15), z=0),
        Placement(asset.id, (19, 15), z=1),
    ))
    return scene, AssetCatalog([asset])


def test_canny_flat_image_has_no_edges():
    assert not canny(np.full((32, 32, 3), 90, dtype=np.uint8)).any()


def test_canny_finds_square_outline():
    image = np.full((64, 64, 3), 255, dtype=np.uint8)
    image[20:44, 20:44] = 0
    edges = canny(image)
    assert edges.dtype == np.uint8
    assert set(np.unique(edges)) <= {0, 255}
    assert edges.any()
    assert not edges[28:36, 28:36].any()
    assert not edges[:10, :10].any()
    rows, cols = np.nonzero(edges)
    assert rows.min() >= 17 and rows.max() <= 46
    assert cols.min() >= 17 and cols.max() <= 46


def test_canny_ignores_faint_contrast():
    """Thresholds are absolute, so a one-level step or sensor noise is not an edge"""
    step = np.full((64, 64), 100, dtype=np.uint8)
    step[:, 32:] = 101
    assert not canny(step).any()

    noise = np.random.default_rng(7).integers(-1, 2, size=(64, 64))
    assert not canny((128 + noise).astype(np.uint8)).any()


def test_canny_thresholds():
    with pytest.raises(ValueError):
        canny(np.zeros((8, 8), dtype=np.uint8), low=150, high=50)


def test_depth_map_ranks_layers(two_layers):
    scene, catalog = two_layers
    depth = depth_map(scene, catalog)
    assert depth[0, 0] == 0
    assert depth[15, 12] == 128
    assert depth[15, 20] == 255
    empty = Scene(8, 8, (0, 0, 0))
    assert not depth_map(empty, catalog).any()


def test_seg_map_palette(two_layers):
    scene, catalog = two_layers
    seg = seg_map(scene, catalog)
    assert seg.shape == (40, 40, 3)
    assert tuple(seg[0, 0]) == SEG_PALETTE[0]
    assert tuple(seg[15, 12]) == SEG_PALETTE[1]
    assert tuple(seg[15, 20]) == SEG_PALETTE[2]
    with pytest.raises(RenderError):
        seg_map(scene, catalog, palette=SEG_PALETTE[:2])


@pytest.mark.parametrize('kind', [MaskKind.SMEAR, MaskKind.BLOCK])
def test_random_masks_respect_fraction(kind):
    params = MaskParams(fraction=(0.05, 0.5))
    for seed in range(1000):
        mask = gen_mask(kind, make_rng(seed), (96, 80), params)
        assert mask.shape == (80, 96)
        assert set(np.unique(mask)) <= {0, 255}
        assert 0.05 <= (mask > 0).mean() <= 0.5
    first = gen_mask(kind, make_rng(3), (96, 80), params)
    assert np.array_equal(first, gen_mask(kind, make_rng(3), (96, 80), params))


def test_impossible_fraction_uses_fallback():
    params = MaskParams(fraction=(0.99, 1.0), max_attempts=3, blocks=(1, 1), block_area=(0.01, 0.02))
    mask = gen_mask(MaskKind.BLOCK, make_rng(0), (100, 100), params)
    assert 0.08 <= (mask > 0).mean() <= 0.12


def test_smear_strokes_are_connected():
    for stroke in smear_strokes(make_rng(5), (128, 128), MaskParams(strokes=(3, 3))):
        _, components = ndimage.label(stroke)
        assert components == 1


def test_edge_mask_bands():
    mask = gen_mask(MaskKind.EDGE, make_rng(0), (128, 64), MaskParams(bands={'left': 0.25, 'bottom': 0.5}))
    assert np.all(mask[:, :32] == 255)
    assert np.all(mask[32:, :] == 255)
    assert np.all(mask[:32, 32:] == 0)

    random_edges = gen_mask(MaskKind.EDGE, make_rng(1), (128, 128))
    border = np.concatenate([random_edges[0], random_edges[-1], random_edges[:, 0], random_edges[:, -1]])
    assert (border == 255).any()


def test_edge_mask_never_covers_canvas():
    """Opposite bands are trimmed so some pixel always stays unmasked"""
    forced = MaskParams(bands={side: 0.6 for side in ('left', 'right', 'top', 'bottom')})
    mask = gen_mask(MaskKind.EDGE, make_rng(0), (128, 96), forced)
    assert (mask == 0).sum() == 1
    assert mask[58, 77] == 0
    assert mask[:, :77].all() and mask[:58, :].all()

    widest = MaskParams(edge_sides=(4, 4), edge_band=(0.4, 0.4))
    for seed in range(50):
        mask = gen_mask(MaskKind.EDGE, make_rng(seed), (64, 64), widest)
        assert (mask == 0).any()
    for seed in range(200):
        assert (gen_mask(MaskKind.EDGE, make_rng(seed), (80, 64)) == 0).any()


def test_forced_block_rects():
    mask = gen_mask(MaskKind.BLOCK, make_rng(0), (64, 64), MaskParams(rects=[(10, 20, 30, 40)]))
    assert (mask > 0).sum() == 400
    assert mask[20, 10] == 255 and mask[40, 30] == 0


def test_mask_size_minimum():
    with pytest.raises(ValueError):
        gen_mask(MaskKind.SMEAR, make_rng(0), (32, 128))


def test_draw_bbox_matches_frame_mask():
    image = np.full((50, 60, 3), 7, dtype=np.uint8)
    box = BBox(10, 5, 40, 30)
    out = draw_bbox(image, box, (255, 0, 0), thickness=3)
    changed = np.any(out != image, axis=-1)
    assert np.array_equal(changed, frame_mask((50, 60), box, 3))
    assert out[5, 10].tolist() == [255, 0, 0]
    assert out[15, 20].tolist() == [7, 7, 7]
    assert image[5, 10].tolist() == [7, 7, 7]
    with pytest.raises(RenderError):
        draw_bbox(image, BBox(70, 70, 80, 80), (255, 0, 0))


def test_color_highlight():
    image = np.zeros((10, 10, 3), dtype=np.uint8)
    mask = np.zeros((10, 10), dtype=bool)
    mask[2:4, 2:4] = True
    out = color_highlight(image, mask, (255, 0, 0), 0.6)
    assert out[2, 2].tolist() == [153, 0, 0]
    assert out[5, 5].tolist() == [0, 0, 0]
    assert np.count_nonzero(np.any(out != image, axis=-1)) == 4


if __name__ == '__main__':
    pytest.main([__file__])
