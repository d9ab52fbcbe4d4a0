"""
Tests for affine asset transforms and alpha compositing
"""

import math

import numpy as np
import pytest

from exceptions import RenderError
from models import Asset, AssetCatalog, AssetKind, Placement, Scene
from services.render_service import (alpha_over, composite, placement_offset, quantize,
                                     render_background, transform_asset, transformed_size)


def _asset(asset_id='stickers/block.png', width=12, height=8, color=(10, 20, 30)):
    pixels = np.zeros((height, width, 4), dtype=np.uint8)
    pixels[1:-1, 1:-1, :3] = color
    pixels[1:-1, 1:-1, 3] = 255
    pixels[2, 3, :3] = (200, 100, 50)
    return Asset(asset_id, pixels, AssetKind.STICKER, ('block',))


def test_quantize_rounds_half_up():
    assert quantize([0.5, 1.49, 254.5, 300.0, -3.0]).tolist() == [1, 1, 255, 255, 0]


def test_transformed_size():
    assert transformed_size(10, 20, 1.0, 0.0) == (10, 20)
    assert transformed_size(10, 20, 1.0, math.pi / 2) == (20, 10)
    assert transformed_size(10, 20, 0.5, 0.0) == (5, 10)
    assert transformed_size(10, 10, 1.0, math.pi / 4) == (15, 15)


def test_identity_transform_is_exact():
    asset = _asset()
    out = transform_asset(asset, 1.0, 0.0)
    assert np.array_equal(out, asset.pixels)
    assert out is not asset.pixels


def test_quarter_turn_is_a_pixel_rotation():
    """A 90 degree turn at unit scale permutes pixels without resampling"""
    asset = _asset()
    out = transform_asset(asset, 1.0, math.pi / 2)
    assert np.array_equal(out, np.rot90(asset.pixels, k=-1))


def test_upscale_keeps_color():
    """Interpolation on premultiplied color keeps flat regions flat"""
    asset = _asset(width=20, height=20)
    out = transform_asset(asset, 2.0, 0.0)
    assert out.shape == (40, 40, 4)
    opaque = out[:, :, 3] == 255
    assert opaque.any()
    center = out[30, 30]
    assert tuple(center) == (10, 20, 30, 255)
    assert np.all(out[out[:, :, 3] == 0, :3] == 0)


def test_half_turn_twice_is_identity():
    asset = _asset()
    assert transformed_size(12, 8, 1.0, math.pi) == (12, 8)
    once = transform_asset(asset, 1.0, math.pi)
    twice = transform_asset(Asset(asset.id, once, AssetKind.STICKER), 1.0, math.pi)
    assert twice.shape == asset.pixels.shape
    assert np.abs(twice.astype(int) - asset.pixels.astype(int)).max() <= 1


def test_double_scale_quadruples_area():
    """Opaque coverage grows with the square of the scale"""
    asset = _asset(width=16, height=16)
    out = transform_asset(asset, 2.0, 0.0)
    before = np.count_nonzero(asset.alpha >= 128)
    after = np.count_nonzero(out[:, :, 3] >= 128)
    assert after / before == pytest.approx(4.0, rel=0.05)


def test_transform_rejects_bad_scale():
    with pytest.raises(RenderError):
        transform_asset(_asset(), 5.0, 0.0)


def test_placement_offset():
    placement = Placement('a', (10.5, 10.5))
    assert placement_offset(placement, (5, 5)) == (8, 8)
    assert placement_offset(Placement('a', (10.0, 10.0)), (5, 5)) == (8, 8)
    assert placement_offset(Placement('a', (10.0, 10.0)), (4, 4)) == (8, 8)


def test_alpha_over_blends_and_clips():
    canvas = np.zeros((4, 4, 3), dtype=np.uint8)
    raster = np.zeros((2, 2, 4), dtype=np.uint8)
    raster[:, :] = (255, 255, 255, 128)
    alpha_over(canvas, raster, (3, 3))
    assert canvas[3, 3].tolist() == [128, 128, 128]
    assert canvas[:3].sum() == 0

    alpha_over(canvas, raster, (10, 10))
    assert canvas[3, 3].tolist() == [128, 128, 128]


def test_composite_z_order():
    """Higher z is painted last regardless of placement order"""
    red = _asset('stickers/red.png', 10, 10, (255, 0, 0))
    blue = _asset('stickers/blue.png', 10, 10, (0, 0, 255))
    catalog = AssetCatalog([red, blue])
    scene = Scene(32, 32, (0, 0, 0), (
        Placement('stickers/blue.png', (16, 16), z=1),
        Placement('stickers/red.png', (16, 16), z=0),
    ))
    image = composite(scene, catalog)
    assert image.shape == (32, 32, 3)
    assert image[16, 16].tolist() == [0, 0, 255]
    assert image[0, 0].tolist() == [0, 0, 0]


def test_composite_partially_off_canvas():
    asset = _asset(width=10, height=10, color=(0, 255, 0))
    catalog = AssetCatalog([asset])
    scene = Scene(20, 20, (255, 255, 255), (Placement(asset.id, (0.0, 0.0)),))
    image = composite(scene, catalog)
    assert image[2, 2].tolist() == [0, 255, 0]
    assert image[10, 10].tolist() == [255, 255, 255]


def test_render_background_resizes(catalog):
    scene = Scene(64, 48, 'backgrounds/checker.png')
    image = render_background(scene, catalog)
    assert image.shape == (48, 64, 3)
    assert image.dtype == np.uint8


def test_composite_unknown_asset():
    scene = Scene(20, 20, (0, 0, 0), (Placement('stickers/missing.png', (5, 5)),))
    with pytest.raises(RenderError):
        composite(scene, AssetCatalog())


if __name__ == '__main__':
    pytest.main([__file__])
