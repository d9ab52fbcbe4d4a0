"""
Render service: affine asset transforms and back-to-front alpha compositing
"""

import math
from typing import Tuple

import numpy as np
from PIL import Image

from exceptions import AssetError, RenderError
from models import MAX_SCALE, MIN_SCALE, Asset, AssetCatalog, Placement, Scene

MAX_RASTER_SIDE = 8192

# geometry is rounded to this many decimals before floor/ceil so that
# cos(pi/2) style residue never shifts a box edge by a whole pixel
_GEOMETRY_DECIMALS = 6


def quantize(values: np.ndarray) -> np.ndarray:
    """Round half away from zero to uint8 (inputs are non-negative)"""
    return np.clip(np.floor(np.asarray(values, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def transformed_size(width: int, height: int, scale: float, rotation: float) -> Tuple[int, int]:
    """Size of the raster holding a w x h asset after scale and rotation"""
    c, s = abs(math.cos(rotation)), abs(math.sin(rotation))
    out_w = scale * (c * width + s * height)
    out_h = scale * (s * width + c * height)
    out_w = max(1, math.ceil(round(out_w, _GEOMETRY_DECIMALS)))
    out_h = max(1, math.ceil(round(out_h, _GEOMETRY_DECIMALS)))
    return out_w, out_h


def transform_asset(asset: Asset, scale: float, rotation: float) -> np.ndarray:
    """Bilinear-resampled RGBA raster of the rotated/scaled asset.

    The raster is sized to the transformed bounding box of the whole asset and
    the asset center maps to the raster center. Sampling clamps to the edge;
    output pixels whose center falls outside the source rectangle get alpha 0.
    Interpolation runs on premultiplied color.
    """
    if not (MIN_SCALE <= scale <= MAX_SCALE):
        raise RenderError(f"scale {scale} outside [{MIN_SCALE}, {MAX_SCALE}]")
    if scale == 1.0 and rotation == 0.0:
        return asset.pixels.copy()

    src_h, src_w = asset.height, asset.width
    out_w, out_h = transformed_size(src_w, src_h, scale, rotation)
    if out_w > MAX_RASTER_SIDE or out_h > MAX_RASTER_SIDE:
        raise RenderError(f"transformed raster {out_w}x{out_h} exceeds {MAX_RASTER_SIDE} px")

    cos_t, sin_t = math.cos(rotation), math.sin(rotation)
    ys, xs = np.mgrid[0:out_h, 0:out_w].astype(np.float64)
    dx = xs + 0.5 - out_w / 2.0
    dy = ys + 0.5 - out_h / 2.0
    # inverse rotation, then inverse scale, back into asset coordinates
    qx = src_w / 2.0 + (cos_t * dx + sin_t * dy) / scale
    qy = src_h / 2.0 + (-sin_t * dx + cos_t * dy) / scale
    qx = np.round(qx, 9)
    qy = np.round(qy, 9)
    inside = (qx >= 0) & (qx <= src_w) & (qy >= 0) & (qy <= src_h)

    u = np.clip(qx - 0.5, 0, src_w - 1)
    v = np.clip(qy - 0.5, 0, src_h - 1)
    x0 = np.floor(u).astype(np.intp)
    y0 = np.floor(v).astype(np.intp)
    x1 = np.minimum(x0 + 1, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    fx = (u - x0)[..., None]
    fy = (v - y0)[..., None]

    src = asset.pixels.astype(np.float64)
    alpha = src[:, :, 3:4]
    premult = np.concatenate([src[:, :, :3] * alpha / 255.0, alpha], axis=2)

    top = premult[y0, x0] * (1.0 - fx) + premult[y0, x1] * fx
    bottom = premult[y1, x0] * (1.0 - fx) + premult[y1, x1] * fx
    sampled = top * (1.0 - fy) + bottom * fy

    out_alpha = np.where(inside, sampled[:, :, 3], 0.0)
    safe = np.where(out_alpha > 0, out_alpha, 1.0)[..., None]
    out_rgb = np.where(out_alpha[..., None] > 0, sampled[:, :, :3] * 255.0 / safe, 0.0)

    out = np.empty((out_h, out_w, 4), dtype=np.uint8)
    out[:, :, :3] = quantize(out_rgb)
    out[:, :, 3] = quantize(out_alpha)
    out[out[:, :, 3] == 0, :3] = 0
    return out


def placement_offset(placement: Placement, raster_size: Tuple[int, int]) -> Tuple[int, int]:
    """Integer canvas offset of a transformed raster's top-left corner"""
    out_w, out_h = raster_size
    ox = math.floor(placement.center[0] - out_w / 2.0 + 0.5)
    oy = math.floor(placement.center[1] - out_h / 2.0 + 0.5)
    return ox, oy


def rasterize_placement(placement: Placement, asset: Asset) -> Tuple[np.ndarray, Tuple[int, int]]:
    """Transformed RGBA raster of a placement plus its canvas offset"""
    raster = transform_asset(asset, placement.scale, placement.rotation)
    return raster, placement_offset(placement, (raster.shape[1], raster.shape[0]))


def paste_window(offset: Tuple[int, int], raster_shape: Tuple[int, int],
                 canvas_size: Tuple[int, int]):
    """Canvas and raster slices of the visible part of a pasted raster, or None"""
    ox, oy = offset
    rh, rw = raster_shape
    width, height = canvas_size
    cx0, cy0 = max(ox, 0), max(oy, 0)
    cx1, cy1 = min(ox + rw, width), min(oy + rh, height)
    if cx0 >= cx1 or cy0 >= cy1:
        return None
    canvas_slice = (slice(cy0, cy1), slice(cx0, cx1))
    raster_slice = (slice(cy0 - oy, cy1 - oy), slice(cx0 - ox, cx1 - ox))
    return canvas_slice, raster_slice


def render_background(scene: Scene, catalog: AssetCatalog) -> np.ndarray:
    """Background layer: solid color, or the background asset resized to the canvas"""
    if scene.is_blank:
        canvas = np.empty((scene.height, scene.width, 3), dtype=np.uint8)
        canvas[:, :] = np.asarray(scene.background, dtype=np.uint8)
        return canvas

    asset = _resolve(catalog, scene.background)
    rgb = asset.pixels[:, :, :3]
    if (asset.width, asset.height) == (scene.width, scene.height):
        return rgb.copy()
    resized = Image.fromarray(rgb, mode='RGB').resize((scene.width, scene.height), Image.BILINEAR)
    return np.asarray(resized, dtype=np.uint8).copy()


def alpha_over(canvas: np.ndarray, raster: np.ndarray, offset: Tuple[int, int]) -> None:
    """In-place 'over' of an RGBA raster onto an RGB uint8 canvas, 8-bit rounding"""
    window = paste_window(offset, raster.shape[:2], (canvas.shape[1], canvas.shape[0]))
    if window is None:
        return
    canvas_slice, raster_slice = window
    layer = raster[raster_slice].astype(np.float64)
    alpha = layer[:, :, 3:4] / 255.0
    below = canvas[canvas_slice].astype(np.float64)
    canvas[canvas_slice] = quantize(layer[:, :, :3] * alpha + below * (1.0 - alpha))


def composite(scene: Scene, catalog: AssetCatalog) -> np.ndarray:
    """Render a scene: background first, then placements alpha-over in ascending z"""
    canvas = render_background(scene, catalog)
    for placement in scene.placements:
        raster, offset = rasterize_placement(placement, _resolve(catalog, placement.asset_id))
        alpha_over(canvas, raster, offset)
    return canvas


def _resolve(catalog: AssetCatalog, asset_id: str) -> Asset:
    try:
        return catalog.get(asset_id)
    except AssetError as e:
        raise RenderError(str(e)) from e
