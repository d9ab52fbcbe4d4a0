"""
Condition maps (canny, layer depth, segmentation colors), editing masks and
detection / segmentation target drawing
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from exceptions import RenderError
from models import RGB, AssetCatalog, BBox, MaskKind, Scene
from services.render_service import quantize
from services.scene_service import label_map

CANNY_LOW = 50.0
CANNY_HIGH = 150.0

# index 0 is the background
SEG_PALETTE: Tuple[RGB, ...] = (
    (0, 0, 0), (230, 25, 75), (60, 180, 75), (255, 225, 25),
    (0, 130, 200), (245, 130, 48), (145, 30, 180), (70, 240, 240),
    (240, 50, 230), (210, 245, 60), (250, 190, 212), (0, 128, 128),
    (220, 190, 255), (170, 110, 40), (255, 250, 200), (128, 0, 0),
    (170, 255, 195), (128, 128, 0), (255, 215, 180), (0, 0, 128),
    (128, 128, 128), (255, 255, 255), (255, 0, 0), (0, 255, 0),
    (0, 0, 255), (255, 0, 255), (0, 255, 255), (255, 128, 0),
    (128, 0, 255), (0, 128, 64), (192, 192, 0), (64, 64, 64),
)

_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


def grayscale(image: np.ndarray) -> np.ndarray:
    if image.ndim == 2:
        return image.astype(np.float64)
    rgb = image[:, :, :3].astype(np.float64)
    return 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]


def gaussian_kernel(size: int = 5, sigma: float = 1.4) -> np.ndarray:
    half = size // 2
    y, x = np.mgrid[-half:half + 1, -half:half + 1]
    kernel = np.exp(-(x ** 2 + y ** 2) / (2.0 * sigma ** 2))
    return kernel / kernel.sum()


def _non_max_suppression(magnitude: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Keep pixels strictly above the backward neighbour and >= the forward one"""
    height, width = magnitude.shape
    angle = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    padded = np.pad(magnitude, 1)

    def neighbour(di, dj):
        return padded[1 + di:1 + di + height, 1 + dj:1 + dj + width]

    directions = [
        ((angle < 22.5) | (angle >= 157.5), (0, -1), (0, 1)),
        ((angle >= 22.5) & (angle < 67.5), (-1, -1), (1, 1)),
        ((angle >= 67.5) & (angle < 112.5), (-1, 0), (1, 0)),
        ((angle >= 112.5) & (angle < 157.5), (-1, 1), (1, -1)),
    ]
    keep = np.zeros_like(magnitude, dtype=bool)
    for selected, before, after in directions:
        local_max = (magnitude > neighbour(*before)) & (magnitude >= neighbour(*after))
        keep |= selected & local_max
    return np.where(keep, magnitude, 0.0)


def canny(image: np.ndarray, low: float = CANNY_LOW, high: float = CANNY_HIGH) -> np.ndarray:
    """Canny edge map (uint8, edges = 255).

    Grayscale, 5x5 Gaussian (sigma 1.4), Sobel, non-maximum suppression and
    double-threshold hysteresis. Thresholds apply to the unnormalized Sobel
    magnitude of 0-255 intensities, so they do not depend on image contrast.
    """
    if not 0 < low < high:
        raise ValueError(f"canny thresholds must satisfy 0 < low < high, got {low}, {high}")

    smoothed = ndimage.convolve(grayscale(image), gaussian_kernel(), mode='nearest')
    gx = ndimage.correlate(smoothed, _SOBEL_X, mode='nearest')
    gy = ndimage.correlate(smoothed, _SOBEL_Y, mode='nearest')
    magnitude = np.hypot(gx, gy)

    thin = _non_max_suppression(magnitude, gx, gy)
    strong = thin >= high
    weak = thin >= low
    labels, _ = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    connected = np.unique(labels[strong])
    edges = np.isin(labels, connected[connected > 0])
    return np.where(edges, 255, 0).astype(np.uint8)


def depth_map(scene: Scene, catalog: AssetCatalog) -> np.ndarray:
    """Layer-rank depth: background 0, topmost of L layers 255, linear in between"""
    layers = len(scene.placements)
    if layers == 0:
        return np.zeros((scene.height, scene.width), dtype=np.uint8)
    ranks = label_map(scene, catalog) + 1
    return quantize(255.0 * ranks / layers)


def seg_map(scene: Scene, catalog: AssetCatalog,
            palette: Sequence[RGB] = SEG_PALETTE) -> np.ndarray:
    """Color every pixel by the palette index of its topmost visible layer"""
    if len(palette) < len(scene.placements) + 1:
        raise RenderError(
            f"palette of {len(palette)} colors cannot label {len(scene.placements)} placements")
    colors = np.asarray(palette[:len(scene.placements) + 1], dtype=np.uint8)
    return colors[label_map(scene, catalog) + 1]


@dataclass
class MaskParams:
    strokes: Tuple[int, int] = (1, 5)
    stroke_radius: Tuple[float, float] = (0.02, 0.08)
    stroke_steps: Tuple[int, int] = (20, 200)
    blocks: Tuple[int, int] = (1, 4)
    block_area: Tuple[float, float] = (0.02, 0.25)
    edge_sides: Tuple[int, int] = (1, 4)
    edge_band: Tuple[float, float] = (0.10, 0.40)
    fraction: Tuple[float, float] = (0.02, 0.60)
    max_attempts: int = 100
    # forced layouts, bypassing sampling
    rects: Optional[List[Tuple[int, int, int, int]]] = None
    bands: Optional[Dict[str, float]] = None


EDGE_SIDES = ('left', 'right', 'top', 'bottom')


def _stamp_disc(mask: np.ndarray, x: float, y: float, radius: float) -> None:
    height, width = mask.shape
    x0, x1 = max(0, int(math.floor(x - radius))), min(width, int(math.ceil(x + radius)) + 1)
    y0, y1 = max(0, int(math.floor(y - radius))), min(height, int(math.ceil(y + radius)) + 1)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.ogrid[y0:y1, x0:x1]
    inside = (xs + 0.5 - x) ** 2 + (ys + 0.5 - y) ** 2 <= radius ** 2
    mask[y0:y1, x0:x1] |= inside


def smear_strokes(rng: np.random.Generator, size: Tuple[int, int],
                  params: Optional[MaskParams] = None) -> List[np.ndarray]:
    """Random-walk brush strokes, one boolean mask per stroke"""
    params = params or MaskParams()
    width, height = size
    short = min(width, height)
    count = int(rng.integers(params.strokes[0], params.strokes[1] + 1))
    strokes = []
    for _ in range(count):
        radius = max(2.0, float(rng.uniform(*params.stroke_radius)) * short)
        steps = int(rng.integers(params.stroke_steps[0], params.stroke_steps[1] + 1))
        x, y = float(rng.uniform(0, width - 1)), float(rng.uniform(0, height - 1))
        heading = float(rng.uniform(0, 2 * math.pi))
        # consecutive discs share a pixel, so every stroke stays 4-connected
        step = radius / 2.0
        stroke = np.zeros((height, width), dtype=bool)
        for _ in range(steps):
            _stamp_disc(stroke, x, y, radius)
            heading += float(rng.normal(0.0, 0.5))
            x = min(max(x + step * math.cos(heading), 0.0), width - 1.0)
            y = min(max(y + step * math.sin(heading), 0.0), height - 1.0)
        strokes.append(stroke)
    return strokes


def _fallback_smear(size: Tuple[int, int]) -> np.ndarray:
    """A straight stroke along the long axis covering about 10% of the canvas"""
    width, height = size
    mask = np.zeros((height, width), dtype=bool)
    half = max(1, int(round(0.05 * min(width, height))))
    if width >= height:
        mask[max(0, height // 2 - half):height // 2 + half, :] = True
    else:
        mask[:, max(0, width // 2 - half):width // 2 + half] = True
    return mask


def _blocks(rng: np.random.Generator, size: Tuple[int, int], params: MaskParams) -> np.ndarray:
    width, height = size
    mask = np.zeros((height, width), dtype=bool)
    count = int(rng.integers(params.blocks[0], params.blocks[1] + 1))
    for _ in range(count):
        area = float(rng.uniform(*params.block_area)) * width * height
        aspect = math.exp(float(rng.uniform(math.log(0.5), math.log(2.0))))
        rect_w = int(min(max(round(math.sqrt(area * aspect)), 1), width))
        rect_h = int(min(max(round(area / rect_w), 1), height))
        x = int(rng.integers(0, width - rect_w + 1))
        y = int(rng.integers(0, height - rect_h + 1))
        mask[y:y + rect_h, x:x + rect_w] = True
    return mask


def _fallback_block(size: Tuple[int, int]) -> np.ndarray:
    width, height = size
    mask = np.zeros((height, width), dtype=bool)
    side_w, side_h = max(1, int(round(width * math.sqrt(0.1)))), max(1, int(round(height * math.sqrt(0.1))))
    x0, y0 = (width - side_w) // 2, (height - side_h) // 2
    mask[y0:y0 + side_h, x0:x0 + side_w] = True
    return mask


def _edge_bands(rng: np.random.Generator, size: Tuple[int, int], params: MaskParams) -> np.ndarray:
    width, height = size
    if params.bands is not None:
        bands = dict(params.bands)
    else:
        count = int(rng.integers(params.edge_sides[0], params.edge_sides[1] + 1))
        chosen = sorted(rng.choice(len(EDGE_SIDES), size=count, replace=False))
        bands = {EDGE_SIDES[i]: float(rng.uniform(*params.edge_band)) for i in chosen}

    pixels = {}
    for side, fraction in bands.items():
        if side not in EDGE_SIDES:
            raise ValueError(f"unknown edge side {side!r}")
        span = width if side in ('left', 'right') else height
        pixels[side] = max(1, int(round(fraction * span)))

    # opposite bands keep at least one row and one column unmasked
    for first, second, span in (('left', 'right', width), ('top', 'bottom', height)):
        overflow = pixels.get(first, 0) + pixels.get(second, 0) - (span - 1)
        if overflow > 0:
            trimmed = second if second in pixels else first
            pixels[trimmed] = max(0, pixels[trimmed] - overflow)
            if first in pixels and pixels[first] > span - 1:
                pixels[first] = span - 1

    mask = np.zeros((height, width), dtype=bool)
    for side, band in pixels.items():
        if band == 0:
            continue
        if side == 'left':
            mask[:, :band] = True
        elif side == 'right':
            mask[:, width - band:] = True
        elif side == 'top':
            mask[:band, :] = True
        else:
            mask[height - band:, :] = True
    return mask


def gen_mask(kind: MaskKind, rng: np.random.Generator, size: Tuple[int, int],
             params: Optional[MaskParams] = None) -> np.ndarray:
    """Random smear / block / edge mask of the given (width, height), values {0, 255}"""
    params = params or MaskParams()
    width, height = size
    if width < 64 or height < 64:
        raise ValueError(f"mask size must be at least 64x64, got {width}x{height}")

    if kind == MaskKind.EDGE:
        return np.where(_edge_bands(rng, size, params), 255, 0).astype(np.uint8)

    if kind == MaskKind.BLOCK and params.rects is not None:
        mask = np.zeros((height, width), dtype=bool)
        for x0, y0, x1, y1 in params.rects:
            mask[max(0, y0):min(height, y1), max(0, x0):min(width, x1)] = True
        return np.where(mask, 255, 0).astype(np.uint8)

    lo, hi = params.fraction
    for _ in range(params.max_attempts):
        if kind == MaskKind.SMEAR:
            mask = np.logical_or.reduce(smear_strokes(rng, size, params))
        else:
            mask = _blocks(rng, size, params)
        if lo <= mask.mean() <= hi:
            break
    else:
        mask = _fallback_smear(size) if kind == MaskKind.SMEAR else _fallback_block(size)
    return np.where(mask, 255, 0).astype(np.uint8)


def draw_bbox(image: np.ndarray, box: BBox, color: RGB, thickness: int = 3) -> np.ndarray:
    """Copy of the image with a frame drawn inside the (clipped) box"""
    if thickness < 1:
        raise ValueError('thickness must be >= 1')
    height, width = image.shape[:2]
    x0, y0 = max(box.x0, 0), max(box.y0, 0)
    x1, y1 = min(box.x1, width), min(box.y1, height)
    if x0 >= x1 or y0 >= y1:
        raise RenderError(f"box {box.to_list()} is empty after clipping to {width}x{height}")

    out = image.copy()
    value = np.asarray(color, dtype=np.uint8)
    t = thickness
    out[y0:min(y0 + t, y1), x0:x1] = value
    out[max(y1 - t, y0):y1, x0:x1] = value
    out[y0:y1, x0:min(x0 + t, x1)] = value
    out[y0:y1, max(x1 - t, x0):x1] = value
    return out


def frame_mask(shape: Tuple[int, int], box: BBox, thickness: int = 3) -> np.ndarray:
    """Boolean mask of the pixels draw_bbox paints"""
    height, width = shape
    mask = np.zeros((height, width), dtype=bool)
    x0, y0 = max(box.x0, 0), max(box.y0, 0)
    x1, y1 = min(box.x1, width), min(box.y1, height)
    mask[y0:y1, x0:x1] = True
    inner_x0, inner_y0 = x0 + thickness, y0 + thickness
    inner_x1, inner_y1 = x1 - thickness, y1 - thickness
    if inner_x0 < inner_x1 and inner_y0 < inner_y1:
        mask[inner_y0:inner_y1, inner_x0:inner_x1] = False
    return mask


def color_highlight(image: np.ndarray, mask: np.ndarray, color: RGB, opacity: float) -> np.ndarray:
    """Blend `color` into the masked pixels with the given opacity"""
    if mask.shape[:2] != image.shape[:2]:
        raise ValueError(f"mask {mask.shape[:2]} does not match image {image.shape[:2]}")
    out = image.copy()
    selected = mask > 0
    blended = image[selected].astype(np.float64) * (1.0 - opacity) + \
        np.asarray(color, dtype=np.float64) * opacity
    out[selected] = quantize(blended)
    return out
