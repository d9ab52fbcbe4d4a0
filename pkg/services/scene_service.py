"""
Scene service: placement geometry, occlusion-aware visible masks, spatial
relations and seeded scene sampling
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from exceptions import SceneError
from models import (MAX_SCALE, MIN_SCALE, Asset, AssetCatalog, AssetKind, BBox, Placement,
                    RGB, Scene, SpatialRelation)
from services.render_service import (paste_window, placement_offset, rasterize_placement,
                                     transformed_size)

ALPHA_THRESHOLD = 128
OVERLAP_THRESHOLD = 0.05
RELATION_MARGIN = 0.05
BLANK_BACKGROUND: RGB = (240, 240, 240)


@dataclass
class SceneParams:
    """Knobs for sample_scene; sizes are fractions of the canvas short side"""
    width: int = 512
    height: int = 512
    count: Tuple[int, int] = (1, 5)
    overlap: str = 'none'
    size_range: Tuple[float, float] = (0.15, 0.35)
    rotation_range: Tuple[float, float] = (-math.pi / 6, math.pi / 6)
    background: str = 'any'
    blank_color: RGB = BLANK_BACKGROUND
    fully_inside: bool = True
    gap: int = 0
    # fixed scale instead of size_range, used for exact-size shapes and text
    scale: Optional[float] = None
    asset_ids: Optional[Sequence[str]] = None
    max_attempts: int = 1000

    def __post_init__(self):
        if self.overlap not in ('none', 'allow'):
            raise SceneError(f"overlap policy must be 'none' or 'allow', got {self.overlap!r}")
        if self.background not in ('blank', 'asset', 'any'):
            raise SceneError(f"background must be 'blank', 'asset' or 'any', got {self.background!r}")
        if self.count[0] < 0 or self.count[1] < self.count[0]:
            raise SceneError(f"invalid object count range {self.count}")


def _support_corners(asset: Asset) -> np.ndarray:
    """Corners of the outermost opaque pixel in every row, in asset coordinates"""
    support = asset.alpha > 0
    rows = np.flatnonzero(support.any(axis=1))
    if rows.size == 0:
        raise SceneError(f"asset {asset.id} has no opaque pixel")
    sub = support[rows]
    left = sub.argmax(axis=1)
    right = sub.shape[1] - sub[:, ::-1].argmax(axis=1)
    corners = np.concatenate([
        np.stack([left, rows], axis=1),
        np.stack([left, rows + 1], axis=1),
        np.stack([right, rows], axis=1),
        np.stack([right, rows + 1], axis=1),
    ]).astype(np.float64)
    return corners


def transformed_extent(placement: Placement, asset: Asset) -> Tuple[int, int, int, int]:
    """Unclipped pixel box of the transformed alpha-support"""
    out_w, out_h = transformed_size(asset.width, asset.height, placement.scale, placement.rotation)
    ox, oy = placement_offset(placement, (out_w, out_h))
    cx, cy = ox + out_w / 2.0, oy + out_h / 2.0

    corners = _support_corners(asset)
    ux = corners[:, 0] - asset.width / 2.0
    uy = corners[:, 1] - asset.height / 2.0
    cos_t, sin_t = math.cos(placement.rotation), math.sin(placement.rotation)
    px = cx + placement.scale * (cos_t * ux - sin_t * uy)
    py = cy + placement.scale * (sin_t * ux + cos_t * uy)

    x0 = math.floor(round(float(px.min()), 6))
    y0 = math.floor(round(float(py.min()), 6))
    x1 = math.ceil(round(float(px.max()), 6))
    y1 = math.ceil(round(float(py.max()), 6))
    return x0, y0, x1, y1


def bbox_of(placement: Placement, asset: Asset, canvas: Tuple[int, int]) -> BBox:
    """Tight axis-aligned box of the transformed alpha-support, clipped to the canvas"""
    x0, y0, x1, y1 = transformed_extent(placement, asset)
    width, height = canvas
    x0, y0 = max(x0, 0), max(y0, 0)
    x1, y1 = min(x1, width), min(y1, height)
    if x0 >= x1 or y0 >= y1:
        raise SceneError(f"placement of {placement.asset_id} is fully off-canvas")
    return BBox(x0, y0, x1, y1)


def scene_bboxes(scene: Scene, catalog: AssetCatalog) -> List[BBox]:
    return [bbox_of(p, catalog.get(p.asset_id), scene.size) for p in scene.placements]


def placement_layers(scene: Scene, catalog: AssetCatalog) -> List[Tuple[np.ndarray, Tuple[int, int]]]:
    """Transformed raster and canvas offset of every placement, in z order"""
    return [rasterize_placement(p, catalog.get(p.asset_id)) for p in scene.placements]


def label_map(scene: Scene, catalog: AssetCatalog, layers=None) -> np.ndarray:
    """Index of the topmost placement with alpha >= 128 at each pixel, -1 for background"""
    if layers is None:
        layers = placement_layers(scene, catalog)
    labels = np.full((scene.height, scene.width), -1, dtype=np.int32)
    for index, (raster, offset) in enumerate(layers):
        window = paste_window(offset, raster.shape[:2], scene.size)
        if window is None:
            continue
        canvas_slice, raster_slice = window
        covered = raster[raster_slice][:, :, 3] >= ALPHA_THRESHOLD
        labels[canvas_slice][covered] = index
    return labels


def visible_mask(scene: Scene, catalog: AssetCatalog, index: int) -> np.ndarray:
    """Canvas-sized boolean mask of pixels where placement `index` is topmost"""
    if not 0 <= index < len(scene.placements):
        raise SceneError(f"placement index {index} out of range")
    return label_map(scene, catalog) == index


def visible_masks(scene: Scene, catalog: AssetCatalog) -> List[np.ndarray]:
    labels = label_map(scene, catalog)
    return [labels == i for i in range(len(scene.placements))]


def footprint_bbox(scene: Scene, catalog: AssetCatalog, index: int) -> Optional[BBox]:
    """Box around every canvas pixel the placement touches (alpha > 0), ignoring occlusion"""
    placement = scene.placements[index]
    raster, offset = rasterize_placement(placement, catalog.get(placement.asset_id))
    window = paste_window(offset, raster.shape[:2], scene.size)
    if window is None:
        return None
    canvas_slice, raster_slice = window
    touched = raster[raster_slice][:, :, 3] > 0
    if not touched.any():
        return None
    rows = np.flatnonzero(touched.any(axis=1))
    cols = np.flatnonzero(touched.any(axis=0))
    y_off, x_off = canvas_slice[0].start, canvas_slice[1].start
    return BBox(x_off + int(cols[0]), y_off + int(rows[0]),
                x_off + int(cols[-1]) + 1, y_off + int(rows[-1]) + 1)


def intersection_over_minimum(a: BBox, b: BBox) -> float:
    return a.intersection_area(b) / float(min(a.area, b.area))


def spatial_relation(a: BBox, b: BBox, canvas: Tuple[int, int]) -> SpatialRelation:
    """Relation of box a to box b.

    Overlapping above 5% intersection-over-minimum; otherwise the dominant
    normalized center offset names the relation when it reaches 5% of the
    canvas; anything closer is Near.
    """
    if intersection_over_minimum(a, b) > OVERLAP_THRESHOLD:
        return SpatialRelation.OVERLAPPING

    width, height = canvas
    (ax, ay), (bx, by) = a.center, b.center
    off_x = (bx - ax) / width
    off_y = (by - ay) / height
    if abs(off_x) >= abs(off_y):
        if abs(off_x) >= RELATION_MARGIN:
            return SpatialRelation.LEFT_OF if off_x > 0 else SpatialRelation.RIGHT_OF
    elif abs(off_y) >= RELATION_MARGIN:
        return SpatialRelation.ABOVE if off_y > 0 else SpatialRelation.BELOW
    return SpatialRelation.NEAR


def _conflicts(box: BBox, others: List[BBox], gap: int) -> bool:
    for other in others:
        if gap > 0:
            separated = (box.x1 + gap <= other.x0 or other.x1 + gap <= box.x0 or
                         box.y1 + gap <= other.y0 or other.y1 + gap <= box.y0)
            if not separated:
                return True
        elif intersection_over_minimum(box, other) > OVERLAP_THRESHOLD:
            return True
    return False


def choose_background(rng: np.random.Generator, catalog: AssetCatalog, policy: str,
                      blank_color: RGB = BLANK_BACKGROUND):
    """Background asset id or blank color according to the policy"""
    backgrounds = catalog.of_kind(AssetKind.BACKGROUND)
    if policy == 'asset':
        if not backgrounds:
            raise SceneError('background policy "asset" but the catalog has no backgrounds')
        return backgrounds[int(rng.integers(len(backgrounds)))]
    if policy == 'any' and backgrounds and rng.random() < 0.5:
        return backgrounds[int(rng.integers(len(backgrounds)))]
    return tuple(blank_color)


def place_object(rng: np.random.Generator, catalog: AssetCatalog, asset_id: str,
                 params: SceneParams, z: int, avoid: Sequence[BBox] = ()) -> Tuple[Placement, BBox]:
    """Rejection-sample a pose for one asset; raises 'canvas too crowded' after max_attempts"""
    asset = catalog.get(asset_id)
    width, height = params.width, params.height
    avoid = list(avoid)
    for _ in range(params.max_attempts):
        if params.scale is not None:
            scale = float(params.scale)
        else:
            fraction = rng.uniform(*params.size_range)
            scale = fraction * min(width, height) / max(asset.width, asset.height)
            scale = float(min(max(scale, MIN_SCALE), MAX_SCALE))
        lo, hi = params.rotation_range
        rotation = float(rng.uniform(lo, hi)) if hi > lo else float(lo)
        out_w, out_h = transformed_size(asset.width, asset.height, scale, rotation)
        if params.fully_inside and (out_w > width or out_h > height):
            continue

        if params.fully_inside:
            cx = rng.uniform(out_w / 2.0, width - out_w / 2.0)
            cy = rng.uniform(out_h / 2.0, height - out_h / 2.0)
        else:
            cx = rng.uniform(0, width)
            cy = rng.uniform(0, height)
        placement = Placement(asset_id=asset_id, center=(float(cx), float(cy)),
                              scale=scale, rotation=rotation, z=z)

        x0, y0, x1, y1 = transformed_extent(placement, asset)
        if params.fully_inside and (x0 < 0 or y0 < 0 or x1 > width or y1 > height):
            continue
        if x1 <= 0 or y1 <= 0 or x0 >= width or y0 >= height:
            continue
        box = bbox_of(placement, asset, (width, height))
        if params.overlap == 'none' and _conflicts(box, avoid, params.gap):
            continue
        return placement, box
    raise SceneError(f"canvas too crowded: no pose for {asset_id} after {params.max_attempts} attempts")


def sample_scene(rng: np.random.Generator, catalog: AssetCatalog, params: SceneParams) -> Scene:
    """Random arrangement of stickers; a pure function of (rng state, catalog, params)"""
    background = choose_background(rng, catalog, params.background, params.blank_color)
    count = int(rng.integers(params.count[0], params.count[1] + 1))

    if params.asset_ids is not None:
        candidates = list(params.asset_ids)
    else:
        candidates = catalog.of_kind(AssetKind.STICKER)
    if count > 0 and not candidates:
        raise SceneError('scene needs sticker assets but none are available')

    placements: List[Placement] = []
    boxes: List[BBox] = []
    for z in range(count):
        asset_id = candidates[int(rng.integers(len(candidates)))]
        placement, box = place_object(rng, catalog, asset_id, params, z, boxes)
        placements.append(placement)
        boxes.append(box)

    return Scene(width=params.width, height=params.height, background=background,
                 placements=tuple(placements))


def position_word(box: BBox, canvas: Tuple[int, int]) -> str:
    """Coarse 3x3 grid position of a box center"""
    width, height = canvas
    cx, cy = box.center
    col = min(int(3 * cx / width), 2)
    row = min(int(3 * cy / height), 2)
    vertical = ('top', 'middle', 'bottom')[row]
    horizontal = ('left', 'center', 'right')[col]
    if vertical == 'middle' and horizontal == 'center':
        return 'in the center'
    if vertical == 'middle':
        return f"on the {horizontal}"
    if horizontal == 'center':
        return f"at the {vertical}"
    return f"in the {vertical} {horizontal}"


def relation_table(scene: Scene, catalog: AssetCatalog,
                   indices: Sequence[int]) -> Dict[Tuple[int, int], SpatialRelation]:
    """Pairwise relations among the given placement indices (i < j order)"""
    boxes = {i: bbox_of(scene.placements[i], catalog.get(scene.placements[i].asset_id), scene.size)
             for i in indices}
    table = {}
    ordered = sorted(indices)
    for n, i in enumerate(ordered):
        for j in ordered[n + 1:]:
            table[(i, j)] = spatial_relation(boxes[i], boxes[j], scene.size)
    return table
