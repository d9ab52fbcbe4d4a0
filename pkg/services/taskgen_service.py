"""
Task generators: seeded, pure functions from (rng, catalog, config) to a Sample
with exact source/target ground truth
"""

import logging
import math
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from config import GenConfig
from exceptions import AssetError, SceneError
from models import (Asset, AssetCatalog, AssetKind, DragKind, EditOp, EditOpKind, InpaintMode,
                    MapKind, MaskKind, Placement, Sample, Scene, SegDetMode, T2IVariant,
                    TaskFamily)
from services.asset_service import glyph_index, require_kind
from services.condmap_service import (MaskParams, canny, color_highlight, depth_map, draw_bbox,
                                      gen_mask, seg_map)
from services.prompt_service import (DEFAULT_WORDS, TextParams, background_phrase, color_anchor,
                                     describe_scene, edit_instruction, encode_drag, join_phrases,
                                     object_descriptor, render_text, render_text_spec,
                                     segdet_instruction, subject_prompt, text_prompt)
from services.render_service import composite, placement_offset, render_background, transformed_size
from services.scene_service import (BLANK_BACKGROUND, SceneParams, bbox_of, choose_background,
                                    footprint_bbox, label_map, place_object, sample_scene,
                                    transformed_extent, visible_mask)

logger = logging.getLogger(__name__)

SHAPE_GAP = 2
DRAG_ATTEMPTS = 100
TEXT_MARGIN = 0.9


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _pick(rng: np.random.Generator, values: Sequence):
    return values[int(rng.integers(len(values)))]


def choose_canvas(rng: np.random.Generator, cfg: GenConfig) -> Tuple[int, int]:
    sizes = cfg.canvas.sizes
    if len(sizes) == 1:
        return int(sizes[0][0]), int(sizes[0][1])
    weights = np.asarray(cfg.canvas.weights, dtype=np.float64)
    index = int(rng.choice(len(sizes), p=weights / weights.sum()))
    return int(sizes[index][0]), int(sizes[index][1])


def scene_params(cfg: GenConfig, canvas: Tuple[int, int], **overrides) -> SceneParams:
    values = dict(
        width=canvas[0], height=canvas[1],
        count=tuple(cfg.scene.count),
        overlap=cfg.scene.overlap,
        size_range=tuple(cfg.scene.size_range),
        rotation_range=tuple(cfg.scene.rotation_range),
        background=cfg.scene.background,
    )
    values.update(overrides)
    return SceneParams(**values)


def mask_params(cfg: GenConfig, **overrides) -> MaskParams:
    m = cfg.masks
    values = dict(
        strokes=tuple(m.strokes), stroke_radius=tuple(m.stroke_radius),
        stroke_steps=tuple(m.stroke_steps), blocks=tuple(m.blocks),
        block_area=tuple(m.block_area), edge_sides=tuple(m.edge_sides),
        edge_band=tuple(m.edge_band), fraction=tuple(m.fraction),
    )
    values.update(overrides)
    return MaskParams(**values)


def _boxes(*boxes) -> List[List[int]]:
    return [box.to_list() for box in boxes if box is not None]


def shape_asset(shape: str, color_name: str, side: int) -> Asset:
    """Unantialiased shape sticker in an exact palette color"""
    side = max(side, 12)
    image = Image.new('L', (side, side), 0)
    draw = ImageDraw.Draw(image)
    box = [1, 1, side - 2, side - 2]
    if shape == 'circle':
        draw.ellipse(box, fill=255)
    elif shape == 'square':
        draw.rectangle(box, fill=255)
    elif shape == 'triangle':
        draw.polygon([(side / 2.0, 1), (side - 2, side - 2), (1, side - 2)], fill=255)
    else:
        raise AssetError(f"unknown shape {shape!r}")

    alpha = np.asarray(image, dtype=np.uint8)
    pixels = np.zeros((side, side, 4), dtype=np.uint8)
    pixels[alpha > 0, :3] = np.asarray(color_anchor(color_name), dtype=np.uint8)
    pixels[:, :, 3] = alpha
    return Asset(id=f"generated/shapes/{shape}-{color_name}-{side}", pixels=pixels,
                 kind=AssetKind.STICKER, tags=(shape,))


def _scene_meta(**scenes: Scene) -> Dict:
    return {role: scene.to_dict() for role, scene in scenes.items()}


def gen_t2i(rng: np.random.Generator, catalog: AssetCatalog, cfg: GenConfig, variant: T2IVariant,
            canvas: Tuple[int, int] = (512, 512), shapes: Optional[Sequence[Tuple[str, str]]] = None,
            text: Optional[TextParams] = None, params: Optional[SceneParams] = None) -> Sample:
    """Attribute-rich text-to-image sample: rendered words, shapes or stickers"""
    task = {
        T2IVariant.TEXT: TaskFamily.T2I_TEXT,
        T2IVariant.SHAPES: TaskFamily.T2I_SHAPES,
        T2IVariant.STICKERS: TaskFamily.T2I_STICKERS,
    }[variant]
    if variant == T2IVariant.TEXT:
        return _gen_t2i_text(rng, catalog, cfg, canvas, text)

    if variant == T2IVariant.SHAPES:
        width, height = canvas
        if shapes is None:
            n = int(rng.integers(cfg.shapes.count[0], cfg.shapes.count[1] + 1))
            shapes = [(_pick(rng, cfg.shapes.shapes), _pick(rng, cfg.shapes.colors)) for _ in range(n)]
        sides = [int(round(rng.uniform(*cfg.shapes.size_range) * min(width, height))) for _ in shapes]
        assets = {}
        for (shape, color), side in zip(shapes, sides):
            asset = shape_asset(shape, color, side)
            assets[asset.id] = asset
        overlay = catalog.extended(assets.values())
        layout = SceneParams(width=width, height=height, overlap='none', gap=SHAPE_GAP,
                             rotation_range=(0.0, 0.0), scale=1.0, background='blank')
        placements, boxes = [], []
        for z, ((shape, color), side) in enumerate(zip(shapes, sides)):
            asset_id = shape_asset(shape, color, side).id
            placement, box = place_object(rng, overlay, asset_id, layout, z, boxes)
            placements.append(placement)
            boxes.append(box)
        scene = Scene(width, height, BLANK_BACKGROUND, tuple(placements))
        shape_meta = {'shapes': [[s, c, max(side, 12)] for (s, c), side in zip(shapes, sides)]}
    else:
        overlay = catalog
        require_kind(catalog, AssetKind.STICKER)
        scene = sample_scene(rng, catalog, params or scene_params(cfg, canvas))
        shape_meta = {}

    description = describe_scene(scene, overlay, rng)
    metadata = {
        'variant': variant.value,
        'scenes': _scene_meta(tgt=scene),
        'facts': description.facts,
        'statements': description.statements,
    }
    metadata.update(shape_meta)
    return Sample(task=task, seed=0, target=composite(scene, overlay),
                  prompt=description.prompt, raw_prompt=description.prompt, metadata=metadata)


def _gen_t2i_text(rng: np.random.Generator, catalog: AssetCatalog, cfg: GenConfig,
                  canvas: Tuple[int, int], forced: Optional[TextParams]) -> Sample:
    width, height = canvas
    glyphs = glyph_index(catalog)
    if not glyphs:
        raise AssetError('text samples need at least one glyph font')
    params = forced or TextParams(
        words=tuple(cfg.text.words) if cfg.text.words else DEFAULT_WORDS,
        word_count=tuple(cfg.text.word_count),
        size_range=tuple(cfg.text.size_range),
        thickness_range=tuple(cfg.text.thickness_range),
        fonts=cfg.text.fonts,
    )
    spec = render_text_spec(rng, params, glyphs, canvas)
    asset = render_text(spec, catalog, glyphs)
    if asset.width > TEXT_MARGIN * width or asset.height > TEXT_MARGIN * height:
        # shrink the glyph size until the line fits the canvas
        factor = min(TEXT_MARGIN * width / asset.width, TEXT_MARGIN * height / asset.height)
        spec = replace(spec, size=max(8, int(math.floor(spec.size * factor))))
        asset = render_text(spec, catalog, glyphs)
        if asset.width > width or asset.height > height:
            raise SceneError(f"text {spec.text!r} does not fit a {width}x{height} canvas")

    cx = min(max(spec.placement[0], asset.width / 2.0), width - asset.width / 2.0)
    cy = min(max(spec.placement[1], asset.height / 2.0), height - asset.height / 2.0)
    spec = replace(spec, placement=(float(cx), float(cy)))

    overlay = catalog.extended([asset])
    placement = Placement(asset_id=asset.id, center=spec.placement, scale=1.0, rotation=0.0, z=0)
    scene = Scene(width, height, BLANK_BACKGROUND, (placement,))
    prompt = text_prompt(spec, rng)
    metadata = {
        'variant': T2IVariant.TEXT.value,
        'text': spec.to_dict(),
        'scenes': _scene_meta(tgt=scene),
    }
    return Sample(task=TaskFamily.T2I_TEXT, seed=0, target=composite(scene, overlay),
                  prompt=prompt, raw_prompt=prompt, metadata=metadata)


def _edit_background(rng: np.random.Generator, catalog: AssetCatalog):
    policy = 'asset' if catalog.of_kind(AssetKind.BACKGROUND) else 'blank'
    return choose_background(rng, catalog, policy)


def gen_instruct_edit(rng: np.random.Generator, catalog: AssetCatalog, cfg: GenConfig, op: EditOpKind,
                      canvas: Tuple[int, int] = (512, 512), asset_id: Optional[str] = None,
                      replacement_id: Optional[str] = None) -> Sample:
    """Add / remove / replace one sticker; the edit is exact by construction"""
    width, height = canvas
    stickers = require_kind(catalog, AssetKind.STICKER, 2 if op == EditOpKind.REPLACE else 1)

    if op == EditOpKind.ADD:
        background = BLANK_BACKGROUND
    else:
        background = _edit_background(rng, catalog)
    asset_id = asset_id or _pick(rng, stickers)
    params = scene_params(cfg, canvas, overlap='allow')
    placement, _ = place_object(rng, catalog, asset_id, params, z=0)
    empty = Scene(width, height, background)
    with_object = empty.with_placements([placement])

    if op == EditOpKind.ADD:
        source_scene, target_scene = empty, with_object
        descriptors = (object_descriptor(catalog, asset_id, 'a'),)
        region = _boxes(footprint_bbox(target_scene, catalog, 0))
    elif op == EditOpKind.REMOVE:
        source_scene, target_scene = with_object, empty
        descriptors = (object_descriptor(catalog, asset_id, 'the'),)
        region = _boxes(footprint_bbox(source_scene, catalog, 0))
    else:
        if replacement_id is None:
            label = catalog.get(asset_id).label
            others = [i for i in stickers if i != asset_id and catalog.get(i).label != label]
            others = others or [i for i in stickers if i != asset_id]
            replacement_id = _pick(rng, others)
        source_scene = with_object
        target_scene = empty.with_placements([placement.with_pose(asset_id=replacement_id)])
        descriptors = (object_descriptor(catalog, asset_id, 'the'),
                       object_descriptor(catalog, replacement_id, 'a'))
        region = _boxes(footprint_bbox(source_scene, catalog, 0),
                        footprint_bbox(target_scene, catalog, 0))

    edit = EditOp(op, descriptors)
    instruction = edit_instruction(edit, rng)
    metadata = {
        'op': edit.to_dict(),
        'scenes': _scene_meta(src=source_scene, tgt=target_scene),
        'edit_region': region,
    }
    return Sample(task=TaskFamily.INSTRUCT_EDIT, seed=0,
                  target=composite(target_scene, catalog),
                  sources=[composite(source_scene, catalog)],
                  prompt=instruction, raw_prompt=instruction, metadata=metadata)


def _effective_center(placement: Placement, asset: Asset) -> Tuple[float, float]:
    out_w, out_h = transformed_size(asset.width, asset.height, placement.scale, placement.rotation)
    ox, oy = placement_offset(placement, (out_w, out_h))
    return ox + out_w / 2.0, oy + out_h / 2.0


def map_drag_point(point: Tuple[int, int], source: Placement, target: Placement,
                   asset: Asset) -> Tuple[float, float]:
    """Image of a source pixel under the source -> target pose change"""
    ex0, ey0 = _effective_center(source, asset)
    ex1, ey1 = _effective_center(target, asset)
    px, py = point[0] + 0.5 - ex0, point[1] + 0.5 - ey0
    c0, s0 = math.cos(source.rotation), math.sin(source.rotation)
    ux = (c0 * px + s0 * py) / source.scale
    uy = (-s0 * px + c0 * py) / source.scale
    c1, s1 = math.cos(target.rotation), math.sin(target.rotation)
    qx = ex1 + target.scale * (c1 * ux - s1 * uy)
    qy = ey1 + target.scale * (s1 * ux + c1 * uy)
    return qx - 0.5, qy - 0.5


def _inside(placement: Placement, asset: Asset, canvas: Tuple[int, int]) -> bool:
    x0, y0, x1, y1 = transformed_extent(placement, asset)
    return x0 >= 0 and y0 >= 0 and x1 <= canvas[0] and y1 <= canvas[1]


def _drag_pose(rng: np.random.Generator, kind: DragKind, placement: Placement, cfg: GenConfig,
               canvas: Tuple[int, int], transform) -> Tuple[Placement, object]:
    if kind == DragKind.TRANSLATE:
        if transform is None:
            reach = int(round(cfg.drag.translate_range * min(canvas)))
            transform = (int(rng.integers(-reach, reach + 1)), int(rng.integers(-reach, reach + 1)))
        dx, dy = int(transform[0]), int(transform[1])
        center = (placement.center[0] + dx, placement.center[1] + dy)
        return placement.with_pose(center=center), [dx, dy]
    if kind == DragKind.SCALE:
        factor = float(rng.uniform(*cfg.drag.scale_range)) if transform is None else float(transform)
        return placement.with_pose(scale=placement.scale * factor), factor
    angle = float(rng.uniform(*cfg.drag.rotation_range)) if transform is None else float(transform)
    return placement.with_pose(rotation=placement.rotation + angle), angle


def gen_drag(rng: np.random.Generator, catalog: AssetCatalog, cfg: GenConfig, kind: DragKind,
             canvas: Tuple[int, int] = (512, 512), asset_id: Optional[str] = None,
             pose: Optional[Placement] = None, transform=None,
             distractors: Optional[int] = None, points: Optional[int] = None) -> Sample:
    """Drag pair: one object moved, scaled or rotated, with sampled point drags"""
    width, height = canvas
    stickers = require_kind(catalog, AssetKind.STICKER)

    n_distractors = distractors if distractors is not None else \
        int(rng.integers(cfg.drag.distractors[0], cfg.drag.distractors[1] + 1))
    layout = scene_params(cfg, canvas, overlap='allow')
    below = []
    for z in range(n_distractors):
        placement, _ = place_object(rng, catalog, _pick(rng, stickers), layout, z)
        below.append(placement)

    asset_id = asset_id or _pick(rng, stickers)
    asset = catalog.get(asset_id)
    object_layout = scene_params(cfg, canvas, overlap='allow', size_range=tuple(cfg.drag.size_range))
    z = n_distractors
    for _ in range(DRAG_ATTEMPTS):
        if pose is not None:
            source_pose = Placement(asset_id, pose.center, pose.scale, pose.rotation, z)
        else:
            source_pose, _ = place_object(rng, catalog, asset_id, object_layout, z)
        try:
            target_pose, applied = _drag_pose(rng, kind, source_pose, cfg, canvas, transform)
        except SceneError:
            continue
        if _inside(source_pose, asset, canvas) and _inside(target_pose, asset, canvas):
            break
    else:
        raise SceneError(f"no on-canvas {kind.value} drag after {DRAG_ATTEMPTS} attempts")

    background = BLANK_BACKGROUND
    source_scene = Scene(width, height, background, tuple(below) + (source_pose,))
    target_scene = Scene(width, height, background, tuple(below) + (target_pose,))
    index = len(below)

    mask = visible_mask(source_scene, catalog, index)
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise SceneError('dragged object has no visible pixel')
    k = points if points is not None else int(rng.integers(cfg.drag.points[0], cfg.drag.points[1] + 1))
    k = min(k, rows.size)
    chosen = rng.choice(rows.size, size=k, replace=False)

    drags = []
    for i in chosen:
        px, py = int(cols[i]), int(rows[i])
        if kind == DragKind.TRANSLATE:
            tx, ty = px + applied[0], py + applied[1]
        else:
            tx, ty = map_drag_point((px, py), source_pose, target_pose, asset)
        tx = min(max(tx, 0.0), width - 1.0)
        ty = min(max(ty, 0.0), height - 1.0)
        drags.append(((px, py), (tx - px, ty - py)))
    spec, instruction = encode_drag(drags, canvas)

    metadata = {
        'kind': kind.value,
        'transform': applied,
        'drag': [p.to_list() for p in spec],
        'pixel_drags': [[p[0], p[1], d[0], d[1]] for p, d in drags],
        'object_index': index,
        'scenes': _scene_meta(src=source_scene, tgt=target_scene),
        'edit_region': _boxes(footprint_bbox(source_scene, catalog, index),
                              footprint_bbox(target_scene, catalog, index)),
    }
    return Sample(task=TaskFamily.DRAG_EDIT, seed=0,
                  target=composite(target_scene, catalog),
                  sources=[composite(source_scene, catalog)],
                  prompt=instruction, raw_prompt=instruction, metadata=metadata)


class ImagePool:
    """Source images for inpainting: background assets or sticker collages"""

    def __init__(self, catalog: AssetCatalog, cfg: GenConfig):
        self.catalog = catalog
        self.cfg = cfg
        self.backgrounds = catalog.of_kind(AssetKind.BACKGROUND)
        self.stickers = catalog.of_kind(AssetKind.STICKER)
        policy = cfg.inpaint.pool
        if policy == 'backgrounds' and not self.backgrounds:
            raise AssetError('image pool "backgrounds" but the catalog has no backgrounds')
        if not self.backgrounds and not self.stickers:
            raise AssetError('image pool is empty: no backgrounds and no stickers')

    def draw(self, rng: np.random.Generator, canvas: Tuple[int, int]) -> Tuple[np.ndarray, str, Dict]:
        policy = self.cfg.inpaint.pool
        use_background = bool(self.backgrounds) and (
            policy == 'backgrounds' or not self.stickers or
            (policy == 'any' and rng.random() < 0.5))

        width, height = canvas
        if use_background:
            background_id = _pick(rng, self.backgrounds)
            scene = Scene(width, height, background_id)
            asset = self.catalog.get(background_id)
            caption = f"A picture of {join_phrases(list(asset.tags) or [asset.label])}."
            return render_background(scene, self.catalog), caption, {'scene': scene.to_dict()}

        scene = sample_scene(rng, self.catalog, scene_params(self.cfg, canvas))
        description = describe_scene(scene, self.catalog, rng)
        return composite(scene, self.catalog), description.prompt, {'scene': scene.to_dict()}


def gen_inpaint_outpaint(rng: np.random.Generator, cfg: GenConfig, image_pool: ImagePool,
                         mode: InpaintMode, canvas: Tuple[int, int] = (512, 512),
                         mask_kind: Optional[MaskKind] = None,
                         params: Optional[MaskParams] = None) -> Sample:
    """Masked image + mask -> original image; the caption is kept on a fair coin"""
    include_caption = bool(rng.random() < cfg.inpaint.caption_probability)
    image, caption, pool_meta = image_pool.draw(rng, canvas)

    if mode == InpaintMode.OUTPAINT:
        mask_kind = MaskKind.EDGE
    elif mask_kind is None:
        mask_kind = MaskKind(_pick(rng, cfg.inpaint.masks))
    mask = gen_mask(mask_kind, rng, canvas, params or mask_params(cfg))

    source = image.copy()
    source[mask > 0] = cfg.inpaint.fill
    prompt = caption if include_caption else ''
    task = TaskFamily.INPAINT if mode == InpaintMode.INPAINT else TaskFamily.OUTPAINT
    metadata = {
        'mode': mode.value,
        'mask_kind': mask_kind.value,
        'caption': caption,
        'caption_included': include_caption,
        'fill': cfg.inpaint.fill,
        'edit_mask': True,
        'pool': pool_meta,
    }
    return Sample(task=task, seed=0, target=image, sources=[source], mask=mask,
                  prompt=prompt, raw_prompt=prompt, metadata=metadata)


def gen_image_conditioned(rng: np.random.Generator, catalog: AssetCatalog, cfg: GenConfig,
                          map_kind: MapKind, canvas: Tuple[int, int] = (512, 512),
                          params: Optional[SceneParams] = None) -> Sample:
    """Condition map (canny, depth, seg) of a collage -> the collage"""
    require_kind(catalog, AssetKind.STICKER)
    scene = sample_scene(rng, catalog, params or scene_params(cfg, canvas))
    target = composite(scene, catalog)
    if map_kind == MapKind.CANNY:
        source = canny(target, cfg.condmaps.canny_low, cfg.condmaps.canny_high)
    elif map_kind == MapKind.DEPTH:
        source = depth_map(scene, catalog)
    else:
        source = seg_map(scene, catalog)

    description = describe_scene(scene, catalog, rng)
    metadata = {
        'map_kind': map_kind.value,
        'scenes': _scene_meta(tgt=scene),
        'facts': description.facts,
        'statements': description.statements,
    }
    return Sample(task=TaskFamily.IMAGE_COND, seed=0, target=target, sources=[source],
                  prompt=description.prompt, raw_prompt=description.prompt, metadata=metadata)


def gen_subject_driven(rng: np.random.Generator, catalog: AssetCatalog, cfg: GenConfig,
                       canvas: Tuple[int, int] = (512, 512)) -> Sample:
    """Sticker collage -> one of its stickers alone on a fresh background.

    The subject is the only collage sticker carrying its tag, so the prompt's
    "the <tag>" names exactly one object of the condition image.
    """
    width, height = canvas
    stickers = require_kind(catalog, AssetKind.STICKER, 3)
    subject_id = _pick(rng, stickers)
    tag = catalog.get(subject_id).label
    others = [asset_id for asset_id in stickers if catalog.get(asset_id).label != tag]
    if not others:
        raise AssetError(f"every sticker is tagged {tag!r}; a subject collage needs two distinct tags")

    low, high = cfg.subject.count
    count = int(rng.integers(low, high + 1))
    subject_index = int(rng.integers(count))
    collage = scene_params(cfg, canvas, count=(count - 1, count - 1), overlap='none', asset_ids=others)
    rest = sample_scene(rng, catalog, collage)
    boxes = [bbox_of(p, catalog.get(p.asset_id), canvas) for p in rest.placements]
    subject, _ = place_object(rng, catalog, subject_id, collage, z=0, avoid=boxes)

    ordered = list(rest.placements)
    ordered.insert(subject_index, subject)
    source_scene = Scene(width, height, rest.background,
                         tuple(replace(p, z=z) for z, p in enumerate(ordered)))
    if not np.any(label_map(source_scene, catalog) == subject_index):
        raise SceneError('subject sticker is not visible in the collage')

    background = choose_background(rng, catalog, 'any')
    placement, _ = place_object(rng, catalog, subject_id, scene_params(cfg, canvas), z=0)
    target_scene = Scene(width, height, background, (placement,))

    prompt = subject_prompt(tag, background_phrase(target_scene, catalog), rng)
    metadata = {
        'subject_index': subject_index,
        'subject_asset': subject_id,
        'scenes': _scene_meta(src=source_scene, tgt=target_scene),
    }
    return Sample(task=TaskFamily.SUBJECT_DRIVEN, seed=0,
                  target=composite(target_scene, catalog),
                  sources=[composite(source_scene, catalog)],
                  prompt=prompt, raw_prompt=prompt, metadata=metadata)


def gen_segdet(rng: np.random.Generator, catalog: AssetCatalog, cfg: GenConfig, mode: SegDetMode,
               canvas: Tuple[int, int] = (512, 512), asset_id: Optional[str] = None) -> Sample:
    """Highlight (segment) or frame (detect) one object on a background"""
    width, height = canvas
    stickers = require_kind(catalog, AssetKind.STICKER)
    background = _edit_background(rng, catalog)
    asset_id = asset_id or _pick(rng, stickers)
    placement, _ = place_object(rng, catalog, asset_id, scene_params(cfg, canvas, overlap='allow'), z=0)
    scene = Scene(width, height, background, (placement,))
    source = composite(scene, catalog)

    color_name = _pick(rng, cfg.segdet.colors)
    color = color_anchor(color_name)
    if mode == SegDetMode.SEGMENT:
        mask = visible_mask(scene, catalog, 0)
        target = color_highlight(source, mask, color, cfg.segdet.opacity)
        rows, cols = np.nonzero(mask)
        region = [[int(cols.min()), int(rows.min()), int(cols.max()) + 1, int(rows.max()) + 1]] \
            if rows.size else []
        extra = {'opacity': cfg.segdet.opacity}
    else:
        box = bbox_of(placement, catalog.get(asset_id), scene.size)
        target = draw_bbox(source, box, color, cfg.segdet.thickness)
        region = [box.to_list()]
        extra = {'bbox': box.to_list(), 'thickness': cfg.segdet.thickness}

    instruction = segdet_instruction(mode, object_descriptor(catalog, asset_id, 'the'), color_name, rng)
    metadata = {
        'mode': mode.value,
        'color': color_name,
        'scenes': _scene_meta(src=scene),
        'edit_region': region,
    }
    metadata.update(extra)
    return Sample(task=TaskFamily.SEGDET, seed=0, target=target, sources=[source],
                  prompt=instruction, raw_prompt=instruction, metadata=metadata)


def generate_sample(task: TaskFamily, seed: int, catalog: AssetCatalog, cfg: GenConfig) -> Sample:
    """Generate the sample for (task, seed); a pure function of its arguments"""
    rng = make_rng(seed)
    canvas = choose_canvas(rng, cfg)

    if task == TaskFamily.T2I_TEXT:
        sample = gen_t2i(rng, catalog, cfg, T2IVariant.TEXT, canvas)
    elif task == TaskFamily.T2I_SHAPES:
        sample = gen_t2i(rng, catalog, cfg, T2IVariant.SHAPES, canvas)
    elif task == TaskFamily.T2I_STICKERS:
        sample = gen_t2i(rng, catalog, cfg, T2IVariant.STICKERS, canvas)
    elif task == TaskFamily.INSTRUCT_EDIT:
        sample = gen_instruct_edit(rng, catalog, cfg, EditOpKind(_pick(rng, cfg.edit.ops)), canvas)
    elif task == TaskFamily.DRAG_EDIT:
        sample = gen_drag(rng, catalog, cfg, DragKind(_pick(rng, cfg.drag.kinds)), canvas)
    elif task == TaskFamily.INPAINT:
        sample = gen_inpaint_outpaint(rng, cfg, ImagePool(catalog, cfg), InpaintMode.INPAINT, canvas)
    elif task == TaskFamily.OUTPAINT:
        sample = gen_inpaint_outpaint(rng, cfg, ImagePool(catalog, cfg), InpaintMode.OUTPAINT, canvas)
    elif task == TaskFamily.IMAGE_COND:
        sample = gen_image_conditioned(rng, catalog, cfg, MapKind(_pick(rng, cfg.condmaps.maps)), canvas)
    elif task == TaskFamily.SUBJECT_DRIVEN:
        sample = gen_subject_driven(rng, catalog, cfg, canvas)
    else:
        sample = gen_segdet(rng, catalog, cfg, SegDetMode(_pick(rng, cfg.segdet.modes)), canvas)

    sample.seed = seed
    sample.metadata['canvas'] = [canvas[0], canvas[1]]
    logger.debug(f"Generated {task.value} sample for seed {seed} on {canvas[0]}x{canvas[1]}")
    return sample
