"""
Asset seeding script: writes a small procedural asset root
(stickers, backgrounds and A-Z glyph sets) usable by every task family
"""

import argparse
import json
import logging
import string
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
from PIL import Image, ImageDraw, ImageFilter, ImageFont

from models import AssetKind
from services.asset_service import TAGS_SIDECAR, cutout_from_segmentation

logger = logging.getLogger(__name__)

STICKER_SIDE = 96
BACKGROUND_SIDE = 128

# name, shape, fill color, extra tags
STICKERS = [
    ('ball', 'circle', (255, 0, 0), ['toy']),
    ('box', 'square', (0, 0, 255), ['container']),
    ('kite', 'diamond', (255, 255, 0), ['toy']),
    ('leaf', 'ellipse', (0, 128, 0), ['plant']),
    ('star', 'star', (255, 165, 0), ['shape']),
    ('ring', 'ring', (128, 0, 128), ['jewelry']),
    ('cup', 'trapezoid', (139, 69, 19), ['kitchen']),
    ('tile', 'rounded', (0, 128, 128), ['floor']),
    ('flag', 'flag', (255, 0, 255), ['sign']),
    ('arrow', 'arrow', (0, 0, 128), ['sign']),
]

BACKGROUNDS = [
    ('gradient.png', 'gradient', ['sky']),
    ('stripes.png', 'stripes', ['striped']),
    ('checker.png', 'checker', ['checkered']),
    ('dots.png', 'dots', ['dotted']),
]


def _outline(shape: str, side: int) -> List[Tuple[float, float]]:
    m, s = 6, side - 6
    c = side / 2.0
    if shape == 'diamond':
        return [(c, m), (s, c), (c, s), (m, c)]
    if shape == 'trapezoid':
        return [(m, m + 10), (s, m + 10), (s - 16, s), (m + 16, s)]
    if shape == 'star':
        points = []
        for k in range(10):
            radius = (c - m) if k % 2 == 0 else (c - m) * 0.45
            angle = np.pi / 2 + k * np.pi / 5
            points.append((c + radius * np.cos(angle), c - radius * np.sin(angle)))
        return points
    if shape == 'flag':
        return [(m, m), (s, m + 14), (m + 12, c), (m + 12, s), (m, s)]
    if shape == 'arrow':
        return [(m, c - 10), (c, c - 10), (c, m + 8), (s, c), (c, s - 8), (c, c + 10), (m, c + 10)]
    raise ValueError(f"no outline for shape {shape!r}")


def draw_sticker(shape: str, color: Tuple[int, int, int], side: int = STICKER_SIDE) -> Tuple[np.ndarray, np.ndarray]:
    """Flat-colored shape with a darker rim; returns (rgb, mask)"""
    mask = Image.new('L', (side, side), 0)
    draw = ImageDraw.Draw(mask)
    box = [6, 6, side - 7, side - 7]
    if shape == 'circle':
        draw.ellipse(box, fill=255)
    elif shape == 'ellipse':
        draw.ellipse([6, side // 4, side - 7, side - side // 4], fill=255)
    elif shape == 'square':
        draw.rectangle([12, 12, side - 13, side - 13], fill=255)
    elif shape == 'rounded':
        draw.rounded_rectangle(box, radius=16, fill=255)
    elif shape == 'ring':
        draw.ellipse(box, fill=255)
        draw.ellipse([side // 3, side // 3, side - side // 3, side - side // 3], fill=0)
    else:
        draw.polygon(_outline(shape, side), fill=255)

    rgb = np.zeros((side, side, 3), dtype=np.uint8)
    rgb[:] = color
    rim = np.asarray(mask.filter(ImageFilter.MinFilter(5))) == 0
    rgb[rim] = (np.asarray(color) * 0.7).astype(np.uint8)
    return rgb, np.asarray(mask)


def draw_background(pattern: str, side: int = BACKGROUND_SIDE) -> np.ndarray:
    yy, xx = np.mgrid[0:side, 0:side]
    rgb = np.zeros((side, side, 3), dtype=np.uint8)
    if pattern == 'gradient':
        t = yy / float(side - 1)
        rgb[..., 0] = (135 + 80 * t).astype(np.uint8)
        rgb[..., 1] = (190 + 40 * t).astype(np.uint8)
        rgb[..., 2] = 235
    elif pattern == 'stripes':
        on = (xx // 16) % 2 == 0
        rgb[on] = (230, 230, 210)
        rgb[~on] = (200, 215, 230)
    elif pattern == 'checker':
        on = ((xx // 16) + (yy // 16)) % 2 == 0
        rgb[on] = (240, 240, 240)
        rgb[~on] = (190, 190, 190)
    elif pattern == 'dots':
        rgb[:] = (250, 240, 225)
        dot = ((xx % 24) - 12) ** 2 + ((yy % 24) - 12) ** 2 <= 16
        rgb[dot] = (220, 200, 170)
    else:
        raise ValueError(f"unknown background pattern {pattern!r}")
    alpha = np.full((side, side, 1), 255, dtype=np.uint8)
    return np.concatenate([rgb, alpha], axis=2)


def _load_font(size: int):
    try:
        return ImageFont.load_default(size=size)
    except (TypeError, AttributeError, OSError):
        # Pillow built without FreeType only ships the fixed bitmap font
        return ImageFont.load_default()


def draw_glyphs(size: int = 32, bold: bool = False, chars: str = string.ascii_uppercase) -> Dict[str, np.ndarray]:
    """White RGBA glyph rasters sharing one cell height, so equal scaling keeps a baseline"""
    font = _load_font(size)
    top = min(font.getbbox(c)[1] for c in chars)
    bottom = max(font.getbbox(c)[3] for c in chars)
    margin = 2
    height = max(8, bottom - top + 2 * margin + (2 if bold else 0))

    glyphs = {}
    for char in chars:
        left, _, right, _ = font.getbbox(char)
        width = max(8, right - left + 2 * margin + (2 if bold else 0))
        mask = Image.new('L', (width, height), 0)
        ImageDraw.Draw(mask).text(((width - (right - left)) / 2.0 - left, margin - top + (1 if bold else 0)),
                                  char, fill=255, font=font)
        if bold:
            mask = mask.filter(ImageFilter.MaxFilter(3))
        alpha = np.asarray(mask)
        pixels = np.zeros((height, width, 4), dtype=np.uint8)
        pixels[..., :3] = 255
        pixels[..., 3] = alpha
        glyphs[char] = pixels
    return glyphs


def _save_rgba(pixels: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels, mode='RGBA').save(path, format='PNG')


def seed_stickers(root: Path) -> int:
    kind_dir = root / AssetKind.STICKER.directory
    tags = {}
    for name, shape, color, extra in STICKERS:
        rgb, mask = draw_sticker(shape, color)
        asset = cutout_from_segmentation(rgb, mask, asset_id=name, tags=(name, *extra))
        # cutouts are cropped to the mask; a transparent margin keeps boxy shapes valid
        pixels = np.pad(asset.pixels, ((2, 2), (2, 2), (0, 0)))
        _save_rgba(pixels, kind_dir / f"{name}.png")
        tags[f"{name}.png"] = list(asset.tags)
    (kind_dir / TAGS_SIDECAR).write_text(json.dumps(tags, indent=2), encoding='utf-8')
    return len(STICKERS)


def seed_backgrounds(root: Path) -> int:
    kind_dir = root / AssetKind.BACKGROUND.directory
    tags = {}
    for filename, pattern, labels in BACKGROUNDS:
        _save_rgba(draw_background(pattern), kind_dir / filename)
        tags[filename] = labels
    (kind_dir / TAGS_SIDECAR).write_text(json.dumps(tags, indent=2), encoding='utf-8')
    return len(BACKGROUNDS)


def seed_glyphs(root: Path, size: int = 32) -> int:
    count = 0
    for font_name, bold in (('sans', False), ('sans_bold', True)):
        for char, pixels in draw_glyphs(size, bold).items():
            _save_rgba(pixels, root / AssetKind.GLYPH.directory / font_name / f"U{ord(char):04X}.png")
            count += 1
    return count


def seed_asset_root(root, glyph_size: int = 32) -> Dict[str, int]:
    """Write stickers, backgrounds and glyphs under root; returns counts per kind"""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    counts = {
        AssetKind.STICKER.value: seed_stickers(root),
        AssetKind.BACKGROUND.value: seed_backgrounds(root),
        AssetKind.GLYPH.value: seed_glyphs(root, glyph_size),
    }
    logger.info(f"Seeded asset root {root}: {counts}")
    return counts


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description='Write a procedural asset root')
    parser.add_argument('root', nargs='?', default='assets')
    parser.add_argument('--glyph-size', type=int, default=32)
    args = parser.parse_args(argv)

    root = Path(args.root)
    if any(root.glob('*')):
        print(f"{root} is not empty, nothing seeded")
        return 1
    counts = seed_asset_root(root, args.glyph_size)
    print(f"Asset seeding completed: {counts}")
    return 0


if __name__ == '__main__':
    logging.basicConfig(level=logging.INFO)
    raise SystemExit(main())
