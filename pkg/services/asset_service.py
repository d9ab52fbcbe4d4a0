"""
Asset service: load, validate and catalog stickers, backgrounds and glyph sets
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from PIL import Image

from exceptions import AssetError
from models import MIN_ASSET_SIDE, Asset, AssetCatalog, AssetKind

logger = logging.getLogger(__name__)

TAGS_SIDECAR = 'tags.json'

# alpha mattes must survive round-trips bit-exactly, so only backgrounds may be lossy
ALLOWED_SUFFIXES = {
    AssetKind.STICKER: {'.png'},
    AssetKind.BACKGROUND: {'.png', '.jpg', '.jpeg'},
    AssetKind.GLYPH: {'.png'},
}


def validate_asset(asset: Asset) -> List[str]:
    """Return every violated Asset invariant; empty list iff valid"""
    violations = []
    pixels = asset.pixels
    if pixels.ndim != 3 or pixels.shape[2] != 4 or pixels.dtype != np.uint8:
        return [f"pixels must be an RGBA uint8 raster, got shape {pixels.shape} dtype {pixels.dtype}"]

    if asset.width < MIN_ASSET_SIDE or asset.height < MIN_ASSET_SIDE:
        violations.append(
            f"size {asset.width}x{asset.height} below minimum {MIN_ASSET_SIDE}x{MIN_ASSET_SIDE}")

    alpha = asset.alpha
    if asset.kind == AssetKind.BACKGROUND:
        if not np.all(alpha == 255):
            violations.append('background not fully opaque')
    else:
        if not np.any(alpha > 0):
            violations.append('no opaque pixel')
        if not np.any(alpha == 0):
            violations.append('no transparent pixel')
    if asset.kind == AssetKind.GLYPH and glyph_char(asset.id) is None:
        violations.append('glyph file must be named glyphs/<font>/U<hex codepoint>.png')
    return violations


def cutout_from_segmentation(image: np.ndarray, mask: np.ndarray, asset_id: str = 'cutout',
                             tags: Tuple[str, ...] = ()) -> Asset:
    """Cut a sticker out of an RGB image using a binary mask, cropped to the mask's bbox"""
    if image.shape[:2] != mask.shape[:2]:
        raise AssetError(f"image {image.shape[:2]} and mask {mask.shape[:2]} differ in size")
    foreground = mask > 0
    if foreground.ndim == 3:
        foreground = foreground.any(axis=2)
    if not foreground.any():
        raise AssetError('segmentation mask is empty')

    rows = np.flatnonzero(foreground.any(axis=1))
    cols = np.flatnonzero(foreground.any(axis=0))
    y0, y1 = rows[0], rows[-1] + 1
    x0, x1 = cols[0], cols[-1] + 1

    rgb = image[y0:y1, x0:x1, :3].astype(np.uint8)
    alpha = np.where(foreground[y0:y1, x0:x1], 255, 0).astype(np.uint8)
    pixels = np.dstack([rgb, alpha])
    return Asset(id=asset_id, pixels=pixels, kind=AssetKind.STICKER, tags=tuple(tags))


def decode_image(path: Path) -> np.ndarray:
    """Decode a file into an RGBA uint8 array; raises on any decode error"""
    with Image.open(path) as img:
        img.load()
        return np.asarray(img.convert('RGBA'), dtype=np.uint8).copy()


def _load_sidecar(kind_dir: Path, warnings: List[str]) -> Optional[Dict[str, List[str]]]:
    sidecar = kind_dir / TAGS_SIDECAR
    if not sidecar.exists():
        return None
    try:
        data = json.loads(sidecar.read_text(encoding='utf-8'))
        if not isinstance(data, dict):
            raise ValueError('sidecar must be a JSON object')
        return {str(k): [str(t) for t in v] for k, v in data.items()}
    except (OSError, ValueError, TypeError) as e:
        message = f"{sidecar}: unreadable tag sidecar ({e}), falling back to filename tags"
        logger.warning(message)
        warnings.append(message)
        return None


def load_catalog(root_path) -> AssetCatalog:
    """Load every decodable, valid asset under <root>/{stickers,backgrounds,glyphs}.

    Ids are root-relative POSIX paths; files are visited in sorted order so the
    catalog is a pure function of the directory contents.
    """
    root = Path(root_path)
    if not root.is_dir():
        raise AssetError(f"asset root is not a readable directory: {root}")

    assets = []
    warnings: List[str] = []
    for kind in AssetKind:
        kind_dir = root / kind.directory
        if not kind_dir.is_dir():
            continue
        sidecar = _load_sidecar(kind_dir, warnings)

        for path in sorted(kind_dir.rglob('*')):
            if not path.is_file() or path.name == TAGS_SIDECAR:
                continue
            if path.suffix.lower() not in ALLOWED_SUFFIXES[kind]:
                message = f"{path}: unsupported file type for {kind.value} assets, skipped"
                logger.warning(message)
                warnings.append(message)
                continue

            rel_in_kind = path.relative_to(kind_dir).as_posix()
            asset_id = path.relative_to(root).as_posix()
            try:
                pixels = decode_image(path)
            except Exception as e:
                message = f"{asset_id}: undecodable image ({e}), skipped"
                logger.warning(message)
                warnings.append(message)
                continue

            if sidecar is not None and rel_in_kind in sidecar:
                tags = tuple(sidecar[rel_in_kind])
            else:
                tags = (path.stem,)

            asset = Asset(id=asset_id, pixels=pixels, kind=kind, tags=tags)
            violations = validate_asset(asset)
            if violations:
                message = f"{asset_id}: invalid asset ({'; '.join(violations)}), skipped"
                logger.warning(message)
                warnings.append(message)
                continue
            assets.append(asset)

    catalog = AssetCatalog(assets, warnings=warnings)
    logger.info(f"Loaded {len(catalog)} assets from {root} {catalog.counts()}")
    return catalog


def require_kind(catalog: AssetCatalog, kind: AssetKind, minimum: int = 1) -> List[str]:
    """Ids of a kind, failing when fewer than `minimum` are present"""
    ids = catalog.of_kind(kind)
    if len(ids) < minimum:
        raise AssetError(f"catalog has {len(ids)} {kind.value} asset(s), at least {minimum} required")
    return ids


def glyph_char(asset_id: str) -> Optional[str]:
    """Character of a glyph id shaped glyphs/<font>/U<hex>.png, None when malformed"""
    parts = asset_id.split('/')
    if len(parts) != 3:
        return None
    stem = parts[2].rsplit('.', 1)[0]
    if not (stem.startswith('U') and len(stem) > 1):
        return None
    try:
        return chr(int(stem[1:], 16))
    except (ValueError, OverflowError):
        return None


def glyph_index(catalog: AssetCatalog) -> Dict[str, Dict[str, str]]:
    """font -> character -> glyph asset id"""
    index: Dict[str, Dict[str, str]] = {}
    for asset_id in catalog.of_kind(AssetKind.GLYPH):
        char = glyph_char(asset_id)
        if char is None:
            continue
        index.setdefault(asset_id.split('/')[1], {})[char] = asset_id
    return index


def check_catalog(root_path) -> Dict:
    """Load and audit an asset root; used by the `assets check` command"""
    try:
        catalog = load_catalog(root_path)
    except AssetError as e:
        return {'success': False, 'error': str(e)}

    violations = {}
    for asset in catalog:
        report = validate_asset(asset)
        if report:
            violations[asset.id] = report

    return {
        'success': not catalog.warnings and not violations,
        'counts': catalog.counts(),
        'fonts': sorted(glyph_index(catalog)),
        'warnings': list(catalog.warnings),
        'violations': violations,
    }


class AssetService:
    """One asset root: the catalog and glyph index are loaded once and reused"""

    def __init__(self, root_path):
        self.root = Path(root_path)
        self._catalog: Optional[AssetCatalog] = None
        self._glyphs: Optional[Dict[str, Dict[str, str]]] = None

    @property
    def catalog(self) -> AssetCatalog:
        if self._catalog is None:
            self._catalog = load_catalog(self.root)
        return self._catalog

    @property
    def glyphs(self) -> Dict[str, Dict[str, str]]:
        if self._glyphs is None:
            self._glyphs = glyph_index(self.catalog)
        return self._glyphs

    def reload(self) -> AssetCatalog:
        self._catalog = None
        self._glyphs = None
        return self.catalog

    def check(self) -> Dict:
        return check_catalog(self.root)
