"""
Domain models for the collage data pipeline
"""

import hashlib
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np

from exceptions import AssetError, PromptError, SceneError

RGB = Tuple[int, int, int]

MIN_SCALE = 0.05
MAX_SCALE = 4.0
MIN_ASSET_SIDE = 8


class AssetKind(Enum):
    STICKER = 'sticker'
    BACKGROUND = 'background'
    GLYPH = 'glyph'

    @property
    def directory(self) -> str:
        return {
            AssetKind.STICKER: 'stickers',
            AssetKind.BACKGROUND: 'backgrounds',
            AssetKind.GLYPH: 'glyphs',
        }[self]


class TaskFamily(Enum):
    T2I_TEXT = 't2i_text'
    T2I_SHAPES = 't2i_shapes'
    T2I_STICKERS = 't2i_stickers'
    INSTRUCT_EDIT = 'instruct_edit'
    DRAG_EDIT = 'drag_edit'
    INPAINT = 'inpaint'
    OUTPAINT = 'outpaint'
    IMAGE_COND = 'image_cond'
    SUBJECT_DRIVEN = 'subject_driven'
    SEGDET = 'segdet'


class SpatialRelation(Enum):
    LEFT_OF = 'left_of'
    RIGHT_OF = 'right_of'
    ABOVE = 'above'
    BELOW = 'below'
    OVERLAPPING = 'overlapping'
    NEAR = 'near'

    def inverse(self) -> 'SpatialRelation':
        return _RELATION_INVERSE[self]

    @property
    def phrase(self) -> str:
        return {
            SpatialRelation.LEFT_OF: 'to the left of',
            SpatialRelation.RIGHT_OF: 'to the right of',
            SpatialRelation.ABOVE: 'above',
            SpatialRelation.BELOW: 'below',
            SpatialRelation.OVERLAPPING: 'overlapping',
            SpatialRelation.NEAR: 'next to',
        }[self]


_RELATION_INVERSE = {
    SpatialRelation.LEFT_OF: SpatialRelation.RIGHT_OF,
    SpatialRelation.RIGHT_OF: SpatialRelation.LEFT_OF,
    SpatialRelation.ABOVE: SpatialRelation.BELOW,
    SpatialRelation.BELOW: SpatialRelation.ABOVE,
    SpatialRelation.OVERLAPPING: SpatialRelation.OVERLAPPING,
    SpatialRelation.NEAR: SpatialRelation.NEAR,
}


class MaskKind(Enum):
    SMEAR = 'smear'
    BLOCK = 'block'
    EDGE = 'edge'


class EditOpKind(Enum):
    ADD = 'add'
    REMOVE = 'remove'
    REPLACE = 'replace'


class DragKind(Enum):
    TRANSLATE = 'translate'
    SCALE = 'scale'
    ROTATE = 'rotate'


class MapKind(Enum):
    CANNY = 'canny'
    DEPTH = 'depth'
    SEG = 'seg'


class SegDetMode(Enum):
    SEGMENT = 'segment'
    DETECT = 'detect'


class T2IVariant(Enum):
    TEXT = 'text'
    SHAPES = 'shapes'
    STICKERS = 'stickers'


class InpaintMode(Enum):
    INPAINT = 'inpaint'
    OUTPAINT = 'outpaint'


@dataclass(frozen=True, eq=False)
class Asset:
    """RGBA raster with alpha matte; the atom of collage composition"""
    id: str
    pixels: np.ndarray
    kind: AssetKind
    tags: Tuple[str, ...] = ()

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def alpha(self) -> np.ndarray:
        return self.pixels[:, :, 3]

    @property
    def label(self) -> str:
        """Human-readable name used in prompts"""
        if self.tags:
            return self.tags[0]
        stem = self.id.rsplit('/', 1)[-1]
        return stem.rsplit('.', 1)[0]

    def to_dict(self) -> Dict:
        return {
            'id': self.id,
            'kind': self.kind.value,
            'width': self.width,
            'height': self.height,
            'tags': list(self.tags),
        }


class AssetCatalog:
    """Immutable id -> Asset map indexed by kind and tag.

    A catalog may sit on top of a base catalog; lookups fall through to the
    base. Generators use this to add in-memory shape and text assets without
    copying the loaded library.
    """

    def __init__(self, assets: Iterable[Asset] = (), warnings: Optional[List[str]] = None,
                 base: Optional['AssetCatalog'] = None):
        self._base = base
        self._assets: Dict[str, Asset] = {}
        for asset in sorted(assets, key=lambda a: a.id):
            if asset.id in self._assets or (base is not None and asset.id in base):
                raise AssetError(f"duplicate asset id: {asset.id}")
            self._assets[asset.id] = asset
        self.warnings: List[str] = list(warnings or [])

        self._by_kind: Dict[AssetKind, List[str]] = {kind: [] for kind in AssetKind}
        self._by_tag: Dict[str, List[str]] = {}
        for asset_id, asset in self._assets.items():
            self._by_kind[asset.kind].append(asset_id)
            for tag in asset.tags:
                self._by_tag.setdefault(tag, []).append(asset_id)

    def __len__(self) -> int:
        return len(self._assets) + (len(self._base) if self._base is not None else 0)

    def __contains__(self, asset_id: str) -> bool:
        if asset_id in self._assets:
            return True
        return self._base is not None and asset_id in self._base

    def __iter__(self) -> Iterator[Asset]:
        for asset_id in self.ids():
            yield self.get(asset_id)

    def ids(self) -> List[str]:
        own = list(self._assets)
        if self._base is None:
            return own
        return sorted(own + self._base.ids())

    def get(self, asset_id: str) -> Asset:
        asset = self._assets.get(asset_id)
        if asset is not None:
            return asset
        if self._base is not None:
            return self._base.get(asset_id)
        raise AssetError(f"unknown asset id: {asset_id}")

    def of_kind(self, kind: AssetKind) -> List[str]:
        ids = list(self._by_kind[kind])
        if self._base is not None:
            ids = sorted(ids + self._base.of_kind(kind))
        return ids

    def with_tag(self, tag: str) -> List[str]:
        ids = list(self._by_tag.get(tag, []))
        if self._base is not None:
            ids = sorted(ids + self._base.with_tag(tag))
        return ids

    def extended(self, assets: Iterable[Asset]) -> 'AssetCatalog':
        return AssetCatalog(assets, base=self)

    def counts(self) -> Dict[str, int]:
        return {kind.value: len(self.of_kind(kind)) for kind in AssetKind}

    def fingerprint(self) -> str:
        """SHA-256 over ids and pixel bytes, stable across loads"""
        digest = hashlib.sha256()
        for asset in self:
            digest.update(asset.id.encode('utf-8'))
            digest.update(str(asset.pixels.shape).encode('ascii'))
            digest.update(np.ascontiguousarray(asset.pixels).tobytes())
        return digest.hexdigest()


def _wrap_angle(theta: float) -> float:
    """Map an angle into (-pi, pi]"""
    if -math.pi < theta <= math.pi:
        return float(theta)
    return float(theta - 2.0 * math.pi * math.ceil((theta - math.pi) / (2.0 * math.pi)))


@dataclass(frozen=True)
class Placement:
    asset_id: str
    center: Tuple[float, float]
    scale: float = 1.0
    rotation: float = 0.0
    z: int = 0

    def __post_init__(self):
        if not (MIN_SCALE <= self.scale <= MAX_SCALE):
            raise SceneError(f"scale {self.scale} outside [{MIN_SCALE}, {MAX_SCALE}]")
        object.__setattr__(self, 'center', (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, 'scale', float(self.scale))
        object.__setattr__(self, 'rotation', _wrap_angle(float(self.rotation)))
        object.__setattr__(self, 'z', int(self.z))

    def with_pose(self, center: Optional[Tuple[float, float]] = None, scale: Optional[float] = None,
                  rotation: Optional[float] = None, asset_id: Optional[str] = None) -> 'Placement':
        return replace(
            self,
            center=self.center if center is None else center,
            scale=self.scale if scale is None else scale,
            rotation=self.rotation if rotation is None else rotation,
            asset_id=self.asset_id if asset_id is None else asset_id,
        )

    def to_dict(self) -> Dict:
        return {
            'asset_id': self.asset_id,
            'center': [self.center[0], self.center[1]],
            'scale': self.scale,
            'rotation': self.rotation,
            'z': self.z,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Placement':
        return cls(
            asset_id=data['asset_id'],
            center=tuple(data['center']),
            scale=data['scale'],
            rotation=data['rotation'],
            z=data['z'],
        )


@dataclass(frozen=True)
class Scene:
    """Canvas + background + z-ordered placements: the geometric ground truth"""
    width: int
    height: int
    background: Union[str, RGB]
    placements: Tuple[Placement, ...] = ()

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise SceneError(f"invalid canvas {self.width}x{self.height}")
        if not isinstance(self.background, str):
            object.__setattr__(self, 'background', tuple(int(c) for c in self.background))
        ordered = tuple(sorted(self.placements, key=lambda p: p.z))
        z_values = [p.z for p in ordered]
        if len(set(z_values)) != len(z_values):
            raise SceneError(f"duplicate z values in scene: {z_values}")
        object.__setattr__(self, 'placements', ordered)

    @property
    def size(self) -> Tuple[int, int]:
        return self.width, self.height

    @property
    def is_blank(self) -> bool:
        return not isinstance(self.background, str)

    @property
    def next_z(self) -> int:
        return self.placements[-1].z + 1 if self.placements else 0

    def with_placements(self, placements: Iterable[Placement]) -> 'Scene':
        return replace(self, placements=tuple(placements))

    def without(self, index: int) -> 'Scene':
        return self.with_placements(p for i, p in enumerate(self.placements) if i != index)

    def replaced(self, index: int, placement: Placement) -> 'Scene':
        placements = list(self.placements)
        placements[index] = placement
        return self.with_placements(placements)

    def to_dict(self) -> Dict:
        return {
            'width': self.width,
            'height': self.height,
            'background': self.background if isinstance(self.background, str) else list(self.background),
            'placements': [p.to_dict() for p in self.placements],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Scene':
        background = data['background']
        if not isinstance(background, str):
            background = tuple(background)
        return cls(
            width=data['width'],
            height=data['height'],
            background=background,
            placements=tuple(Placement.from_dict(p) for p in data['placements']),
        )


@dataclass(frozen=True)
class BBox:
    """Half-open axis-aligned box in canvas pixels"""
    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise SceneError(f"empty box ({self.x0}, {self.y0}, {self.x1}, {self.y1})")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def center(self) -> Tuple[float, float]:
        return (self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0

    def intersection_area(self, other: 'BBox') -> int:
        w = min(self.x1, other.x1) - max(self.x0, other.x0)
        h = min(self.y1, other.y1) - max(self.y0, other.y0)
        return max(0, w) * max(0, h)

    def union(self, other: 'BBox') -> 'BBox':
        return BBox(min(self.x0, other.x0), min(self.y0, other.y0),
                    max(self.x1, other.x1), max(self.y1, other.y1))

    def to_list(self) -> List[int]:
        return [self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def from_list(cls, values: Iterable[int]) -> 'BBox':
        x0, y0, x1, y1 = (int(v) for v in values)
        return cls(x0, y0, x1, y1)


@dataclass(frozen=True)
class ColorName:
    name: str
    anchor: RGB


@dataclass(frozen=True)
class DragPoint:
    """Normalized drag: source (x, y) in [0,1], displacement (dx, dy) in [-1,1]"""
    x: float
    y: float
    dx: float
    dy: float

    def to_list(self) -> List[float]:
        return [self.x, self.y, self.dx, self.dy]


DragSpec = Tuple[DragPoint, ...]


@dataclass(frozen=True)
class EditOp:
    kind: EditOpKind
    descriptors: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, 'descriptors', tuple(self.descriptors))
        expected = 2 if self.kind == EditOpKind.REPLACE else 1
        if len(self.descriptors) != expected:
            raise PromptError(
                f"{self.kind.value} takes {expected} descriptor(s), got {len(self.descriptors)}")
        if any(not d.strip() for d in self.descriptors):
            raise PromptError('edit descriptors must be non-empty')

    def to_dict(self) -> Dict:
        return {'kind': self.kind.value, 'descriptors': list(self.descriptors)}


@dataclass(frozen=True)
class TextSpec:
    """Every attribute of a rendered text line, recorded for prompt synthesis"""
    text: str
    font: str
    color: RGB
    color_name: str
    thickness: int
    size: int
    placement: Tuple[float, float]

    def to_dict(self) -> Dict:
        return {
            'text': self.text,
            'font': self.font,
            'color': list(self.color),
            'color_name': self.color_name,
            'thickness': self.thickness,
            'size': self.size,
            'placement': list(self.placement),
        }


IMAGE_ROLES = ('src', 'src2', 'mask', 'tgt')


@dataclass
class Sample:
    """One dataset record with its in-memory images"""
    task: TaskFamily
    seed: int
    target: np.ndarray
    sources: List[np.ndarray] = field(default_factory=list)
    mask: Optional[np.ndarray] = None
    prompt: str = ''
    raw_prompt: str = ''
    metadata: Dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.sources) > 2:
            raise ValueError('a sample carries at most two source images')
        size = self.target.shape[:2]
        for image in list(self.sources) + ([self.mask] if self.mask is not None else []):
            if image.shape[:2] != size:
                raise ValueError(f"image size {image.shape[:2]} differs from target {size}")

    @property
    def width(self) -> int:
        return int(self.target.shape[1])

    @property
    def height(self) -> int:
        return int(self.target.shape[0])

    def images(self) -> Dict[str, np.ndarray]:
        """Present images keyed by file role, in canonical role order"""
        images = {}
        for role, image in zip(('src', 'src2'), self.sources):
            images[role] = image
        if self.mask is not None:
            images['mask'] = self.mask
        images['tgt'] = self.target
        return {role: images[role] for role in IMAGE_ROLES if role in images}


@dataclass(frozen=True)
class ManifestRecord:
    sample_id: str
    task: str
    seed: int
    bucket: int
    prompt: str
    raw_prompt: str
    files: Dict[str, Optional[str]]
    meta: Dict

    def to_dict(self) -> Dict:
        # key order is part of the on-disk format
        return {
            'sample_id': self.sample_id,
            'task': self.task,
            'seed': self.seed,
            'bucket': self.bucket,
            'prompt': self.prompt,
            'raw_prompt': self.raw_prompt,
            'files': {role: self.files.get(role) for role in IMAGE_ROLES},
            'meta': self.meta,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'ManifestRecord':
        return cls(
            sample_id=data['sample_id'],
            task=data['task'],
            seed=int(data['seed']),
            bucket=int(data['bucket']),
            prompt=data['prompt'],
            raw_prompt=data['raw_prompt'],
            files=dict(data['files']),
            meta=data['meta'],
        )


@dataclass
class ShardManifest:
    shard_id: str
    config_hash: str
    master_seed: int
    records: List[ManifestRecord] = field(default_factory=list)

    def to_dict(self) -> Dict:
        return {
            'shard_id': self.shard_id,
            'config_hash': self.config_hash,
            'master_seed': self.master_seed,
            'records': [r.to_dict() for r in self.records],
        }
