"""
Generation config: a dataclass tree loaded from JSON, with flag overrides and a
canonical hash that ignores runtime-only fields
"""

import dataclasses
import hashlib
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from exceptions import ConfigError
from models import TaskFamily

RUNTIME_FIELDS = ('asset_root', 'out_dir', 'jobs', 'polisher')
DEFAULT_SHARD_SIZE = 1000
MAX_SEED = 2 ** 64


def _default_mix() -> Dict[str, float]:
    return {task.value: (8.0 if task == TaskFamily.SEGDET else 12.0) for task in TaskFamily}


@dataclass
class CanvasConfig:
    sizes: List[List[int]] = field(default_factory=lambda: [[512, 512]])
    weights: List[float] = field(default_factory=lambda: [1.0])


@dataclass
class SceneConfig:
    count: List[int] = field(default_factory=lambda: [1, 5])
    size_range: List[float] = field(default_factory=lambda: [0.15, 0.35])
    rotation_range: List[float] = field(default_factory=lambda: [-math.pi / 6, math.pi / 6])
    overlap: str = 'none'
    background: str = 'any'


@dataclass
class ShapesConfig:
    shapes: List[str] = field(default_factory=lambda: ['circle', 'square', 'triangle'])
    colors: List[str] = field(default_factory=lambda: [
        'red', 'orange', 'yellow', 'green', 'cyan', 'blue', 'purple', 'pink',
        'brown', 'black', 'gray', 'magenta', 'teal', 'navy'])
    count: List[int] = field(default_factory=lambda: [1, 6])
    size_range: List[float] = field(default_factory=lambda: [0.08, 0.2])


@dataclass
class TextConfig:
    words: Optional[List[str]] = None
    word_count: List[int] = field(default_factory=lambda: [1, 4])
    size_range: List[int] = field(default_factory=lambda: [32, 80])
    thickness_range: List[int] = field(default_factory=lambda: [1, 3])
    fonts: Optional[List[str]] = None


@dataclass
class EditConfig:
    ops: List[str] = field(default_factory=lambda: ['add', 'remove', 'replace'])


@dataclass
class DragConfig:
    kinds: List[str] = field(default_factory=lambda: ['translate', 'scale', 'rotate'])
    points: List[int] = field(default_factory=lambda: [1, 4])
    translate_range: float = 0.25
    scale_range: List[float] = field(default_factory=lambda: [0.5, 2.0])
    rotation_range: List[float] = field(default_factory=lambda: [-math.pi / 2, math.pi / 2])
    size_range: List[float] = field(default_factory=lambda: [0.15, 0.3])
    distractors: List[int] = field(default_factory=lambda: [0, 2])


@dataclass
class MasksConfig:
    strokes: List[int] = field(default_factory=lambda: [1, 5])
    stroke_radius: List[float] = field(default_factory=lambda: [0.02, 0.08])
    stroke_steps: List[int] = field(default_factory=lambda: [20, 200])
    blocks: List[int] = field(default_factory=lambda: [1, 4])
    block_area: List[float] = field(default_factory=lambda: [0.02, 0.25])
    edge_sides: List[int] = field(default_factory=lambda: [1, 4])
    edge_band: List[float] = field(default_factory=lambda: [0.1, 0.4])
    fraction: List[float] = field(default_factory=lambda: [0.02, 0.6])


@dataclass
class InpaintConfig:
    masks: List[str] = field(default_factory=lambda: ['smear', 'block'])
    caption_probability: float = 0.5
    fill: int = 128
    pool: str = 'any'


@dataclass
class CondmapsConfig:
    maps: List[str] = field(default_factory=lambda: ['canny', 'depth', 'seg'])
    canny_low: float = 50.0
    canny_high: float = 150.0


@dataclass
class SubjectConfig:
    count: List[int] = field(default_factory=lambda: [3, 8])


@dataclass
class SegDetConfig:
    modes: List[str] = field(default_factory=lambda: ['segment', 'detect'])
    opacity: float = 0.6
    thickness: int = 3
    colors: List[str] = field(default_factory=lambda: ['red', 'green', 'blue', 'yellow', 'magenta', 'cyan'])


@dataclass
class PolisherConfig:
    provider: str = 'identity'
    url: str = ''
    model: str = 'gpt-3.5-turbo'
    timeout: float = 10.0
    max_in_flight: int = 4


@dataclass
class GenConfig:
    asset_root: str = 'assets'
    out_dir: str = 'out'
    master_seed: int = 0
    shard_size: int = DEFAULT_SHARD_SIZE
    jobs: int = 1
    total: int = 0
    counts: Dict[str, int] = field(default_factory=dict)
    mix: Dict[str, float] = field(default_factory=_default_mix)
    canvas: CanvasConfig = field(default_factory=CanvasConfig)
    scene: SceneConfig = field(default_factory=SceneConfig)
    shapes: ShapesConfig = field(default_factory=ShapesConfig)
    text: TextConfig = field(default_factory=TextConfig)
    edit: EditConfig = field(default_factory=EditConfig)
    drag: DragConfig = field(default_factory=DragConfig)
    masks: MasksConfig = field(default_factory=MasksConfig)
    inpaint: InpaintConfig = field(default_factory=InpaintConfig)
    condmaps: CondmapsConfig = field(default_factory=CondmapsConfig)
    subject: SubjectConfig = field(default_factory=SubjectConfig)
    segdet: SegDetConfig = field(default_factory=SegDetConfig)
    polisher: PolisherConfig = field(default_factory=PolisherConfig)

    def to_dict(self) -> Dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> 'GenConfig':
        errors: List[str] = []
        config = _build(cls, data, '', errors)
        if errors:
            raise ConfigError(errors)
        return config

    def canonical(self) -> Dict:
        """Resolved config without runtime fields; the basis of config_hash"""
        data = self.to_dict()
        for key in RUNTIME_FIELDS:
            data.pop(key, None)
        return data

    @property
    def config_hash(self) -> str:
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(payload.encode('utf-8')).hexdigest()

    def validate(self) -> List[str]:
        """Field-level messages for every violated constraint; empty iff valid"""
        errors = []
        tasks = {task.value for task in TaskFamily}

        if not 0 <= self.master_seed < MAX_SEED:
            errors.append('master_seed: must be in [0, 2^64)')
        if self.shard_size < 1:
            errors.append('shard_size: must be >= 1')
        if self.jobs < 1:
            errors.append('jobs: must be >= 1')
        if self.total < 0:
            errors.append('total: must be >= 0')
        for task, count in self.counts.items():
            if task not in tasks:
                errors.append(f"counts.{task}: unknown task")
            elif count < 0:
                errors.append(f"counts.{task}: must be >= 0")
        for task, weight in self.mix.items():
            if task not in tasks:
                errors.append(f"mix.{task}: unknown task")
            elif weight < 0:
                errors.append(f"mix.{task}: must be >= 0")
        if self.total > 0:
            open_tasks = [t for t in tasks if t not in self.counts]
            if sum(self.mix.get(t, 0.0) for t in open_tasks) <= 0:
                errors.append('mix: weights must sum > 0 when total > 0')

        if not self.canvas.sizes:
            errors.append('canvas.sizes: must not be empty')
        if len(self.canvas.weights) != len(self.canvas.sizes):
            errors.append('canvas.weights: must have one weight per size')
        elif any(w < 0 for w in self.canvas.weights) or sum(self.canvas.weights) <= 0:
            errors.append('canvas.weights: must be >= 0 and sum > 0')
        for i, size in enumerate(self.canvas.sizes):
            if len(size) != 2 or min(size) < 64:
                errors.append(f"canvas.sizes[{i}]: must be [width, height] with both >= 64")
            elif not 0.25 <= size[0] / size[1] <= 4.0:
                errors.append(f"canvas.sizes[{i}]: aspect ratio must lie in [1/4, 4]")

        _check_range(errors, 'scene.count', self.scene.count, 0, 31)
        _check_range(errors, 'scene.size_range', self.scene.size_range, 0.0, 1.0)
        _check_range(errors, 'scene.rotation_range', self.scene.rotation_range, -math.pi, math.pi)
        _check_choice(errors, 'scene.overlap', [self.scene.overlap], ('none', 'allow'))
        _check_choice(errors, 'scene.background', [self.scene.background], ('blank', 'asset', 'any'))
        _check_choice(errors, 'shapes.shapes', self.shapes.shapes, ('circle', 'square', 'triangle'))
        _check_range(errors, 'shapes.count', self.shapes.count, 1)
        _check_range(errors, 'shapes.size_range', self.shapes.size_range, 0.0, 1.0)
        _check_range(errors, 'text.word_count', self.text.word_count, 1)
        _check_range(errors, 'text.size_range', self.text.size_range, 8)
        _check_range(errors, 'text.thickness_range', self.text.thickness_range, 1)
        if self.text.words is not None and not self.text.words:
            errors.append('text.words: must not be empty')
        _check_choice(errors, 'edit.ops', self.edit.ops, ('add', 'remove', 'replace'))
        _check_choice(errors, 'drag.kinds', self.drag.kinds, ('translate', 'scale', 'rotate'))
        _check_range(errors, 'drag.points', self.drag.points, 1, 8)
        _check_range(errors, 'drag.scale_range', self.drag.scale_range, 0.5, 2.0)
        _check_range(errors, 'drag.rotation_range', self.drag.rotation_range, -math.pi / 2, math.pi / 2)
        _check_range(errors, 'drag.size_range', self.drag.size_range, 0.0, 1.0)
        _check_range(errors, 'drag.distractors', self.drag.distractors, 0)
        if not 0 <= self.drag.translate_range <= 1:
            errors.append('drag.translate_range: must be in [0, 1]')
        _check_range(errors, 'masks.strokes', self.masks.strokes, 1, 5)
        _check_range(errors, 'masks.stroke_radius', self.masks.stroke_radius, 0.02, 0.08)
        _check_range(errors, 'masks.stroke_steps', self.masks.stroke_steps, 1)
        _check_range(errors, 'masks.blocks', self.masks.blocks, 1, 4)
        _check_range(errors, 'masks.block_area', self.masks.block_area, 0.02, 0.25)
        _check_range(errors, 'masks.edge_sides', self.masks.edge_sides, 1, 4)
        _check_range(errors, 'masks.edge_band', self.masks.edge_band, 0.1, 0.4)
        _check_range(errors, 'masks.fraction', self.masks.fraction, 0.02, 0.6)
        _check_choice(errors, 'inpaint.masks', self.inpaint.masks, ('smear', 'block'))
        _check_choice(errors, 'inpaint.pool', [self.inpaint.pool], ('backgrounds', 'collages', 'any'))
        if not 0 <= self.inpaint.caption_probability <= 1:
            errors.append('inpaint.caption_probability: must be in [0, 1]')
        if not 0 <= self.inpaint.fill <= 255:
            errors.append('inpaint.fill: must be in [0, 255]')
        _check_choice(errors, 'condmaps.maps', self.condmaps.maps, ('canny', 'depth', 'seg'))
        if not 0 < self.condmaps.canny_low < self.condmaps.canny_high:
            errors.append('condmaps.canny_low: must satisfy 0 < canny_low < canny_high')
        _check_range(errors, 'subject.count', self.subject.count, 3, 31)
        _check_choice(errors, 'segdet.modes', self.segdet.modes, ('segment', 'detect'))
        if not 0 <= self.segdet.opacity <= 1:
            errors.append('segdet.opacity: must be in [0, 1]')
        if self.segdet.thickness < 1:
            errors.append('segdet.thickness: must be >= 1')
        if not self.segdet.colors:
            errors.append('segdet.colors: must not be empty')
        _check_choice(errors, 'polisher.provider', [self.polisher.provider], ('identity', 'http', 'openai'))
        if self.polisher.provider == 'http' and not self.polisher.url:
            errors.append('polisher.url: required for the http provider')
        if self.polisher.max_in_flight < 1:
            errors.append('polisher.max_in_flight: must be >= 1')
        return errors

    def requested_counts(self) -> Dict[TaskFamily, int]:
        """Samples per task: explicit counts plus `total` split over mix weights"""
        counts = {task: int(self.counts.get(task.value, 0)) for task in TaskFamily}
        open_tasks = [task for task in TaskFamily if task.value not in self.counts]
        weights = [max(0.0, float(self.mix.get(task.value, 0.0))) for task in open_tasks]
        if self.total <= 0 or sum(weights) <= 0:
            return counts

        quotas = [self.total * w / sum(weights) for w in weights]
        floors = [int(math.floor(q)) for q in quotas]
        leftover = self.total - sum(floors)
        # largest remainder, ties by task order
        order = sorted(range(len(open_tasks)), key=lambda i: (-(quotas[i] - floors[i]), i))
        for i in order[:leftover]:
            floors[i] += 1
        for task, n in zip(open_tasks, floors):
            counts[task] = n
        return counts


def _check_range(errors: List[str], name: str, values, lo=None, hi=None) -> None:
    if len(values) != 2:
        errors.append(f"{name}: must be a [low, high] pair")
        return
    low, high = values
    if low > high:
        errors.append(f"{name}: low must be <= high")
    if lo is not None and low < lo:
        errors.append(f"{name}: must be >= {lo}")
    if hi is not None and high > hi:
        errors.append(f"{name}: must be <= {hi}")


def _check_choice(errors: List[str], name: str, values, allowed) -> None:
    if not values:
        errors.append(f"{name}: must not be empty")
    for value in values:
        if value not in allowed:
            errors.append(f"{name}: {value!r} is not one of {', '.join(allowed)}")


def _coerce(tp, value, path: str, errors: List[str]):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)

    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path, errors)
    if origin is typing.Union:
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _coerce(inner, value, path, errors)
    if origin in (list, List):
        if not isinstance(value, (list, tuple)):
            errors.append(f"{path}: expected a list")
            return None
        return [_coerce(args[0], v, f"{path}[{i}]", errors) for i, v in enumerate(value)]
    if origin in (dict, Dict):
        if not isinstance(value, dict):
            errors.append(f"{path}: expected an object")
            return None
        return {str(k): _coerce(args[1], v, f"{path}.{k}", errors) for k, v in value.items()}
    if tp is bool:
        if not isinstance(value, bool):
            errors.append(f"{path}: expected true or false")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(f"{path}: expected an integer")
            return value
        return int(value)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"{path}: expected a number")
            return value
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            errors.append(f"{path}: expected a string")
        return value
    return value


def _build(cls, data, path: str, errors: List[str]):
    prefix = f"{path}." if path else ''
    if not isinstance(data, dict):
        errors.append(f"{path or 'config'}: expected an object")
        return cls()
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    for key in data:
        if key not in known:
            errors.append(f"{prefix}{key}: unknown key")
    values = {}
    for name in known:
        if name in data:
            values[name] = _coerce(hints[name], data[name], f"{prefix}{name}", errors)
    if errors:
        return cls()
    return cls(**values)


def load_config(path: Optional[str] = None) -> GenConfig:
    """Load, resolve and validate a config file; None gives the defaults"""
    if path is None:
        data = {}
    else:
        try:
            data = json.loads(Path(path).read_text(encoding='utf-8'))
        except OSError as e:
            raise ConfigError([f"config: cannot read {path} ({e})"], path)
        except ValueError as e:
            raise ConfigError([f"config: invalid JSON ({e})"], path)

    config = GenConfig.from_dict(data)
    errors = config.validate()
    if errors:
        raise ConfigError(errors, path)
    return config


def apply_overrides(config: GenConfig, seed: Optional[int] = None, out: Optional[str] = None,
                    counts: Optional[Dict[str, int]] = None, jobs: Optional[int] = None,
                    assets: Optional[str] = None, shard_size: Optional[int] = None) -> GenConfig:
    """Copy of the config with command-line overrides applied and re-validated"""
    updated = dataclasses.replace(config, counts=dict(config.counts))
    if seed is not None:
        updated.master_seed = seed
    if out is not None:
        updated.out_dir = out
    if jobs is not None:
        updated.jobs = jobs
    if assets is not None:
        updated.asset_root = assets
    if shard_size is not None:
        updated.shard_size = shard_size
    for task, count in (counts or {}).items():
        updated.counts[task] = count
    errors = updated.validate()
    if errors:
        raise ConfigError(errors)
    return updated
