"""
Run service: plans and executes generation runs, drives validation and renders
preview contact sheets
"""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from PIL import Image, ImageDraw
from tqdm import tqdm

from config import GenConfig
from exceptions import PipelineError
from models import Sample, TaskFamily
from services.asset_service import AssetService
from services.dataset_service import (RUN_INFO_NAME, derive_seed, sample_name, shard_name,
                                      validate_run, write_run_info, write_shard)
from services.polish_service import PolishService
from services.taskgen_service import generate_sample

logger = logging.getLogger(__name__)

MAX_ERROR_RATE = 0.01
MAX_PREVIEW = 64
PREVIEW_CELL = 256

_worker_state: Dict = {}


@dataclass(frozen=True)
class PlannedSample:
    index: int
    task: TaskFamily
    task_index: int
    seed: int


def plan(cfg: GenConfig) -> List[PlannedSample]:
    """Deterministic sample stream with task families interleaved evenly"""
    counts = cfg.requested_counts()
    order = {task: i for i, task in enumerate(TaskFamily)}
    slots = []
    for task, n in counts.items():
        for j in range(n):
            slots.append(((j + 0.5) / n, order[task], task, j))
    slots.sort(key=lambda slot: (slot[0], slot[1]))
    return [PlannedSample(index=i, task=task, task_index=j, seed=derive_seed(cfg.master_seed, task, j))
            for i, (_, _, task, j) in enumerate(slots)]


def _init_worker(asset_root: str, config: Dict) -> None:
    _worker_state['catalog'] = AssetService(asset_root).catalog
    _worker_state['config'] = GenConfig.from_dict(config)


def _generate(item: PlannedSample) -> Tuple[PlannedSample, Optional[Sample], Optional[str]]:
    try:
        sample = generate_sample(item.task, item.seed, _worker_state['catalog'], _worker_state['config'])
        return item, sample, None
    except (PipelineError, ValueError) as e:
        return item, None, str(e)


def run(cfg: GenConfig) -> Dict:
    """Generate every planned sample into shards under cfg.out_dir"""
    started = time.monotonic()
    catalog = AssetService(cfg.asset_root).catalog
    items = plan(cfg)
    out = Path(cfg.out_dir)
    batches = [items[i:i + cfg.shard_size] for i in range(0, len(items), cfg.shard_size)]
    shard_ids = [shard_name(i) for i in range(len(batches))]

    write_run_info(out, {
        'config': cfg.canonical(),
        'config_hash': cfg.config_hash,
        'master_seed': cfg.master_seed,
        'asset_root': str(cfg.asset_root),
        'catalog_fingerprint': catalog.fingerprint(),
        'shards': shard_ids,
    })
    logger.info(f"Planned {len(items)} samples in {len(batches)} shard(s), config {cfg.config_hash[:12]}")

    polish_service = PolishService.from_config(cfg.polisher)
    rows = []
    executor = None
    if cfg.jobs > 1:
        executor = ProcessPoolExecutor(max_workers=cfg.jobs, initializer=_init_worker,
                                       initargs=(str(cfg.asset_root), cfg.to_dict()))
    else:
        _worker_state['catalog'] = catalog
        _worker_state['config'] = cfg

    try:
        progress = tqdm(total=len(items), desc='gen', unit='sample', disable=None)
        for shard_id, batch in zip(shard_ids, batches):
            if executor is not None:
                results = list(executor.map(_generate, batch, chunksize=8))
            else:
                results = [_generate(item) for item in batch]

            samples, ids = [], []
            for item, sample, error in results:
                rows.append({'task': item.task.value, 'ok': error is None})
                if error is not None:
                    logger.warning(f"{item.task.value} sample {item.index} (seed {item.seed}) failed: {error}")
                    continue
                samples.append(sample)
                ids.append(sample_name(item.index))

            polish_service.polish_samples(samples)
            write_shard(samples, out, shard_id, cfg.config_hash, cfg.master_seed, ids)
            progress.update(len(batch))
        progress.close()
    finally:
        if executor is not None:
            executor.shutdown()

    elapsed = max(time.monotonic() - started, 1e-9)
    frame = pd.DataFrame(rows, columns=['task', 'ok'])
    per_task = {task.value: {'generated': 0, 'failed': 0} for task in TaskFamily}
    if not frame.empty:
        for task, group in frame.groupby('task'):
            per_task[task] = {'generated': int(group['ok'].sum()),
                              'failed': int((~group['ok']).sum())}
    generated = sum(v['generated'] for v in per_task.values())
    failed = sum(v['failed'] for v in per_task.values())
    error_rate = failed / float(len(items)) if items else 0.0

    summary = {
        'success': error_rate <= MAX_ERROR_RATE,
        'out_dir': str(out),
        'config_hash': cfg.config_hash,
        'shards': len(shard_ids),
        'generated': generated,
        'failed': failed,
        'error_rate': error_rate,
        'seconds': elapsed,
        'samples_per_second': generated / elapsed,
        'per_task': per_task,
    }
    logger.info(f"Generated {generated} samples ({failed} failed) in {elapsed:.1f}s, "
                f"{summary['samples_per_second']:.1f} samples/s")
    return summary


def validate(out_dir, asset_root: Optional[str] = None) -> Dict:
    """validate_run plus an exit code: 0 all pass, 1 failures, 2 unreadable run"""
    try:
        report = validate_run(out_dir, asset_root=asset_root)
    except PipelineError as e:
        logger.error(f"Cannot validate {out_dir}: {e}")
        return {'success': False, 'exit_code': 2, 'error': str(e)}
    report['exit_code'] = 0 if report['success'] else 1
    return report


def _as_rgb(image: Optional[np.ndarray], size: Tuple[int, int]) -> Image.Image:
    if image is None:
        return Image.new('RGB', size, (32, 32, 32))
    if image.ndim == 2:
        return Image.fromarray(image, mode='L').convert('RGB')
    return Image.fromarray(image[:, :, :3], mode='RGB')


def _draw_drags(panel: Image.Image, drags: List[List[float]]) -> None:
    draw = ImageDraw.Draw(panel)
    width, height = panel.size
    for x, y, dx, dy in drags:
        start = (x * width, y * height)
        end = ((x + dx) * width, (y + dy) * height)
        draw.line([start, end], fill=(255, 0, 0), width=3)
        draw.ellipse([start[0] - 4, start[1] - 4, start[0] + 4, start[1] + 4], fill=(255, 0, 0))
        draw.ellipse([end[0] - 4, end[1] - 4, end[0] + 4, end[1] + 4], fill=(0, 0, 255))


def render_preview(cfg: GenConfig, task: TaskFamily, n: int, catalog=None) -> Image.Image:
    """n rows of (source | target) panels for one task family"""
    if not 1 <= n <= MAX_PREVIEW:
        raise ValueError(f"preview size must be in 1..{MAX_PREVIEW}, got {n}")
    catalog = catalog or AssetService(cfg.asset_root).catalog
    cell = (PREVIEW_CELL, PREVIEW_CELL)
    sheet = Image.new('RGB', (2 * PREVIEW_CELL, n * PREVIEW_CELL), (0, 0, 0))
    for row in range(n):
        sample = generate_sample(task, derive_seed(cfg.master_seed, task, row), catalog, cfg)
        source = sample.sources[0] if sample.sources else None
        size = (sample.width, sample.height)
        left = _as_rgb(source, size)
        if 'drag' in sample.metadata:
            _draw_drags(left, sample.metadata['drag'])
        right = _as_rgb(sample.target, size)
        sheet.paste(left.resize(cell, Image.BILINEAR), (0, row * PREVIEW_CELL))
        sheet.paste(right.resize(cell, Image.BILINEAR), (PREVIEW_CELL, row * PREVIEW_CELL))
    return sheet


def preview(cfg: GenConfig, task: TaskFamily, n: int, out_path) -> Dict:
    sheet = render_preview(cfg, task, n)
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sheet.save(path, format='PNG')
    logger.info(f"Wrote {n}-row {task.value} preview to {path}")
    return {'success': True, 'path': str(path), 'rows': n, 'cols': 2, 'size': list(sheet.size)}


def run_exists(out_dir) -> bool:
    return (Path(out_dir) / RUN_INFO_NAME).exists()
