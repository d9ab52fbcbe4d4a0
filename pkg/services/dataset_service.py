"""
Dataset service: aspect buckets, per-sample seeds, atomic shard writing and
replay validation of finished runs
"""

import hashlib
import json
import logging
import math
import shutil
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from PIL import Image
from tqdm import tqdm

from config import GenConfig
from exceptions import DatasetError, PipelineError
from models import IMAGE_ROLES, AssetCatalog, ManifestRecord, Sample, ShardManifest, TaskFamily
from services.asset_service import AssetService
from services.taskgen_service import generate_sample

logger = logging.getLogger(__name__)

BUCKET_COUNT = 31
MID_BUCKET = 15
MAX_ASPECT = 4.0
MANIFEST_NAME = 'manifest.jsonl'
RUN_INFO_NAME = 'run.json'
MAX_REPORTED_FAILURES = 10
LOCALITY_TASKS = {TaskFamily.INSTRUCT_EDIT, TaskFamily.DRAG_EDIT, TaskFamily.INPAINT,
                  TaskFamily.OUTPAINT, TaskFamily.SEGDET}


@dataclass(frozen=True)
class Bucket:
    index: int
    low: float
    high: float

    def contains(self, aspect: float) -> bool:
        return self.low <= aspect <= self.high


def bucket_of(width: int, height: int) -> int:
    """Log-uniform aspect bucket in [0, 30]; bucket(w, h) + bucket(h, w) == 30"""
    if width <= 0 or height <= 0:
        raise ValueError(f"invalid size {width}x{height}")
    ratio = min(max(width, height) / float(min(width, height)), MAX_ASPECT)
    # computed from the >= 1 ratio so mirrored sizes round symmetrically
    offset = MID_BUCKET * math.log2(ratio) / 2.0
    if width >= height:
        return int(round(MID_BUCKET + offset))
    return int(round(MID_BUCKET - offset))


def buckets() -> List[Bucket]:
    """The 31 aspect intervals, adjacent and covering [1/4, 4]"""
    result = []
    for index in range(BUCKET_COUNT):
        low = MAX_ASPECT ** ((index - MID_BUCKET - 0.5) / MID_BUCKET)
        high = MAX_ASPECT ** ((index - MID_BUCKET + 0.5) / MID_BUCKET)
        result.append(Bucket(index, max(low, 1 / MAX_ASPECT), min(high, MAX_ASPECT)))
    return result


def derive_seed(master_seed: int, task: TaskFamily, sample_index: int) -> int:
    """Stable 64-bit seed for one sample, identical on every platform"""
    key = f"{master_seed}:{task.value}:{sample_index}".encode('utf-8')
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), 'little')


def shard_name(shard_index: int) -> str:
    return f"shard-{shard_index:05d}"


def sample_name(global_index: int) -> str:
    return f"{global_index:08d}"


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def dumps(data) -> str:
    return json.dumps(data, ensure_ascii=False, separators=(',', ':'), default=_json_default)


def save_png(image: np.ndarray, path: Path) -> None:
    Image.fromarray(np.ascontiguousarray(image)).save(path, format='PNG')


def load_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        img.load()
        return np.asarray(img).copy()


def write_shard(samples: Sequence[Sample], out_dir, shard_id: str, config_hash: str = '',
                master_seed: int = 0, sample_ids: Optional[Sequence[str]] = None) -> ShardManifest:
    """Write PNGs + manifest.jsonl into <out>/<shard_id>, atomically via a temp dir"""
    out = Path(out_dir)
    if sample_ids is None:
        sample_ids = [sample_name(i) for i in range(len(samples))]
    if len(sample_ids) != len(samples):
        raise DatasetError('one sample id is needed per sample')
    if list(sample_ids) != sorted(set(sample_ids)):
        raise DatasetError('sample ids must be strictly increasing within a shard')

    final_dir = out / shard_id
    if final_dir.exists():
        raise DatasetError(f"shard directory already exists: {final_dir}")

    manifest = ShardManifest(shard_id=shard_id, config_hash=config_hash, master_seed=master_seed)
    temp_dir = None
    try:
        out.mkdir(parents=True, exist_ok=True)
        temp_dir = Path(tempfile.mkdtemp(prefix=f".{shard_id}.", dir=out))
        lines = []
        for sample_id, sample in zip(sample_ids, samples):
            files: Dict[str, Optional[str]] = {role: None for role in IMAGE_ROLES}
            for role, image in sample.images().items():
                filename = f"{sample_id}_{role}.png"
                save_png(image, temp_dir / filename)
                files[role] = filename

            meta = dict(sample.metadata)
            meta['config_hash'] = config_hash
            record = ManifestRecord(
                sample_id=sample_id,
                task=sample.task.value,
                seed=int(sample.seed),
                bucket=bucket_of(sample.width, sample.height),
                prompt=sample.prompt,
                raw_prompt=sample.raw_prompt,
                files=files,
                meta={key: meta[key] for key in sorted(meta)},
            )
            manifest.records.append(record)
            lines.append(dumps(record.to_dict()))

        (temp_dir / MANIFEST_NAME).write_text(
            ''.join(line + '\n' for line in lines), encoding='utf-8')
        temp_dir.rename(final_dir)
    except Exception as e:
        if temp_dir is not None:
            shutil.rmtree(temp_dir, ignore_errors=True)
        if isinstance(e, DatasetError):
            raise
        raise DatasetError(f"failed to write shard {shard_id}: {e}") from e

    logger.debug(f"Wrote {len(manifest.records)} samples to {final_dir}")
    return manifest


def read_manifest(shard_dir) -> List[ManifestRecord]:
    path = Path(shard_dir) / MANIFEST_NAME
    if not path.is_file():
        raise DatasetError(f"missing manifest: {path}")
    records = []
    with path.open(encoding='utf-8') as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(ManifestRecord.from_dict(json.loads(line)))
            except (ValueError, KeyError, TypeError) as e:
                raise DatasetError(f"{path}:{number}: malformed record ({e})")
    return records


def write_run_info(out_dir, info: Dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    temp = out / f".{RUN_INFO_NAME}.tmp"
    temp.write_text(json.dumps(info, ensure_ascii=False, indent=2, sort_keys=True) + '\n',
                    encoding='utf-8')
    temp.replace(out / RUN_INFO_NAME)


def read_run_info(out_dir) -> Dict:
    path = Path(out_dir) / RUN_INFO_NAME
    if not path.is_file():
        raise DatasetError(f"missing run description: {path}")
    try:
        return json.loads(path.read_text(encoding='utf-8'))
    except ValueError as e:
        raise DatasetError(f"{path}: invalid JSON ({e})")


def _region_mask(boxes: Sequence[Sequence[int]], shape: Tuple[int, int]) -> np.ndarray:
    region = np.zeros(shape, dtype=bool)
    for x0, y0, x1, y1 in boxes:
        region[max(0, y0):max(0, y1), max(0, x0):max(0, x1)] = True
    return region


def check_pair_locality(record: ManifestRecord, images: Dict[str, np.ndarray]) -> Optional[str]:
    """None when source and target agree outside the declared edit region"""
    if TaskFamily(record.task) not in LOCALITY_TASKS:
        return None
    source, target = images.get('src'), images.get('tgt')
    if source is None or target is None:
        return 'pair locality: source or target image missing'
    if source.shape != target.shape:
        return f"pair locality: source {source.shape} and target {target.shape} differ in shape"

    shape = target.shape[:2]
    if record.meta.get('edit_mask'):
        mask = images.get('mask')
        if mask is None:
            return 'pair locality: mask image missing'
        region = mask > 0
    else:
        region = _region_mask(record.meta.get('edit_region', []), shape)

    outside = ~region
    differs = np.any(source != target, axis=-1) if source.ndim == 3 else source != target
    leaked = int(np.count_nonzero(differs & outside))
    if leaked:
        return f"pair locality: {leaked} pixel(s) differ outside the edit region"
    return None


def check_record(shard_dir: Path, record: ManifestRecord, catalog: AssetCatalog, cfg: GenConfig,
                 config_hash: str) -> Optional[str]:
    """First failure found for one record, or None when it replays exactly"""
    if record.meta.get('config_hash') != config_hash:
        return 'config hash does not match the run'

    images = {}
    for role in IMAGE_ROLES:
        filename = record.files.get(role)
        if filename is None:
            continue
        path = shard_dir / filename
        if not path.is_file():
            return f"missing file {filename}"
        try:
            images[role] = load_png(path)
        except Exception as e:
            return f"cannot decode {filename} ({e})"

    try:
        replayed = generate_sample(TaskFamily(record.task), record.seed, catalog, cfg)
    except (PipelineError, ValueError) as e:
        return f"replay failed: {e}"

    expected = replayed.images()
    if set(expected) != set(images):
        return f"replay produced roles {sorted(expected)}, manifest lists {sorted(images)}"
    for role, image in expected.items():
        if image.shape != images[role].shape or not np.array_equal(image, images[role]):
            return f"replay mismatch in {role} image"
    if replayed.raw_prompt != record.raw_prompt:
        return 'replay mismatch in raw_prompt'

    return check_pair_locality(record, images)


def orphan_files(shard_dir: Path, records: Sequence[ManifestRecord]) -> List[str]:
    """Names in a shard directory that no manifest record references"""
    referenced = {MANIFEST_NAME}
    for record in records:
        referenced.update(name for name in record.files.values() if name)
    return sorted(path.name for path in shard_dir.iterdir() if path.name not in referenced)


def validate_run(out_dir, asset_root: Optional[str] = None,
                 catalog: Optional[AssetCatalog] = None) -> Dict:
    """Decode, replay and locality-check every record of a finished run"""
    out = Path(out_dir)
    info = read_run_info(out)
    cfg = GenConfig.from_dict(info['config'])
    config_hash = info['config_hash']
    if cfg.config_hash != config_hash:
        raise DatasetError('run.json config does not hash to its recorded config_hash')

    if catalog is None:
        catalog = AssetService(asset_root or info.get('asset_root', cfg.asset_root)).catalog
    if catalog.fingerprint() != info.get('catalog_fingerprint'):
        logger.warning('Asset catalog differs from the one used for generation; replay may fail')

    shard_ids = info.get('shards', [])
    if not shard_ids:
        raise DatasetError(f"run at {out} has no shards")

    rows = []
    orphans = []
    for shard_id in shard_ids:
        shard_dir = out / shard_id
        if not shard_dir.is_dir():
            raise DatasetError(f"missing shard directory: {shard_dir}")
        records = read_manifest(shard_dir)
        orphans.extend(f"{shard_id}/{name}" for name in orphan_files(shard_dir, records))
        for record in tqdm(records, desc=shard_id, disable=None, leave=False):
            error = check_record(shard_dir, record, catalog, cfg, config_hash)
            rows.append({'shard': shard_id, 'sample_id': record.sample_id, 'task': record.task,
                         'passed': error is None, 'error': error})

    frame = pd.DataFrame(rows, columns=['shard', 'sample_id', 'task', 'passed', 'error'])
    per_task = {}
    if not frame.empty:
        grouped = frame.groupby('task')['passed'].agg(['sum', 'count'])
        per_task = {task: {'passed': int(row['sum']), 'total': int(row['count'])}
                    for task, row in grouped.iterrows()}
    failures = frame[~frame['passed']].head(MAX_REPORTED_FAILURES) if not frame.empty else frame
    passed = int(frame['passed'].sum()) if not frame.empty else 0

    report = {
        'success': passed == len(frame) and not orphans,
        'total': int(len(frame)),
        'passed': passed,
        'failed': int(len(frame) - passed),
        'per_task': per_task,
        'failures': failures[['shard', 'sample_id', 'task', 'error']].to_dict('records'),
        'orphans': orphans,
    }
    if orphans:
        logger.warning(f"{len(orphans)} file(s) not referenced by any manifest record")
    logger.info(f"Validated {report['total']} samples: {report['passed']} passed, {report['failed']} failed")
    return report
