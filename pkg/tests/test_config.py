"""
Tests for config loading, validation, overrides and hashing
"""

import json

import pytest

from config import GenConfig, apply_overrides, load_config
from exceptions import ConfigError
from models import TaskFamily


def _write(tmp_path, data):
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(data))
    return str(path)


def test_defaults_are_valid():
    config = load_config()
    assert config.validate() == []
    assert config.shard_size == 1000
    assert config.polisher.provider == 'identity'


def test_load_config_file(tmp_path):
    config = load_config(_write(tmp_path, {
        'master_seed': 42,
        'canvas': {'sizes': [[256, 128]], 'weights': [1]},
        'counts': {'segdet': 5},
    }))
    assert config.master_seed == 42
    assert config.canvas.sizes == [[256, 128]]
    assert config.canvas.weights == [1.0]
    assert isinstance(config.canvas.weights[0], float)
    assert config.requested_counts()[TaskFamily.SEGDET] == 5


def test_unknown_and_mistyped_keys(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        load_config(_write(tmp_path, {'master_seeed': 1, 'scene': {'count': 'many', 'colour': 'red'}}))
    messages = excinfo.value.messages
    assert 'master_seeed: unknown key' in messages
    assert 'scene.colour: unknown key' in messages
    assert 'scene.count: expected a list' in messages


def test_validation_messages(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        load_config(_write(tmp_path, {
            'canvas': {'sizes': [[32, 512]], 'weights': [1.0]},
            'scene': {'count': [4, 2]},
            'subject': {'count': [1, 40]},
            'polisher': {'provider': 'http'},
        }))
    messages = excinfo.value.messages
    assert any(m.startswith('canvas.sizes[0]') for m in messages)
    assert 'scene.count: low must be <= high' in messages
    assert 'subject.count: must be >= 3' in messages
    assert 'subject.count: must be <= 31' in messages
    assert 'polisher.url: required for the http provider' in messages


def test_mask_ranges_are_bounded(tmp_path):
    """Mask ranges that could blank out most of the canvas are rejected"""
    with pytest.raises(ConfigError) as excinfo:
        load_config(_write(tmp_path, {'masks': {
            'edge_band': [0.5, 0.5],
            'edge_sides': [4, 4],
            'block_area': [0.01, 0.3],
            'stroke_radius': [0.02, 0.2],
        }}))
    messages = excinfo.value.messages
    assert 'masks.edge_band: must be <= 0.4' in messages
    assert 'masks.block_area: must be >= 0.02' in messages
    assert 'masks.block_area: must be <= 0.25' in messages
    assert 'masks.stroke_radius: must be <= 0.08' in messages
    assert not any(m.startswith('masks.edge_sides') for m in messages)

    widest = load_config(_write(tmp_path, {'masks': {'edge_band': [0.1, 0.4], 'edge_sides': [4, 4]}}))
    assert widest.masks.edge_band == [0.1, 0.4]


def test_invalid_json(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{')
    with pytest.raises(ConfigError):
        load_config(str(path))
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / 'missing.json'))


def test_requested_counts_largest_remainder():
    config = GenConfig(total=10, mix={task.value: 1.0 for task in TaskFamily}, counts={'segdet': 3})
    counts = config.requested_counts()
    assert counts[TaskFamily.SEGDET] == 3
    assert sum(counts.values()) == 13
    assert counts[TaskFamily.T2I_TEXT] == 2
    assert counts[TaskFamily.INSTRUCT_EDIT] == 1


def test_hash_ignores_runtime_fields():
    base = GenConfig()
    moved = GenConfig(asset_root='/elsewhere', out_dir='/tmp/x', jobs=8)
    moved.polisher.provider = 'openai'
    assert base.config_hash == moved.config_hash
    assert GenConfig(master_seed=1).config_hash != base.config_hash
    assert len(base.config_hash) == 64


def test_canonical_round_trip():
    config = GenConfig(master_seed=3, counts={'inpaint': 2})
    assert GenConfig.from_dict(config.canonical()).config_hash == config.config_hash


def test_apply_overrides():
    config = GenConfig(counts={'segdet': 1})
    updated = apply_overrides(config, seed=9, out='/data/run', counts={'inpaint': 4},
                              jobs=2, assets='/data/assets', shard_size=50)
    assert (updated.master_seed, updated.out_dir, updated.jobs) == (9, '/data/run', 2)
    assert (updated.asset_root, updated.shard_size) == ('/data/assets', 50)
    assert updated.counts == {'segdet': 1, 'inpaint': 4}
    assert config.counts == {'segdet': 1}

    with pytest.raises(ConfigError):
        apply_overrides(config, counts={'teleport': 1})
    with pytest.raises(ConfigError):
        apply_overrides(config, shard_size=0)


if __name__ == '__main__':
    pytest.main([__file__])
