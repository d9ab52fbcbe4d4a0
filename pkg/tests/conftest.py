"""
Shared fixtures: a seeded procedural asset root and a small generation config
"""

import json

import pytest

from config import GenConfig
from seed_assets import seed_asset_root
from services.asset_service import load_catalog


def small_config_dict(asset_root, out_dir) -> dict:
    """Canvas and ranges sized so every task family fits on 128x128"""
    return {
        'asset_root': str(asset_root),
        'out_dir': str(out_dir),
        'master_seed': 7,
        'shard_size': 4,
        'canvas': {'sizes': [[128, 128]], 'weights': [1.0]},
        'scene': {'count': [1, 3], 'size_range': [0.15, 0.25]},
        'text': {'word_count': [1, 2], 'size_range': [16, 32]},
        'drag': {'distractors': [0, 1], 'size_range': [0.15, 0.25], 'translate_range': 0.15},
        'subject': {'count': [3, 4]},
        'masks': {'stroke_steps': [10, 40]},
    }


@pytest.fixture(scope='session')
def asset_root(tmp_path_factory):
    """Procedural stickers, backgrounds and two glyph fonts"""
    root = tmp_path_factory.mktemp('assets')
    seed_asset_root(root)
    return root


@pytest.fixture(scope='session')
def catalog(asset_root):
    return load_catalog(asset_root)


@pytest.fixture
def small_config(asset_root, tmp_path):
    return GenConfig.from_dict(small_config_dict(asset_root, tmp_path / 'out'))


@pytest.fixture
def config_file(asset_root, tmp_path):
    """The small config written to disk for the command-line tests"""
    path = tmp_path / 'config.json'
    path.write_text(json.dumps(small_config_dict(asset_root, tmp_path / 'out')))
    return path
