"""
Tests for scene-derived prompts, text specs and drag encoding
"""

import numpy as np
import pytest

from exceptions import PromptError
from models import DragPoint, EditOp, EditOpKind, Placement, Scene, SegDetMode
from services.asset_service import glyph_index
from services.prompt_service import (DRAG_PREFIX, TextParams, asset_color, count_phrase, decode_drag,
                                     describe_scene, edit_instruction, encode_drag, join_phrases,
                                     name_color, plural, render_text, render_text_spec, scene_facts,
                                     segdet_instruction, text_prompt, verify_statements)
from services.scene_service import SceneParams, sample_scene
from services.taskgen_service import make_rng


def test_name_color():
    assert name_color((255, 0, 0)).name == 'red'
    assert name_color((250, 10, 10)).name == 'red'
    assert name_color((250, 250, 250)).name == 'white'
    # equidistant from black and navy: the earlier palette entry wins
    assert name_color((0, 0, 64)).name == 'black'


def test_asset_color(catalog):
    assert asset_color(catalog.get('stickers/ball.png')).name == 'red'
    assert asset_color(catalog.get('stickers/box.png')).name == 'blue'


def test_phrases():
    assert plural('box') == 'boxes'
    assert plural('leaf') == 'leaves'
    assert plural('ball') == 'balls'
    assert count_phrase(1, 'apple') == 'an apple'
    assert count_phrase(3, 'box', 'red') == 'three red boxes'
    assert join_phrases(['a', 'b', 'c']) == 'a, b and c'
    assert join_phrases(['a']) == 'a'


def test_scene_facts(catalog):
    scene = Scene(128, 128, (240, 240, 240), (
        Placement('stickers/ball.png', (30, 64), scale=0.3, z=0),
        Placement('stickers/box.png', (100, 64), scale=0.3, z=1),
    ))
    facts = scene_facts(scene, catalog)
    assert facts['background'] == 'a plain white background'
    assert facts['counts'] == {'ball': 1, 'box': 1}
    assert [o['color'] for o in facts['objects']] == ['red', 'blue']
    assert facts['relations'] == [{'a': 0, 'b': 1, 'relation': 'left_of'}]


def test_describe_scene_statements_are_entailed(catalog):
    """Every realized claim re-checks against the scene it came from"""
    params = SceneParams(width=128, height=128, count=(0, 4), size_range=(0.15, 0.25))
    for seed in range(20):
        rng = make_rng(seed)
        scene = sample_scene(rng, catalog, params)
        description = describe_scene(scene, catalog, rng)
        assert description.prompt
        assert description.statements[0]['kind'] == 'background'
        assert verify_statements(scene, catalog, description.statements) == []


def test_describe_scene_is_deterministic(catalog):
    params = SceneParams(width=128, height=128, count=(2, 3))
    scene = sample_scene(make_rng(4), catalog, params)
    first = describe_scene(scene, catalog, make_rng(9))
    second = describe_scene(scene, catalog, make_rng(9))
    assert first.prompt == second.prompt
    assert first.statements == second.statements


def test_verify_statements_rejects_false_claims(catalog):
    scene = Scene(128, 128, (240, 240, 240), (Placement('stickers/ball.png', (64, 64), scale=0.3),))
    assert verify_statements(scene, catalog, [{'kind': 'count', 'tag': 'ball', 'count': 1}]) == []
    problems = verify_statements(scene, catalog, [
        {'kind': 'count', 'tag': 'ball', 'count': 2},
        {'kind': 'color', 'tag': 'ball', 'color': 'green'},
        {'kind': 'mystery'},
    ])
    assert len(problems) == 3


def test_empty_scene_prompt(catalog):
    scene = Scene(64, 64, 'backgrounds/dots.png')
    description = describe_scene(scene, catalog, make_rng(0))
    assert 'dotted background' in description.prompt
    assert description.facts['objects'] == []


def test_render_text_spec_forced_attributes(catalog):
    glyphs = glyph_index(catalog)
    params = TextParams(text='HELLO', font='sans', color='blue', size=24, thickness=2,
                        placement=(60.0, 40.0))
    spec = render_text_spec(make_rng(0), params, glyphs, (128, 128))
    assert (spec.text, spec.font, spec.color_name, spec.size, spec.thickness) == \
        ('HELLO', 'sans', 'blue', 24, 2)
    assert spec.color == (0, 0, 255)
    assert spec.placement == (60.0, 40.0)

    asset = render_text(spec, catalog, glyphs)
    assert asset.height >= 24
    opaque = asset.alpha > 0
    assert opaque.any() and (~opaque).any()
    assert np.all(asset.pixels[opaque][:, :3] == (0, 0, 255))

    prompt = text_prompt(spec, make_rng(1))
    assert '"HELLO"' in prompt and 'blue' in prompt


def test_render_text_spec_errors(catalog):
    glyphs = glyph_index(catalog)
    with pytest.raises(PromptError):
        render_text_spec(make_rng(0), TextParams(text='hello'), glyphs, (128, 128))
    with pytest.raises(PromptError):
        render_text_spec(make_rng(0), TextParams(text='   '), glyphs, (128, 128))
    with pytest.raises(PromptError):
        render_text_spec(make_rng(0), TextParams(text='HI', font='serif'), glyphs, (128, 128))


def test_encode_drag():
    spec, instruction = encode_drag([((64, 32), (32, -16)), ((0, 128), (128, -128))], (128, 128))
    assert spec[0] == DragPoint(0.5, 0.25, 0.25, -0.125)
    assert instruction == 'drag: (0.5000, 0.2500, 0.2500, -0.1250); (0.0000, 1.0000, 1.0000, -1.0000)'
    assert decode_drag(instruction) == spec


def test_encode_drag_normalizes_negative_zero():
    spec, instruction = encode_drag([((10, 10), (-0.001, 0.0))], (128, 128))
    assert '-0.0000' not in instruction
    assert str(spec[0].dx) == '0.0'


def test_encode_drag_rejects_bad_input():
    with pytest.raises(PromptError):
        encode_drag([], (128, 128))
    with pytest.raises(PromptError):
        encode_drag([((10, 10), (1, 1))] * 9, (128, 128))
    with pytest.raises(PromptError):
        encode_drag([((100, 10), (40, 0))], (128, 128))
    with pytest.raises(PromptError):
        decode_drag('move: (0.1, 0.1, 0.1, 0.1)')
    with pytest.raises(PromptError):
        decode_drag(DRAG_PREFIX + ' nothing here')


def test_instructions():
    op = EditOp(EditOpKind.REPLACE, ('the red ball', 'a blue box'))
    text = edit_instruction(op, make_rng(2))
    assert 'the red ball' in text and 'a blue box' in text
    with pytest.raises(PromptError):
        EditOp(EditOpKind.ADD, ('a', 'b'))

    text = segdet_instruction(SegDetMode.DETECT, 'the red ball', 'green', make_rng(0))
    assert 'the red ball' in text and 'green' in text


if __name__ == '__main__':
    pytest.main([__file__])
