"""
Prompt service: exact, scene-derived prompts and instructions.

Every sentence is realized from a structured fact record, and each realized
claim is appended to `statements` so it can be re-checked against the scene.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from exceptions import PromptError
from models import (RGB, Asset, AssetCatalog, AssetKind, BBox, ColorName, DragPoint, DragSpec,
                    EditOp, EditOpKind, Scene, SegDetMode, SpatialRelation, TextSpec)
from services.render_service import transform_asset
from services.scene_service import ALPHA_THRESHOLD, bbox_of, label_map, position_word, relation_table

COLOR_PALETTE: Tuple[ColorName, ...] = (
    ColorName('red', (255, 0, 0)),
    ColorName('orange', (255, 165, 0)),
    ColorName('yellow', (255, 255, 0)),
    ColorName('green', (0, 128, 0)),
    ColorName('cyan', (0, 255, 255)),
    ColorName('blue', (0, 0, 255)),
    ColorName('purple', (128, 0, 128)),
    ColorName('pink', (255, 192, 203)),
    ColorName('brown', (139, 69, 19)),
    ColorName('black', (0, 0, 0)),
    ColorName('white', (255, 255, 255)),
    ColorName('gray', (128, 128, 128)),
    ColorName('beige', (225, 198, 153)),
    ColorName('magenta', (255, 0, 255)),
    ColorName('teal', (0, 128, 128)),
    ColorName('navy', (0, 0, 128)),
)

_ANCHORS = np.array([c.anchor for c in COLOR_PALETTE], dtype=np.int64)

NUMBER_WORDS = (
    'zero', 'one', 'two', 'three', 'four', 'five', 'six', 'seven', 'eight', 'nine', 'ten',
    'eleven', 'twelve', 'thirteen', 'fourteen', 'fifteen', 'sixteen', 'seventeen',
    'eighteen', 'nineteen', 'twenty',
)

_IRREGULAR_PLURALS = {
    'person': 'people', 'mouse': 'mice', 'leaf': 'leaves', 'child': 'children',
    'fish': 'fish', 'sheep': 'sheep', 'knife': 'knives', 'foot': 'feet',
}

SMALL_AREA = 0.02
MEDIUM_AREA = 0.10

DEFAULT_WORDS = (
    'CAT', 'DOG', 'SUN', 'MOON', 'STAR', 'TREE', 'BOOK', 'CAKE', 'FISH', 'BIRD',
    'HELLO', 'WORLD', 'HAPPY', 'SALE', 'OPEN', 'CLOSED', 'COFFEE', 'MUSIC', 'DREAM', 'LOVE',
    'SUMMER', 'WINTER', 'GARDEN', 'OCEAN', 'RIVER', 'CITY', 'PARK', 'HOME', 'SHOP', 'FRESH',
    'BIG', 'SMALL', 'RED', 'BLUE', 'GREEN', 'FAST', 'SLOW', 'NEW', 'OLD', 'GOOD',
)

# letters must stay visible on light backgrounds
TEXT_COLORS = ('red', 'orange', 'green', 'cyan', 'blue', 'purple', 'pink', 'brown',
               'black', 'gray', 'magenta', 'teal', 'navy', 'yellow')

DRAG_PREFIX = 'drag:'
MAX_DRAG_POINTS = 8
_DRAG_TUPLE = re.compile(
    r"\(\s*(-?\d+\.\d+)\s*,\s*(-?\d+\.\d+)\s*,\s*(-?\d+\.\d+)\s*,\s*(-?\d+\.\d+)\s*\)")

SCENE_TEMPLATES = (
    'An image of {objects} on {background}.',
    'A picture showing {objects} on {background}.',
    '{objects} on {background}.',
    'A collage with {objects} placed on {background}.',
    'There are {objects} on {background}.',
)

EMPTY_SCENE_TEMPLATES = (
    'An image of {background}.',
    'A picture of {background}.',
    '{background} with nothing on it.',
    'An empty scene: {background}.',
)

RELATION_TEMPLATES = (
    'The {a} is {relation} the {b}.',
    'The {a} appears {relation} the {b}.',
    'You can see the {a} {relation} the {b}.',
)

ATTRIBUTE_TEMPLATES = (
    'The {obj} is {size} and {position}.',
    'The {obj} looks {size}, {position}.',
)

EDIT_TEMPLATES = {
    EditOpKind.ADD: (
        'Add {0} to the image.',
        'Put {0} in the picture.',
        'Place {0} on the canvas.',
        'Insert {0} into the scene.',
        'Include {0} in the image.',
        'Draw {0} on the background.',
    ),
    EditOpKind.REMOVE: (
        'Remove {0}.',
        'Delete {0} from the image.',
        'Erase {0} from the picture.',
        'Take {0} out of the scene.',
        'Get rid of {0}.',
        'Remove {0} from the image.',
    ),
    EditOpKind.REPLACE: (
        'Replace {0} with {1}.',
        'Swap {0} for {1}.',
        'Change {0} into {1}.',
        'Turn {0} into {1}.',
        'Exchange {0} for {1}.',
        'Make {0} become {1}.',
    ),
}

TEXT_TEMPLATES = (
    'The word "{text}" written in {thickness} {color} letters.',
    'A {size} {color} text that reads "{text}".',
    '"{text}" in {color}, {thickness} {font} lettering.',
    'An image with the text "{text}" in {size} {color} letters.',
    'Text saying "{text}" drawn in {color} with a {font} font.',
)

SEGDET_TEMPLATES = {
    SegDetMode.SEGMENT: (
        'Highlight {0} in {1}.',
        'Segment {0} and color it {1}.',
        'Mark the region of {0} with {1}.',
        'Paint over {0} in translucent {1}.',
        'Show the mask of {0} in {1}.',
    ),
    SegDetMode.DETECT: (
        'Draw a {1} bounding box around {0}.',
        'Detect {0} and frame it with a {1} box.',
        'Put a {1} box around {0}.',
        'Locate {0} with a {1} rectangle.',
        'Outline {0} with a {1} bounding box.',
    ),
}

SUBJECT_TEMPLATES = (
    'Show the {tag} from the image on {background}.',
    'Place the {tag} from the image onto {background}.',
    'The {tag} from the image, shown alone on {background}.',
    'Generate the {tag} from the image against {background}.',
    'Put the {tag} from the image on {background} in a new pose.',
)


def name_color(rgb: RGB) -> ColorName:
    """Nearest palette anchor in RGB; exact ties resolve to the earlier palette entry"""
    diff = _ANCHORS - np.asarray(rgb, dtype=np.int64)
    distances = (diff * diff).sum(axis=1)
    return COLOR_PALETTE[int(np.argmin(distances))]


def color_anchor(name: str) -> RGB:
    for color in COLOR_PALETTE:
        if color.name == name:
            return color.anchor
    raise PromptError(f"unknown color name {name!r}")


def number_word(n: int) -> str:
    return NUMBER_WORDS[n] if 0 <= n < len(NUMBER_WORDS) else str(n)


def plural(noun: str) -> str:
    if noun in _IRREGULAR_PLURALS:
        return _IRREGULAR_PLURALS[noun]
    if noun.endswith(('s', 'x', 'z', 'ch', 'sh')):
        return noun + 'es'
    if noun.endswith('y') and len(noun) > 1 and noun[-2] not in 'aeiou':
        return noun[:-1] + 'ies'
    return noun + 's'


def with_article(phrase: str) -> str:
    return ('an ' if phrase[:1].lower() in 'aeiou' else 'a ') + phrase


def count_phrase(n: int, noun: str, color: Optional[str] = None) -> str:
    described = f"{color} {noun}" if color else noun
    if n == 1:
        return with_article(described)
    return f"{number_word(n)} {color + ' ' if color else ''}{plural(noun)}"


def join_phrases(parts: Sequence[str]) -> str:
    if len(parts) <= 1:
        return ''.join(parts)
    return ', '.join(parts[:-1]) + ' and ' + parts[-1]


def _capitalize(sentence: str) -> str:
    return sentence[:1].upper() + sentence[1:]


def asset_color(asset: Asset) -> ColorName:
    """Color name of the mean RGB over an asset's opaque (alpha >= 128) pixels"""
    opaque = asset.alpha >= ALPHA_THRESHOLD
    if not opaque.any():
        opaque = asset.alpha > 0
    mean = asset.pixels[:, :, :3][opaque].astype(np.float64).mean(axis=0)
    return name_color(tuple(int(v) for v in np.floor(mean + 0.5)))


def size_word(box: BBox, canvas: Tuple[int, int]) -> str:
    fraction = box.area / float(canvas[0] * canvas[1])
    if fraction < SMALL_AREA:
        return 'small'
    if fraction < MEDIUM_AREA:
        return 'medium'
    return 'large'


def background_phrase(scene: Scene, catalog: AssetCatalog) -> str:
    if scene.is_blank:
        return f"a plain {name_color(scene.background).name} background"
    return with_article(f"{catalog.get(scene.background).label} background")


def object_descriptor(catalog: AssetCatalog, asset_id: str, article: str = 'the',
                      with_color: bool = True) -> str:
    asset = catalog.get(asset_id)
    noun = f"{asset_color(asset).name} {asset.label}" if with_color else asset.label
    if article in ('a', 'an'):
        return with_article(noun)
    return f"{article} {noun}"


def scene_facts(scene: Scene, catalog: AssetCatalog, salient: int = 4) -> Dict:
    """Structured ground truth of a scene: visible objects, counts, relations"""
    labels = label_map(scene, catalog)
    areas = np.bincount(labels.ravel() + 1, minlength=len(scene.placements) + 1)[1:]

    objects = []
    for index, placement in enumerate(scene.placements):
        if areas[index] == 0:
            continue
        asset = catalog.get(placement.asset_id)
        box = bbox_of(placement, asset, scene.size)
        objects.append({
            'index': index,
            'tag': asset.label,
            'color': asset_color(asset).name,
            'size': size_word(box, scene.size),
            'position': position_word(box, scene.size),
            'bbox': box.to_list(),
            'visible_area': int(areas[index]),
        })

    counts: Dict[str, int] = {}
    for obj in objects:
        counts[obj['tag']] = counts.get(obj['tag'], 0) + 1

    top = sorted(objects, key=lambda o: (-o['visible_area'], o['index']))[:salient]
    table = relation_table(scene, catalog, [o['index'] for o in top])
    relations = [{'a': a, 'b': b, 'relation': rel.value} for (a, b), rel in sorted(table.items())]

    return {
        'background': background_phrase(scene, catalog),
        'objects': objects,
        'counts': dict(sorted(counts.items())),
        'relations': relations,
    }


@dataclass
class SceneDescription:
    prompt: str
    facts: Dict
    statements: List[Dict] = field(default_factory=list)


def describe_scene(scene: Scene, catalog: AssetCatalog, rng: np.random.Generator) -> SceneDescription:
    """Templated English prompt realizing a random subset of the scene's facts"""
    facts = scene_facts(scene, catalog)
    background = facts['background']
    statements: List[Dict] = [{'kind': 'background', 'phrase': background}]

    if not facts['objects']:
        template = EMPTY_SCENE_TEMPLATES[int(rng.integers(len(EMPTY_SCENE_TEMPLATES)))]
        return SceneDescription(_capitalize(template.format(background=background)), facts, statements)

    groups: Dict[str, List[Dict]] = {}
    for obj in facts['objects']:
        groups.setdefault(obj['tag'], []).append(obj)
    groups = dict(sorted(groups.items()))

    uniform = {tag: objs[0]['color'] for tag, objs in groups.items()
               if len({o['color'] for o in objs}) == 1}
    use_color = {tag: bool(rng.random() < 0.7) for tag in uniform}
    if uniform and not any(use_color.values()):
        use_color[next(iter(uniform))] = True

    parts = []
    for tag, objs in groups.items():
        color = uniform[tag] if use_color.get(tag) else None
        parts.append(count_phrase(len(objs), tag, color))
        statements.append({'kind': 'count', 'tag': tag, 'count': len(objs)})
        if color:
            statements.append({'kind': 'color', 'tag': tag, 'color': color})

    template = SCENE_TEMPLATES[int(rng.integers(len(SCENE_TEMPLATES)))]
    sentences = [_capitalize(template.format(objects=join_phrases(parts), background=background))]

    if not uniform:
        tag = next(iter(groups))
        colors = sorted({o['color'] for o in groups[tag]})
        sentences.append(f"The {plural(tag)} are {join_phrases(colors)}.")
        statements.append({'kind': 'colors', 'tag': tag, 'colors': colors})

    # only objects with a unique (color, tag) can be referred to as "the <color> <tag>"
    descriptor_counts: Dict[Tuple[str, str], int] = {}
    for obj in facts['objects']:
        key = (obj['color'], obj['tag'])
        descriptor_counts[key] = descriptor_counts.get(key, 0) + 1
    referable = {o['index']: f"{o['color']} {o['tag']}" for o in facts['objects']
                 if descriptor_counts[(o['color'], o['tag'])] == 1}

    candidates = [r for r in facts['relations'] if r['a'] in referable and r['b'] in referable]
    if candidates:
        k = int(rng.integers(1, min(2, len(candidates)) + 1))
        chosen = sorted(rng.choice(len(candidates), size=k, replace=False))
        for i in chosen:
            rel = candidates[int(i)]
            phrase = _relation_phrase(rel['relation'])
            template = RELATION_TEMPLATES[int(rng.integers(len(RELATION_TEMPLATES)))]
            sentences.append(template.format(a=referable[rel['a']], relation=phrase, b=referable[rel['b']]))
            statements.append({'kind': 'relation', 'a': rel['a'], 'b': rel['b'], 'relation': rel['relation']})

    if referable and rng.random() < 0.5:
        indices = sorted(referable)
        index = indices[int(rng.integers(len(indices)))]
        obj = next(o for o in facts['objects'] if o['index'] == index)
        template = ATTRIBUTE_TEMPLATES[int(rng.integers(len(ATTRIBUTE_TEMPLATES)))]
        sentences.append(template.format(obj=referable[index], size=obj['size'], position=obj['position']))
        statements.append({'kind': 'attribute', 'index': index, 'size': obj['size'],
                           'position': obj['position']})

    return SceneDescription(' '.join(sentences), facts, statements)


def _relation_phrase(value: str) -> str:
    return SpatialRelation(value).phrase


def verify_statements(scene: Scene, catalog: AssetCatalog, statements: Sequence[Dict]) -> List[str]:
    """Re-derive facts from the scene and list every statement they do not entail"""
    facts = scene_facts(scene, catalog)
    objects = {o['index']: o for o in facts['objects']}
    relations = {(r['a'], r['b']): r['relation'] for r in facts['relations']}
    problems = []
    for statement in statements:
        kind = statement['kind']
        if kind == 'background':
            ok = statement['phrase'] == facts['background']
        elif kind == 'count':
            ok = facts['counts'].get(statement['tag']) == statement['count']
        elif kind == 'color':
            colors = {o['color'] for o in objects.values() if o['tag'] == statement['tag']}
            ok = colors == {statement['color']}
        elif kind == 'colors':
            colors = {o['color'] for o in objects.values() if o['tag'] == statement['tag']}
            ok = colors == set(statement['colors'])
        elif kind == 'relation':
            ok = relations.get((statement['a'], statement['b'])) == statement['relation']
        elif kind == 'attribute':
            obj = objects.get(statement['index'])
            ok = obj is not None and obj['size'] == statement['size'] and \
                obj['position'] == statement['position']
        else:
            ok = False
        if not ok:
            problems.append(f"statement not entailed by scene: {statement}")
    return problems


@dataclass
class TextParams:
    words: Sequence[str] = DEFAULT_WORDS
    word_count: Tuple[int, int] = (1, 4)
    size_range: Tuple[int, int] = (32, 80)
    thickness_range: Tuple[int, int] = (1, 3)
    colors: Sequence[str] = TEXT_COLORS
    fonts: Optional[Sequence[str]] = None
    # forced attributes
    text: Optional[str] = None
    font: Optional[str] = None
    color: Optional[str] = None
    size: Optional[int] = None
    thickness: Optional[int] = None
    placement: Optional[Tuple[float, float]] = None


def _fonts_covering(glyphs: Dict[str, Dict[str, str]], text: str,
                    allowed: Optional[Sequence[str]]) -> List[str]:
    needed = set(text) - {' '}
    return [font for font in sorted(glyphs)
            if (allowed is None or font in allowed) and needed <= set(glyphs[font])]


def render_text_spec(rng: np.random.Generator, params: TextParams,
                     glyphs: Dict[str, Dict[str, str]], canvas: Tuple[int, int]) -> TextSpec:
    """Draw every attribute of a text line; forced params pass through unchanged"""
    if params.text is not None:
        text = params.text
    else:
        if not params.words:
            raise PromptError('text word list is empty')
        n = int(rng.integers(params.word_count[0], params.word_count[1] + 1))
        picks = rng.integers(len(params.words), size=n)
        text = ' '.join(params.words[int(i)] for i in picks)
    if not text.strip():
        raise PromptError('text is empty')

    fonts = _fonts_covering(glyphs, text, params.fonts)
    if params.font is not None:
        if params.font not in fonts:
            raise PromptError(f"font {params.font!r} has no glyphs for {text!r}")
        font = params.font
    else:
        if not fonts:
            raise PromptError(f"no glyph font covers {text!r}")
        font = fonts[int(rng.integers(len(fonts)))]

    if params.color is not None:
        color_name = params.color
    else:
        color_name = params.colors[int(rng.integers(len(params.colors)))]
    color = color_anchor(color_name)

    size = params.size if params.size is not None else \
        int(rng.integers(params.size_range[0], params.size_range[1] + 1))
    thickness = params.thickness if params.thickness is not None else \
        int(rng.integers(params.thickness_range[0], params.thickness_range[1] + 1))

    if params.placement is not None:
        placement = (float(params.placement[0]), float(params.placement[1]))
    else:
        width, height = canvas
        placement = (float(rng.uniform(0.35, 0.65) * width), float(rng.uniform(0.35, 0.65) * height))

    return TextSpec(text=text, font=font, color=color, color_name=color_name,
                    thickness=thickness, size=size, placement=placement)


def render_text(spec: TextSpec, catalog: AssetCatalog, glyphs: Dict[str, Dict[str, str]],
                asset_id: str = 'generated/text') -> Asset:
    """Compose glyph assets into a tinted, thickened text sticker"""
    font_glyphs = glyphs.get(spec.font)
    if font_glyphs is None:
        raise PromptError(f"unknown glyph font {spec.font!r}")

    cells = []
    for char in spec.text:
        if char == ' ':
            cells.append(np.zeros((spec.size, max(1, int(round(0.4 * spec.size)))), dtype=np.uint8))
            continue
        if char not in font_glyphs:
            raise PromptError(f"font {spec.font!r} has no glyph for {char!r}")
        glyph = catalog.get(font_glyphs[char])
        raster = transform_asset(glyph, spec.size / float(glyph.height), 0.0)
        cells.append(raster[:, :, 3])

    height = max(cell.shape[0] for cell in cells)
    cells = [np.pad(cell, ((0, height - cell.shape[0]), (0, 0))) for cell in cells]
    alpha = np.concatenate(cells, axis=1)

    margin = spec.thickness
    alpha = np.pad(alpha, margin)
    if spec.thickness > 1:
        alpha = ndimage.grey_dilation(alpha, size=(2 * spec.thickness - 1, 2 * spec.thickness - 1))

    pixels = np.zeros(alpha.shape + (4,), dtype=np.uint8)
    pixels[alpha > 0, :3] = np.asarray(spec.color, dtype=np.uint8)
    pixels[:, :, 3] = alpha
    return Asset(id=asset_id, pixels=pixels, kind=AssetKind.STICKER, tags=(spec.text,))


def _size_adjective(size: int) -> str:
    if size < 44:
        return 'small'
    if size < 64:
        return 'medium-sized'
    return 'large'


def _thickness_adjective(thickness: int) -> str:
    return {1: 'thin', 2: 'regular'}.get(thickness, 'bold')


def text_prompt(spec: TextSpec, rng: np.random.Generator) -> str:
    template = TEXT_TEMPLATES[int(rng.integers(len(TEXT_TEMPLATES)))]
    return template.format(text=spec.text, color=spec.color_name, size=_size_adjective(spec.size),
                           thickness=_thickness_adjective(spec.thickness), font=spec.font)


def _normalized(value: float) -> float:
    # 4-decimal canonical value; adding 0.0 folds -0.0 into 0.0
    return float(f"{value:.4f}") + 0.0


def encode_drag(points: Sequence[Tuple[Tuple[float, float], Tuple[float, float]]],
                canvas: Tuple[int, int]) -> Tuple[DragSpec, str]:
    """Normalize pixel drags ((x, y), (dx, dy)) by the canvas and serialize them"""
    width, height = canvas
    if not 1 <= len(points) <= MAX_DRAG_POINTS:
        raise PromptError(f"drag needs 1..{MAX_DRAG_POINTS} points, got {len(points)}")

    spec = []
    for (px, py), (pdx, pdy) in points:
        if not (0 <= px <= width and 0 <= py <= height):
            raise PromptError(f"drag source ({px}, {py}) is off the {width}x{height} canvas")
        if not (0 <= px + pdx <= width and 0 <= py + pdy <= height):
            raise PromptError(f"drag target ({px + pdx}, {py + pdy}) is off the {width}x{height} canvas")
        spec.append(DragPoint(_normalized(px / width), _normalized(py / height),
                              _normalized(pdx / width), _normalized(pdy / height)))

    instruction = f"{DRAG_PREFIX} " + '; '.join(
        f"({p.x:.4f}, {p.y:.4f}, {p.dx:.4f}, {p.dy:.4f})" for p in spec)
    return tuple(spec), instruction


def decode_drag(instruction: str) -> DragSpec:
    if not instruction.startswith(DRAG_PREFIX):
        raise PromptError(f"not a drag instruction: {instruction!r}")
    matches = _DRAG_TUPLE.findall(instruction[len(DRAG_PREFIX):])
    if not matches:
        raise PromptError(f"drag instruction carries no points: {instruction!r}")
    return tuple(DragPoint(*(float(v) + 0.0 for v in match)) for match in matches)


def edit_instruction(op: EditOp, rng: np.random.Generator) -> str:
    templates = EDIT_TEMPLATES[op.kind]
    return templates[int(rng.integers(len(templates)))].format(*op.descriptors)


def segdet_instruction(mode: SegDetMode, descriptor: str, color_name: str,
                       rng: np.random.Generator) -> str:
    templates = SEGDET_TEMPLATES[mode]
    return templates[int(rng.integers(len(templates)))].format(descriptor, color_name)


def subject_prompt(tag: str, background: str, rng: np.random.Generator) -> str:
    template = SUBJECT_TEMPLATES[int(rng.integers(len(SUBJECT_TEMPLATES)))]
    return template.format(tag=tag, background=background)

