"""Deterministic pseudo-handwriting: shared letter skeletons, per-writer allographs and pen style."""

from dataclasses import dataclass, asdict
from os import path
from typing import List

import numpy as np
from PIL import Image, ImageDraw

from ..errors import ParameterError
from ..imaging import GrayImage, stroke_width, write_png, write_regions_jsonl
from ..utils import mkdir
from .model import Corpus, Document

ALPHABET_SIZE = 16
ALPHABET_STREAM = 0x5EED
LETTER_HEIGHT = 32.0
LETTER_ADVANCE = 0.75
MARGIN = 12
DOCUMENTS_PER_WRITER = 2


@dataclass(frozen=True)
class StyleParams:
    """Pen and shape style of one synthetic writer."""
    slant: float
    stroke_width: int
    jitter: float
    glyph_seed: int
    wobble: float
    allograph_spread: float = 0.12

    def as_dict(self) -> dict:
        return asdict(self)


def writer_style(seed: int, writer_index: int) -> StyleParams:
    rng = np.random.default_rng([seed, writer_index])
    return StyleParams(slant=float(rng.uniform(-0.45, 0.45)),
                       stroke_width=int(rng.integers(2, 6)),
                       jitter=float(rng.uniform(0.005, 0.03)),
                       glyph_seed=int(rng.integers(0, 2 ** 31)),
                       wobble=float(rng.uniform(0.0, 0.08)))


def letter_skeletons(seed: int, size: int = ALPHABET_SIZE) -> List[np.ndarray]:
    """Shared alphabet: each letter a 3 to 6 point polyline in the unit box (y up)."""
    rng = np.random.default_rng([seed, ALPHABET_STREAM])
    letters = []
    for _ in range(size):
        n_points = int(rng.integers(3, 7))
        points = rng.uniform(0.0, 1.0, size=(n_points, 2))
        points[0] = (0.0, rng.uniform(0.0, 0.3))
        points[-1] = (1.0, rng.uniform(0.0, 0.3))
        letters.append(points)
    return letters


def allographs(skeletons: List[np.ndarray], style: StyleParams) -> List[np.ndarray]:
    """Writer-specific variants of every letter."""
    rng = np.random.default_rng(style.glyph_seed)
    variants = []
    for skeleton in skeletons:
        variant = skeleton + rng.normal(0.0, style.allograph_spread, size=skeleton.shape)
        variant[0, 0], variant[-1, 0] = 0.0, 1.0
        variants.append(variant)
    return variants


def word_path(glyphs: List[np.ndarray], letters: List[int], style: StyleParams,
              rng: np.random.Generator) -> np.ndarray:
    """One connected pen path through the chosen letters, in pixel units with y pointing down."""
    points = []
    for position, letter in enumerate(letters):
        glyph = glyphs[letter].copy()
        glyph[:, 0] = glyph[:, 0] * LETTER_ADVANCE + position * LETTER_ADVANCE
        points.append(glyph)
    stroke = np.concatenate(points)
    stroke = stroke + rng.normal(0.0, style.jitter, size=stroke.shape)
    stroke[:, 1] += style.wobble * np.sin(stroke[:, 0] * np.pi)
    stroke[:, 0] += stroke[:, 1] * np.tan(style.slant)
    pixels = stroke * LETTER_HEIGHT
    pixels[:, 1] = -pixels[:, 1]
    return pixels - pixels.min(axis=0) + MARGIN


def render_word(glyphs: List[np.ndarray], letters: List[int], style: StyleParams,
                rng: np.random.Generator) -> GrayImage:
    pixels = word_path(glyphs, letters, style, rng)
    width = int(np.ceil(pixels[:, 0].max())) + MARGIN
    height = int(np.ceil(pixels[:, 1].max())) + MARGIN
    canvas = Image.new('L', (width, height), 255)
    draw = ImageDraw.Draw(canvas)
    draw.line([tuple(p) for p in pixels.round(2)], fill=0, width=style.stroke_width, joint='curve')
    return GrayImage(np.asarray(canvas))


def generate_synthetic(seed: int, writers: int, words_per_writer: int, out: str) -> Corpus:
    """Render ``writers x words_per_writer`` word images under ``out``.

    Layout is ``<out>/<writer>/<document>/<word>.png`` with the words of each writer spread
    over two documents, plus ``labels.jsonl`` (one record per word with writer, style and
    measured stroke width). Output is a pure function of ``seed`` and the counts.
    """
    if writers < 2 or words_per_writer < 4:
        raise ParameterError('Synthetic corpus needs at least 2 writers and 4 words per writer')
    skeletons = letter_skeletons(seed)
    documents, records, writer_ids = [], [], []
    for index in range(writers):
        writer = f'w{index:03d}'
        writer_ids.append(writer)
        style = writer_style(seed, index)
        glyphs = allographs(skeletons, style)
        rng = np.random.default_rng([seed, index, 1])
        per_document = np.array_split(np.arange(words_per_writer), DOCUMENTS_PER_WRITER)
        for doc_index, word_indices in enumerate(per_document):
            document = f'{writer}-d{doc_index}'
            mkdir(path.join(out, writer, document))
            words = []
            for word_index in word_indices:
                letters = rng.integers(0, len(glyphs), size=int(rng.integers(3, 7))).tolist()
                image = render_word(glyphs, letters, style, rng)
                relative = path.join(writer, document, f'{document}-{word_index:04d}.png')
                write_png(image, path.join(out, relative))
                words.append(path.join(out, relative))
                records.append({'file': relative, 'writer': writer, 'document': document,
                                'letters': ' '.join(str(letter) for letter in letters),
                                'measured_stroke_width': round(stroke_width(image.pixels < 128), 6),
                                **style.as_dict()})
            documents.append(Document(writer, document, 'train' if doc_index == 0 else 'test', words))
    write_regions_jsonl(records, path.join(out, 'labels.jsonl'))
    return Corpus('synthetic', seed, writer_ids, documents,
                  {'writers': writers, 'words_per_writer': words_per_writer})
