"""Inference on unseen word or page images with a loaded bundle."""

import os
from os import path
from typing import List, Optional, Sequence, Tuple

import pandas as pd

from ..classifier import NoEvidenceError, ScoreVector, fuse_page, predict, report_frame
from ..embednet import embed_batch
from ..errors import ParameterError
from ..imaging import GrayImage, denoise, is_image_file, read_image, segment_words
from ..logging import mainLogger
from ..utils import write_json
from .bundle import ModelBundle
from .encoding import describe, score_words
from .features import PatchSet, WordPatches, extract_word

INPUT_MODES = ('word', 'page')


def _score_patch_words(bundle: ModelBundle, words: List[WordPatches]) -> List[Optional[ScoreVector]]:
    patch_set = PatchSet(words)
    descriptors = describe(embed_batch(bundle.net, patch_set.patches), bundle.basis, bundle.saliency)
    return score_words(bundle.models, descriptors, patch_set)


def score_word_images(bundle: ModelBundle, images: Sequence[Tuple[str, GrayImage]],
                      executor=None) -> List[Optional[ScoreVector]]:
    """Fused score vector per ``(id, image)`` word, ``None`` when no fragment could be extracted."""
    mapper = executor.map if executor is not None else map
    words = list(mapper(lambda item: extract_word(item[1], item[0], bundle.config), images))
    return _score_patch_words(bundle, words)


def page_words(image: GrayImage, bundle: ModelBundle, page_id: str) -> List[Tuple[str, GrayImage]]:
    cfg = bundle.config
    regions = segment_words(denoise(image, cfg.denoise_sigma, cfg.denoise_threshold), cfg.log_sigma, cfg.min_area,
                            source=image)
    return [(f'{page_id}#{i}', region.image) for i, region in enumerate(regions)]


def _directory_images(directory: str) -> List[str]:
    return sorted(path.join(directory, f) for f in os.listdir(directory) if is_image_file(path.join(directory, f)))


def identify(bundle: ModelBundle, inputs: Sequence[str], mode: str = 'word',
             executor=None) -> List[Tuple[str, Optional[ScoreVector]]]:
    """Score every input; ``None`` marks items without evidence.

    In ``word`` mode each image file (or every image of a directory) is a word. In ``page``
    mode an image file is a page scan segmented into words, and a directory holds the word
    images of one page.
    """
    if mode not in INPUT_MODES:
        raise ParameterError(f'input mode must be one of {INPUT_MODES}')
    results = []
    for item in inputs:
        if mode == 'word':
            files = _directory_images(item) if path.isdir(item) else [item]
            scores = score_word_images(bundle, [(f, read_image(f)) for f in files], executor)
            results.extend(zip(files, scores))
            continue
        if path.isdir(item):
            words = [(f, read_image(f)) for f in _directory_images(item)]
        else:
            words = page_words(read_image(item), bundle, item)
        scored = [s for s in score_word_images(bundle, words, executor) if s is not None]
        try:
            results.append((item, fuse_page(scored, item)))
        except NoEvidenceError:
            results.append((item, None))
    for item_id, scores in results:
        if scores is None:
            mainLogger.warning('No evidence for %s', item_id)
    return results


def identification_report(results: Sequence[Tuple[str, Optional[ScoreVector]]], topk: int = 5) -> pd.DataFrame:
    rows = []
    for item_id, scores in results:
        if scores is None:
            rows.append({'id': item_id, 'truth': '', f'top{topk}_ids': '', f'top{topk}_scores': '',
                         'status': 'no_evidence'})
            continue
        prediction = predict(ScoreVector(scores.writers, scores.scores, item_id, scores.n_items))
        row = report_frame([prediction], [None], topk).iloc[0].to_dict()
        row['status'] = 'ok'
        rows.append(row)
    return pd.DataFrame(rows, columns=['id', 'truth', f'top{topk}_ids', f'top{topk}_scores', 'status'])


def write_identification(results: Sequence[Tuple[str, Optional[ScoreVector]]], csv_path: str, json_path: str,
                         topk: int = 5) -> None:
    identification_report(results, topk).to_csv(csv_path, index=False)
    records = []
    for item_id, scores in results:
        if scores is None:
            records.append({'id': item_id, 'status': 'no_evidence'})
            continue
        prediction = predict(scores)
        records.append({'id': item_id, 'status': 'ok', 'items': scores.n_items,
                        'ranking': prediction.ranking[:topk], 'scores': prediction.scores[:topk]})
    write_json(records, json_path)
