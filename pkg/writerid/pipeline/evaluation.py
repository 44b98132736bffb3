"""Test-split evaluation: word-level Top-k, per-writer breakdown and the word-count curve."""

from os import path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..classifier import Prediction, ScoreVector, evaluate_topk, fuse_page, predict, write_report, write_summary
from ..embednet import embed_batch
from ..errors import ExitCode, WriterIdError
from ..logging import mainLogger
from .encoding import describe, score_words
from .features import collect_patches, sample_items

CURVE_WORDS = tuple(range(1, 9))
CURVE_RESAMPLES = 5


class EvaluationError(WriterIdError):
    """Raised when there is nothing to evaluate."""
    exit_code = ExitCode.EVALUATION


def scored_predictions(word_scores: Sequence[Optional[ScoreVector]], truths: Sequence[str]
                       ) -> Tuple[List[Prediction], List[str], List[int]]:
    """Predictions of the scored words with their truths, plus indices of words without evidence."""
    predictions, kept, missing = [], [], []
    for i, (scores, truth) in enumerate(zip(word_scores, truths)):
        if scores is None:
            missing.append(i)
            continue
        predictions.append(predict(scores))
        kept.append(truth)
    if not predictions:
        raise EvaluationError('No test word yielded any fragment')
    return predictions, kept, missing


def topk_pair(word_scores: Sequence[Optional[ScoreVector]], truths: Sequence[str]) -> Tuple[float, float]:
    predictions, kept, _ = scored_predictions(word_scores, truths)
    return evaluate_topk(predictions, kept, 1), evaluate_topk(predictions, kept, 5)


def per_writer(predictions: Sequence[Prediction], truths: Sequence[str]) -> dict:
    breakdown = {}
    for writer in sorted(set(truths)):
        own = [(p, t) for p, t in zip(predictions, truths) if t == writer]
        breakdown[writer] = {'n': len(own),
                             'top1': evaluate_topk([p for p, _ in own], [t for _, t in own], 1),
                             'top5': evaluate_topk([p for p, _ in own], [t for _, t in own], 5)}
    return breakdown


def word_count_curve(word_scores: Sequence[Optional[ScoreVector]], truths: Sequence[str], seed: int = 0,
                     counts: Sequence[int] = CURVE_WORDS, resamples: int = CURVE_RESAMPLES) -> pd.DataFrame:
    """Top-1 accuracy when each writer is represented by ``n`` randomly drawn test words fused as a page.

    Writers with fewer than ``n`` scored words contribute all of them.
    """
    by_writer = {}
    for scores, truth in zip(word_scores, truths):
        if scores is not None:
            by_writer.setdefault(truth, []).append(scores)
    if not by_writer:
        raise EvaluationError('No test word yielded any fragment')
    rows = []
    for n in counts:
        for r in range(resamples):
            rng = np.random.default_rng([seed, n, r])
            hits = 0
            for writer in sorted(by_writer):
                words = by_writer[writer]
                chosen = np.sort(rng.choice(len(words), min(n, len(words)), replace=False))
                page = fuse_page([words[i] for i in chosen], writer)
                hits += predict(page).top == writer
            rows.append({'words': n, 'resample': r, 'top1': hits / len(by_writer)})
    return pd.DataFrame(rows, columns=['words', 'resample', 'top1'])


def curve_means(curve: pd.DataFrame) -> List[dict]:
    means = curve.groupby('words', sort=True)['top1'].mean()
    return [{'words': int(n), 'top1': float(v)} for n, v in means.items()]


def evaluate_words(word_ids: Sequence[str], word_scores: Sequence[Optional[ScoreVector]], truths: Sequence[str],
                   out_dir: str, seed: int = 0) -> dict:
    """Write ``report.csv``, ``word_count_curve.csv`` and ``summary.json`` under ``out_dir``.

    Raises:
        EvaluationError: empty split, or no word produced fragments.
    """
    if not word_scores:
        raise EvaluationError('The test split is empty')
    predictions, kept, missing = scored_predictions(word_scores, truths)
    if missing:
        mainLogger.warning('%d of %d test words have no fragments', len(missing), len(word_scores))
    write_report(predictions, kept, path.join(out_dir, 'report.csv'))
    curve = word_count_curve(word_scores, truths, seed)
    curve.to_csv(path.join(out_dir, 'word_count_curve.csv'), index=False, float_format='%.6f')
    extra = {
        'no_evidence': [word_ids[i] for i in missing],
        'per_writer': per_writer(predictions, kept),
        'word_count_curve': curve_means(curve),
    }
    summary = write_summary(predictions, kept, path.join(out_dir, 'summary.json'), extra)
    mainLogger.info('Evaluated %d words: top1=%.4f top5=%.4f', summary['n'], summary['top1'], summary['top5'])
    return summary


def evaluate_bundle(bundle, corpus, out_dir: str, executor=None) -> dict:
    """Score the test split of ``corpus`` with ``bundle`` and write the evaluation reports."""
    samples = corpus.test
    if not samples:
        raise EvaluationError(f'The test split of corpus `{corpus.name}` is empty')
    patch_set = collect_patches(sample_items(samples), bundle.config, executor)
    descriptors = describe(embed_batch(bundle.net, patch_set.patches), bundle.basis, bundle.saliency)
    word_scores = score_words(bundle.models, descriptors, patch_set)
    return evaluate_words([s.word_id for s in samples], word_scores, [s.writer for s in samples], out_dir,
                          bundle.config.seed)
