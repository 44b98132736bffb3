"""Descriptor weighting, fragment scoring, word/page fusion, ranking and Top-k accuracy."""

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import expit

from ..errors import DimensionError, ExitCode, ParameterError, WriterIdError
from ..utils import write_json
from .svm import WeightedDescriptors, WriterModel


class NoEvidenceError(WriterIdError):
    """Raised when a word or page has nothing to fuse."""
    exit_code = ExitCode.EVALUATION


@dataclass
class ScoreVector:
    """Per-writer scores in [0, 1], writers in ascending id order."""
    writers: List[str]
    scores: np.ndarray
    context: str = ''
    n_items: int = 1

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.shape != (len(self.writers),):
            raise DimensionError(f'{self.scores.shape} scores for {len(self.writers)} writers')


@dataclass
class Prediction:
    ranking: List[str]
    scores: np.ndarray
    context: str = ''

    @property
    def top(self) -> str:
        return self.ranking[0]


def weight_descriptors(Z, w, labels: Optional[Sequence] = None) -> WeightedDescriptors:
    """Scale column ``k`` of ``Z`` by ``w[k]``."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    w = np.asarray(getattr(w, 'w', w), dtype=np.float64).ravel()
    if Z.shape[1] != w.shape[0]:
        raise DimensionError(f'{Z.shape[1]} coefficient columns but {w.shape[0]} weights')
    labels = np.full(Z.shape[0], '', dtype=object) if labels is None else labels
    return WeightedDescriptors(Z * w, labels)


def score_fragment(model: WriterModel, descriptor) -> float:
    """Logistic of the SVM decision value."""
    return float(expit(model.decision_function(descriptor)[0]))


def score_fragments(models: Sequence[WriterModel], descriptors) -> np.ndarray:
    """``(N, W)`` fragment scores, column order as ``models``."""
    descriptors = np.atleast_2d(np.asarray(descriptors, dtype=np.float64))
    if descriptors.shape[0] == 0:
        return np.zeros((0, len(models)))
    return np.column_stack([expit(model.decision_function(descriptors)) for model in models])


def fuse_word(fragment_scores, writers: Sequence[str], context: str = '') -> ScoreVector:
    """Mean fragment score per writer.

    Raises:
        NoEvidenceError: no fragments.
    """
    fragment_scores = np.asarray(fragment_scores, dtype=np.float64)
    if fragment_scores.size == 0 or fragment_scores.shape[0] == 0:
        raise NoEvidenceError(f'No fragments to fuse for `{context}`')
    fragment_scores = np.atleast_2d(fragment_scores)
    return ScoreVector(list(writers), fragment_scores.mean(axis=0), context, fragment_scores.shape[0])


def fuse_page(word_scores: Sequence[ScoreVector], context: str = '') -> ScoreVector:
    """Mean of word score vectors.

    Raises:
        NoEvidenceError: no scored words.
    """
    if not word_scores:
        raise NoEvidenceError(f'No scored words to fuse for page `{context}`')
    writers = word_scores[0].writers
    if any(s.writers != writers for s in word_scores):
        raise DimensionError('Word score vectors cover different writers')
    return ScoreVector(list(writers), np.mean([s.scores for s in word_scores], axis=0), context, len(word_scores))


def predict(scores: ScoreVector) -> Prediction:
    """Writers ranked by descending score; exact ties keep ascending writer-id order."""
    order = np.argsort(-scores.scores, kind='stable')
    return Prediction([scores.writers[i] for i in order], scores.scores[order], scores.context)


def evaluate_topk(predictions: Sequence[Prediction], truths: Sequence[str], k: int) -> float:
    """Fraction of predictions whose truth is among the first ``k`` ranked writers."""
    if len(predictions) != len(truths):
        raise DimensionError(f'{len(predictions)} predictions but {len(truths)} truths')
    if k < 1:
        raise ParameterError('k must be >= 1')
    if not predictions:
        raise ParameterError('Top-k accuracy of an empty evaluation set is undefined')
    hits = sum(truth in prediction.ranking[:k] for prediction, truth in zip(predictions, truths))
    return hits / len(predictions)


def confusion_counts(predictions: Sequence[Prediction], truths: Sequence[str]) -> Dict[str, Dict[str, int]]:
    confusion = defaultdict(Counter)
    for prediction, truth in zip(predictions, truths):
        confusion[str(truth)][prediction.top] += 1
    return {truth: dict(sorted(counts.items())) for truth, counts in sorted(confusion.items())}


def report_frame(predictions: Sequence[Prediction], truths: Sequence[Optional[str]], topk: int = 5) -> pd.DataFrame:
    rows = []
    for prediction, truth in zip(predictions, truths):
        rows.append({
            'id': prediction.context,
            'truth': '' if truth is None else truth,
            f'top{topk}_ids': ';'.join(prediction.ranking[:topk]),
            f'top{topk}_scores': ';'.join(f'{s:.6f}' for s in prediction.scores[:topk]),
        })
    return pd.DataFrame(rows, columns=['id', 'truth', f'top{topk}_ids', f'top{topk}_scores'])


def write_report(predictions: Sequence[Prediction], truths: Sequence[Optional[str]], csv_path: str,
                 topk: int = 5) -> None:
    report_frame(predictions, truths, topk).to_csv(csv_path, index=False)


def write_summary(predictions: Sequence[Prediction], truths: Sequence[str], json_path: str,
                  extra: Optional[dict] = None) -> dict:
    summary = {
        'n': len(predictions),
        'top1': evaluate_topk(predictions, truths, 1),
        'top5': evaluate_topk(predictions, truths, 5),
        'confusion': confusion_counts(predictions, truths),
        **(extra or {}),
    }
    write_json(summary, json_path)
    return summary
