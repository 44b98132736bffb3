from dataclasses import dataclass, asdict, replace
from math import ceil
from typing import List, Sequence

import numpy as np

from ..errors import ExitCode, ParameterError, WriterIdError
from ..logging import mainLogger
from .losses import batch_contrastive_loss, batch_triplet_loss
from .network import EmbedNet, Siamese, patch_batch
from .optim import Adam

LOSSES = ('triplet', 'contrastive')


class CorpusError(WriterIdError):
    """Raised when a labelled patch set cannot support siamese training."""
    exit_code = ExitCode.EMBEDDER


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser and sampling settings of the siamese trainer."""
    batch_size: int = 16
    learning_rate: float = 0.001
    epochs: int = 10
    seed: int = 0
    margin: float = 0.2
    loss: str = 'triplet'
    steps_per_epoch: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.batch_size < 1:
            raise ParameterError('batch_size must be >= 1')
        if self.learning_rate < 0:
            raise ParameterError('learning_rate must be non-negative')
        if self.epochs < 0 or self.steps_per_epoch < 0:
            raise ParameterError('epochs and steps_per_epoch must be non-negative')
        if self.loss not in LOSSES:
            raise ParameterError(f'loss must be one of {LOSSES}')
        if self.margin < 0 or (self.loss == 'contrastive' and self.margin == 0):
            raise ParameterError('margin must be positive')

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    net: EmbedNet
    history: List[float]


def _sampling_plan(labels: Sequence):
    labels = np.asarray(labels)
    classes = sorted(set(labels.tolist()))
    if len(classes) < 2:
        raise CorpusError(f'Siamese training needs at least 2 classes, got {len(classes)}')
    members = {c: np.flatnonzero(labels == c) for c in classes}
    anchor_classes = [c for c in classes if members[c].size >= 2]
    skipped = len(classes) - len(anchor_classes)
    if skipped:
        mainLogger.warning('%d classes have a single sample and are used as negatives only', skipped)
    if not anchor_classes:
        raise CorpusError('Siamese training needs at least one class with 2 samples')
    return classes, members, anchor_classes


def _draw(rng: np.random.Generator, classes, members, anchor_classes, loss: str):
    anchor_class = anchor_classes[rng.integers(len(anchor_classes))]
    first, second = rng.choice(members[anchor_class], 2, replace=False)
    others = [c for c in classes if c != anchor_class]
    negative_class = others[rng.integers(len(others))]
    negative = members[negative_class][rng.integers(members[negative_class].size)]
    if loss == 'triplet':
        return first, second, negative
    if rng.random() < 0.5:
        return first, second, True
    return first, negative, False


def _step(siamese: Siamese, optimizer: Adam, cfg: TrainConfig, inputs) -> float:
    optimizer.zero_grad()
    if cfg.loss == 'triplet':
        anchors, positives, negatives = siamese.forward(*inputs)
        loss = batch_triplet_loss(anchors, positives, negatives, cfg.margin)
    else:
        left, right = siamese.forward(inputs[0], inputs[1])
        loss = batch_contrastive_loss(left, right, inputs[2], cfg.margin)
    loss.backward()
    optimizer.step()
    return loss.item()


def train_siamese(patches: Sequence, labels: Sequence, net: EmbedNet, cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Train ``net`` on randomly sampled triplets (or pairs) of a labelled patch set.

    The anchor class is uniform over classes with at least two samples, the negative class
    uniform over the remaining classes. Sampling uses ``numpy.random.default_rng(cfg.seed)``;
    the same seed reproduces the same loss history.

    Raises:
        CorpusError: fewer than 2 classes.
    """
    classes, members, anchor_classes = _sampling_plan(labels)
    rng = np.random.default_rng(cfg.seed)
    siamese = Siamese(net, arity=3 if cfg.loss == 'triplet' else 2)
    optimizer = Adam(net.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    steps = cfg.steps_per_epoch or ceil(len(patches) / cfg.batch_size)
    history = []
    for epoch in range(cfg.epochs):
        losses = []
        for _ in range(steps):
            drawn = [_draw(rng, classes, members, anchor_classes, cfg.loss) for _ in range(cfg.batch_size)]
            first, second, third = zip(*drawn)
            inputs = [patch_batch([patches[i] for i in first], net.dtype),
                      patch_batch([patches[i] for i in second], net.dtype)]
            if cfg.loss == 'triplet':
                inputs.append(patch_batch([patches[i] for i in third], net.dtype))
            else:
                inputs.append(np.asarray(third, dtype=bool))
            losses.append(_step(siamese, optimizer, cfg, inputs))
        history.append(float(np.mean(losses)))
        mainLogger.debug('Epoch %d/%d: mean %s loss %.6f', epoch + 1, cfg.epochs, cfg.loss, history[-1])
    return TrainResult(net, history)


def fit_triplets(net: EmbedNet, anchors: Sequence, positives: Sequence, negatives: Sequence,
                 cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Train on a fixed list of triplets, visited in order each epoch."""
    if not len(anchors) == len(positives) == len(negatives) or len(anchors) == 0:
        raise CorpusError('Fixed triplets need equal, non-zero counts of anchors, positives and negatives')
    cfg = replace(cfg, loss='triplet')
    siamese = Siamese(net)
    optimizer = Adam(net.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon)
    batches = [[patch_batch(group[start:start + cfg.batch_size], net.dtype)
                for group in (anchors, positives, negatives)]
               for start in range(0, len(anchors), cfg.batch_size)]
    history = []
    for _ in range(cfg.epochs):
        history.append(float(np.mean([_step(siamese, optimizer, cfg, inputs) for inputs in batches])))
    return TrainResult(net, history)
