"""Training orchestration: patches, embedder, sparse basis, saliency and writer SVMs."""

import shutil
from contextlib import contextmanager
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from os import path
from time import perf_counter
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..classifier import WeightedDescriptors, WriterModel, train_ovr_svm, weight_descriptors
from ..config import ConfigError, PipelineConfig
from ..corpus import Corpus, load_omniglot_layout
from ..embednet import CorpusError, EmbedNet, TrainResult, davies_bouldin, embed_batch, train_siamese
from ..imaging import read_image
from ..keypoints import normalize_patch
from ..logging import mainLogger, stageLogger
from ..saliency import SaliencyWeights, fit_saliency
from ..sparsepca import DataMatrix, SparseBasis, default_components, fit_basis, project, select_lambda1, \
    subsample_rows
from ..utils import create_ticket, get_tmp_dir
from .bundle import publish_bundle, write_bundle
from .encoding import MODES, describe, score_words
from .evaluation import EvaluationError, topk_pair
from .features import PatchSet, collect_patches, sample_items

SWEEP_DIMS = (256, 512, 1024, 2048)


@dataclass
class FittedPipeline:
    net: EmbedNet
    history: List[float]
    basis: SparseBasis
    saliency: SaliencyWeights
    models: List[WriterModel]
    embeddings: np.ndarray
    labels: np.ndarray


@contextmanager
def stage(name: str, run_id: str = '-', comment: Optional[str] = None):
    """Log one stage record with start time, duration and success flag."""
    execution_start = datetime.now(timezone.utc)
    started = perf_counter()
    success = 0
    try:
        yield
        success = 1
    finally:
        stageLogger(name, execution_start, round(perf_counter() - started, 3), run_id, success, comment)


def split_patches(corpus: Corpus, cfg: PipelineConfig, executor=None, split: str = 'train') -> PatchSet:
    """Patches of a corpus split.

    Raises:
        CorpusError: the train split is empty or yields no patches.
        EvaluationError: the same for the test split.
    """
    error = CorpusError if split == 'train' else EvaluationError
    samples = corpus.split(split)
    if not samples:
        raise error(f'The {split} split of corpus `{corpus.name}` is empty')
    patch_set = collect_patches(sample_items(samples), cfg, executor)
    if len(patch_set) == 0:
        raise error(f'No patches could be extracted from the {split} split')
    return patch_set


def embedder_corpus(patch_set: PatchSet, cfg: PipelineConfig):
    """Patches and class labels the siamese network is trained on."""
    if cfg.embed_corpus == 'patches':
        return patch_set.patches, patch_set.writers
    if not cfg.omniglot_root:
        raise ConfigError('embed_corpus = omniglot requires omniglot_root')
    images = load_omniglot_layout(cfg.omniglot_root)
    patches = [normalize_patch(read_image(p).pixels, (p, 0)) for p in images.paths]
    return patches, np.asarray(images.labels, dtype=object)


def train_embedder(patch_set: PatchSet, cfg: PipelineConfig) -> TrainResult:
    patches, labels = embedder_corpus(patch_set, cfg)
    net = EmbedNet.create(cfg.embednet_config())
    mainLogger.info('Training %s embedder (D=%d) on %d patches of %d classes', cfg.loss, net.embed_dim,
                    len(patches), len(set(labels.tolist())))
    return train_siamese(patches, labels, net, cfg.train_config())


def fit_sparse_basis(embeddings: np.ndarray, cfg: PipelineConfig, executor=None) -> SparseBasis:
    rows = embeddings[subsample_rows(embeddings.shape[0], cfg.spca_sample, cfg.seed)]
    X = DataMatrix.from_rows(rows)
    L = cfg.spca_components or default_components(X.shape[1])
    L = min(L, X.shape[0], X.shape[1])
    if cfg.spca_lambda1 == 'auto':
        lam1 = select_lambda1(X, L, cfg.spca_lambda, seed=cfg.seed)
        mainLogger.info('Selected lambda1=%g', lam1)
    else:
        lam1 = cfg.spca_lambda1
    return fit_basis(X, L, cfg.spca_lambda, lam1, executor)


def fit_writer_models(descriptors, labels, cfg: PipelineConfig, executor=None) -> List[WriterModel]:
    return train_ovr_svm(WeightedDescriptors(descriptors, labels), cfg.svm_grid(), executor)


def fit_models(patch_set: PatchSet, corpus: Corpus, cfg: PipelineConfig, executor=None,
               run_id: str = '-') -> FittedPipeline:
    labels = patch_set.writers
    with stage('embedder', run_id):
        result = train_embedder(patch_set, cfg)
    with stage('embedding', run_id):
        embeddings = embed_batch(result.net, patch_set.patches)
    with stage('sparse_basis', run_id):
        basis = fit_sparse_basis(embeddings, cfg, executor)
        alpha = project(embeddings, basis).alpha
    with stage('saliency', run_id):
        saliency = fit_saliency(alpha, labels, cfg.kl_epsilon, cfg.weight_mode, corpus.writers, executor)
    with stage('svm', run_id):
        models = fit_writer_models(weight_descriptors(alpha, saliency).Zhat, labels, cfg, executor)
    enrolled = {m.writer_id for m in models}
    absent = [w for w in corpus.writers if w not in enrolled]
    if absent:
        mainLogger.warning('Writers without training fragments are not enrolled: %s', ', '.join(absent))
    return FittedPipeline(result.net, result.history, basis, saliency, models, embeddings, labels)


def split_scores(fitted: FittedPipeline, test_set: PatchSet, mode: str = 'weighted',
                models: Optional[Sequence[WriterModel]] = None):
    descriptors = describe(embed_batch(fitted.net, test_set.patches), fitted.basis, fitted.saliency, mode)
    return score_words(models if models is not None else fitted.models, descriptors, test_set)


def run_ablation(fitted: FittedPipeline, test_set: PatchSet, cfg: PipelineConfig, executor=None) -> pd.DataFrame:
    """Top-1/Top-5 word accuracy of SVMs on raw embeddings, sparse coefficients and weighted coefficients."""
    truths = [word.writer for word in test_set.words]
    rows = []
    for mode in MODES:
        if mode == 'weighted':
            models = fitted.models
        else:
            descriptors = describe(fitted.embeddings, fitted.basis, fitted.saliency, mode)
            models = fit_writer_models(descriptors, fitted.labels, cfg, executor)
        top1, top5 = topk_pair(split_scores(fitted, test_set, mode, models), truths)
        mainLogger.info('Ablation %s: top1=%.4f top5=%.4f', mode, top1, top5)
        rows.append({'mode': mode, 'top1': top1, 'top5': top5})
    return pd.DataFrame(rows, columns=['mode', 'top1', 'top5'])


def train_bundle(corpus: Corpus, cfg: PipelineConfig, config_text: str, bundle_dir: str, executor=None,
                 ablation: bool = False, run_id: Optional[str] = None) -> Dict:
    """Fit every stage on the train split and publish a bundle at ``bundle_dir``.

    The bundle is staged under ``TEMPDIR`` and moved into place only when complete; a failing
    stage removes the staging directory.
    """
    run_id = run_id or create_ticket()
    staging = path.join(get_tmp_dir('bundles'), run_id)
    try:
        with stage('patches', run_id):
            train_set = split_patches(corpus, cfg, executor)
        fitted = fit_models(train_set, corpus, cfg, executor, run_id)
        extra = {'corpus': corpus.name}
        if ablation:
            with stage('ablation', run_id):
                test_set = split_patches(corpus, cfg, executor, split='test')
                table = run_ablation(fitted, test_set, cfg, executor)
            extra['ablation'] = table.to_dict(orient='records')
        with stage('bundle', run_id):
            manifest = write_bundle(staging, cfg, config_text, fitted.net, cfg.train_config(), fitted.history,
                                    fitted.basis, fitted.saliency, fitted.models, run_id, extra)
            if ablation:
                table.to_csv(path.join(staging, 'ablation.csv'), index=False, float_format='%.6f')
            publish_bundle(staging, bundle_dir)
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    mainLogger.info('Bundle written to %s', bundle_dir)
    return manifest


def compare_losses(corpus: Corpus, cfg: PipelineConfig, executor=None) -> pd.DataFrame:
    """Davies-Bouldin index of held-out test patches under triplet- and contrastive-trained embedders."""
    train_set = split_patches(corpus, cfg, executor)
    held_out = split_patches(corpus, cfg, executor, split='test')
    rows = []
    for loss in ('triplet', 'contrastive'):
        result = train_embedder(train_set, replace(cfg, loss=loss))
        dbi = davies_bouldin(embed_batch(result.net, held_out.patches), held_out.writers)
        mainLogger.info('%s loss: DBI %.4f', loss, dbi)
        rows.append({'loss': loss, 'dbi': dbi, 'final_loss': result.history[-1] if result.history else np.nan})
    return pd.DataFrame(rows, columns=['loss', 'dbi', 'final_loss'])


def sweep_dims(corpus: Corpus, cfg: PipelineConfig, dims: Sequence[int] = SWEEP_DIMS, executor=None) -> pd.DataFrame:
    """Word-level Top-1/Top-5 of the weighted pipeline for each embedding dimension."""
    train_set = split_patches(corpus, cfg, executor)
    test_set = split_patches(corpus, cfg, executor, split='test')
    truths = [word.writer for word in test_set.words]
    rows = []
    for dim in dims:
        fitted = fit_models(train_set, corpus, replace(cfg, embed_dim=int(dim)), executor, f'sweep-{dim}')
        top1, top5 = topk_pair(split_scores(fitted, test_set), truths)
        rows.append({'embed_dim': int(dim), 'top1': top1, 'top5': top5})
    return pd.DataFrame(rows, columns=['embed_dim', 'top1', 'top5'])
