import json
import os
import shutil
import tempfile
from os import path

import numpy as np
import pandas as pd

from writerid.app import app
from writerid.classifier import ScoreVector, train_ovr_svm, weight_descriptors
from writerid.config import load_pipeline_config
from writerid.corpus import generate_synthetic
from writerid.embednet import EmbedNet
from writerid.imaging import GrayImage, write_png
from writerid.pipeline import BundleIntegrityError, EvaluationError, evaluate_words, identification_report, \
    identify, load_bundle, resolve_bundle_path, topk_pair, verify_bundle, word_count_curve, write_bundle, \
    write_identification
from writerid.saliency import fit_saliency
from writerid.sparsepca import DataMatrix, fit_basis, project

TINY = ['stem_filters=4', 'block_filters=4,8', 'embed_dim=8', 'svm_c=1', 'svm_gamma=scale', 'svm_folds=2',
        'max_patches_per_word=4']

_tempdir: str = ""
_bundle_dir: str = ""
_word_file: str = ""


def setup_module():
    print(f" == Setting up tests for {__name__}")
    app.config['TESTING'] = True
    global _tempdir, _bundle_dir, _word_file
    _tempdir = tempfile.mkdtemp(prefix='pipeline-')
    _bundle_dir = path.join(_tempdir, 'bundle')
    _write_bundle(_bundle_dir)
    corpus = generate_synthetic(0, 2, 4, path.join(_tempdir, 'words'))
    _word_file = corpus.train[0].path


def teardown_module():
    print(f" == Tearing down tests for {__name__}")


def _write_bundle(directory):
    with app.app_context():
        cfg, text = load_pipeline_config(None, TINY)
    rng = np.random.default_rng(0)
    labels = np.repeat(['a', 'b'], 20)
    embeddings = rng.standard_normal((40, 8))
    embeddings[20:, :2] += 3.0
    basis = fit_basis(DataMatrix.from_rows(embeddings), 2, 1e-4, 0.0)
    alpha = project(embeddings, basis).alpha
    saliency = fit_saliency(alpha, labels)
    models = train_ovr_svm(weight_descriptors(alpha, saliency, labels), cfg.svm_grid())
    return write_bundle(directory, cfg, text, EmbedNet.create(cfg.embednet_config()), cfg.train_config(),
                        [1.0, 0.5], basis, saliency, models, 'run-1')


def _copy_bundle(name):
    copy = path.join(_tempdir, name)
    shutil.copytree(_bundle_dir, copy)
    return copy


def _expect_integrity_error(directory, fragment):
    try:
        verify_bundle(directory)
    except BundleIntegrityError as ex:
        assert ex.exit_code == 8
        assert fragment in str(ex)
    else:
        assert False, f'{directory} should fail verification'


def _vector(*scores, context=''):
    return ScoreVector([f'w{i}' for i in range(len(scores))], scores, context)


def test_bundle_layout_and_manifest():
    manifest = verify_bundle(_bundle_dir)
    assert manifest['run_id'] == 'run-1'
    assert manifest['writers'] == ['a', 'b']
    assert manifest['embed_dim'] == 8
    for name in ('pipeline.conf', 'sparse_basis.json', 'sparse_loadings.f64', 'saliency.json',
                 'svm/writer_a.bin', 'svm/writer_b.bin', 'embedder/loss_history.csv', 'embedder/manifest.json'):
        assert name in manifest['files']


def test_bundle_round_trip():
    with app.app_context():
        bundle = load_bundle(_bundle_dir)
    assert bundle.writers == ['a', 'b']
    assert bundle.config.embed_dim == 8 and bundle.config.block_filters == (4, 8)
    assert bundle.basis.n_components == 2
    assert len(bundle.saliency) == 2


def test_identical_inputs_give_identical_bundles():
    other = path.join(_tempdir, 'bundle-again')
    again = _write_bundle(other)
    assert again['files'] == verify_bundle(_bundle_dir)['files']


def test_tampered_bundle():
    altered = _copy_bundle('altered')
    with open(path.join(altered, 'saliency.json'), 'a') as fp:
        fp.write(' ')
    _expect_integrity_error(altered, 'saliency.json')

    missing = _copy_bundle('missing')
    os.remove(path.join(missing, 'svm', 'writer_b.bin'))
    _expect_integrity_error(missing, 'svm/writer_b.bin')

    newer = _copy_bundle('newer')
    with open(path.join(newer, 'manifest.json')) as fp:
        manifest = json.load(fp)
    manifest['version'] = '2.0.0'
    with open(path.join(newer, 'manifest.json'), 'w') as fp:
        json.dump(manifest, fp)
    _expect_integrity_error(newer, '2.0.0')

    _expect_integrity_error(path.join(_tempdir, 'no-bundle'), 'No bundle manifest')


def test_bundle_names_resolve_under_the_cache():
    with app.app_context():
        assert resolve_bundle_path('tiny') == path.join(app.config['BUNDLE_DIR'], 'tiny')
        assert resolve_bundle_path(_bundle_dir) == _bundle_dir


def test_identify_words_and_blank_input():
    blank = path.join(_tempdir, 'blank.png')
    write_png(GrayImage(np.full((60, 120), 255, dtype=np.uint8)), blank)
    with app.app_context():
        bundle = load_bundle(_bundle_dir)
    results = identify(bundle, [_word_file, blank], 'word')
    assert [item for item, _ in results] == [_word_file, blank]
    scores = results[0][1]
    assert scores.writers == ['a', 'b']
    assert np.all((scores.scores >= 0) & (scores.scores <= 1))
    assert results[1][1] is None


def test_page_of_one_word_equals_the_word():
    page = path.join(_tempdir, 'one-word-page')
    os.mkdir(page)
    shutil.copy(_word_file, page)
    with app.app_context():
        bundle = load_bundle(_bundle_dir)
    (_, word), = identify(bundle, [_word_file], 'word')
    (_, fused), = identify(bundle, [page], 'page')
    assert np.allclose(fused.scores, word.scores)
    assert fused.n_items == 1


def test_identification_outputs():
    results = [('x.png', _vector(0.2, 0.9, 0.4)), ('blank.png', None)]
    frame = identification_report(results, topk=2)
    assert frame['status'].tolist() == ['ok', 'no_evidence']
    assert frame.iloc[0]['top2_ids'] == 'w1;w2'
    csv_path, json_path = path.join(_tempdir, 'identify.csv'), path.join(_tempdir, 'identify.json')
    write_identification(results, csv_path, json_path, topk=2)
    with open(json_path) as fp:
        records = json.load(fp)
    assert records[0]['ranking'] == ['w1', 'w2']
    assert records[1] == {'id': 'blank.png', 'status': 'no_evidence'}
    assert len(pd.read_csv(csv_path)) == 2


def test_word_count_curve():
    truths = ['w0'] * 10 + ['w1'] * 3
    scores = [_vector(0.9, 0.1)] * 10 + [_vector(0.3, 0.6)] * 3
    curve = word_count_curve(scores, truths, seed=1)
    assert list(curve.columns) == ['words', 'resample', 'top1']
    assert len(curve) == 8 * 5
    assert np.all(curve['top1'] == 1.0)
    assert curve.equals(word_count_curve(scores, truths, seed=1))


def test_more_words_beat_a_single_word():
    rng = np.random.default_rng(2)
    truths, scores = [], []
    for writer in range(4):
        for _ in range(12):
            noisy = rng.uniform(0.0, 1.0, 4)
            noisy[writer] += 0.35
            truths.append(f'w{writer}')
            scores.append(_vector(*np.clip(noisy, 0.0, 1.0)))
    means = word_count_curve(scores, truths, seed=0).groupby('words')['top1'].mean()
    assert means[8] >= means[1]


def test_evaluation_reports():
    out_dir = tempfile.mkdtemp(prefix='eval-', dir=_tempdir)
    scores = [_vector(0.8, 0.2), _vector(0.4, 0.7), None, _vector(0.6, 0.5)]
    truths = ['w0', 'w1', 'w1', 'w1']
    summary = evaluate_words(['a', 'b', 'c', 'd'], scores, truths, out_dir, seed=0)
    assert summary['n'] == 3
    assert np.isclose(summary['top1'], 2 / 3)
    assert summary['top5'] == 1.0
    assert summary['no_evidence'] == ['c']
    assert summary['per_writer']['w1'] == {'n': 2, 'top1': 0.5, 'top5': 1.0}
    assert summary['confusion'] == {'w0': {'w0': 1}, 'w1': {'w0': 1, 'w1': 1}}
    for name in ('report.csv', 'word_count_curve.csv', 'summary.json'):
        assert path.isfile(path.join(out_dir, name))
    assert topk_pair(scores, truths) == (summary['top1'], summary['top5'])


def test_nothing_to_evaluate():
    for scores in ([], [None, None]):
        try:
            evaluate_words(['a', 'b'][:len(scores)], scores, ['w0', 'w1'][:len(scores)], _tempdir)
        except EvaluationError as ex:
            assert ex.exit_code == 9
        else:
            assert False, 'no evidence at all'
