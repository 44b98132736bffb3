import filecmp
import os
import tempfile
from dataclasses import replace
from os import path

import numpy as np

from writerid.corpus import CORPUS_MANIFEST, IngestionError, generate_synthetic, letter_skeletons, allographs, \
    load_cvl_layout, load_iam_layout, load_manifest, load_omniglot_layout, open_corpus, render_word, \
    save_manifest, writer_style
from writerid.imaging import GrayImage, read_jsonl, stroke_width, write_png
from writerid.utils import mkdir

_tempdir: str = ""


def setup_module():
    print(f" == Setting up tests for {__name__}")
    global _tempdir
    _tempdir = tempfile.mkdtemp(prefix='corpus-')


def teardown_module():
    print(f" == Tearing down tests for {__name__}")


def _tree(root, layout):
    """``layout`` maps ``writer/document`` to a word count."""
    blank = GrayImage(np.full((8, 8), 255, dtype=np.uint8))
    for folder, n_words in layout.items():
        mkdir(path.join(root, folder))
        for i in range(n_words):
            write_png(blank, path.join(root, folder, f'{i:03d}.png'))
    return root


def _iam_fixture(name):
    return _tree(path.join(_tempdir, name), {
        'a01/a01-000': 2, 'a01/a01-001': 3, 'a01/a01-002': 2,
        'b02/b02-000': 40,
    })


def test_iam_selection_and_halving():
    corpus = load_iam_layout(_iam_fixture('iam'), seed=3)
    assert corpus.writers == ['a01', 'b02']
    a_docs = [d for d in corpus.documents if d.writer == 'a01']
    assert sorted(d.split for d in a_docs) == ['test', 'train']
    assert len({d.document for d in a_docs}) == 2
    b_docs = [d for d in corpus.documents if d.writer == 'b02']
    assert [(d.split, len(d.words), d.part) for d in b_docs] == [('train', 20, 1), ('test', 20, 2)]


def test_odd_single_document_keeps_the_extra_word_for_training():
    corpus = load_iam_layout(_tree(path.join(_tempdir, 'odd'), {'a/a-0': 5, 'b/b-0': 3}))
    assert [len(d.words) for d in corpus.documents] == [3, 2, 2, 1]


def test_iam_split_is_stable_and_disjoint():
    root = _iam_fixture('iam-stable')
    first, second = load_iam_layout(root, seed=11), load_iam_layout(root, seed=11)
    assert first.as_dict() == second.as_dict()
    train = {w.path for w in first.train}
    test = {w.path for w in first.test}
    assert train and test and not train & test


def test_malformed_iam_tree():
    root = _tree(path.join(_tempdir, 'bad-iam'), {'a/a-0': 2, 'a/a-1': 0, 'b/b-0': 4})
    try:
        load_iam_layout(root)
    except IngestionError as ex:
        assert ex.exit_code == 3
        assert ex.paths == [path.join(root, 'a', 'a-1')]
    else:
        assert False, 'an empty form is unreadable'


def test_cvl_drops_german_pages():
    root = _tree(path.join(_tempdir, 'cvl'), {
        '0001/0001-1': 2, '0001/0001-2': 2, '0001/0001-3': 2, '0001/0001-4': 2, '0001/0001-6': 2,
        '0002/0002-1': 2, '0002/0002-2': 2, '0002/0002-3': 2, '0002/0002-4': 2,
    })
    corpus = load_cvl_layout(root)
    assert corpus.writers == ['0001', '0002']
    first = [(d.document, d.split) for d in corpus.documents if d.writer == '0001']
    assert first == [('0001-1', 'train'), ('0001-2', 'train'), ('0001-3', 'train'), ('0001-4', 'test')]


def test_cvl_fallback_split():
    root = _tree(path.join(_tempdir, 'cvl-short'), {'0001/0001-1': 2, '0001/0001-2': 2, '0002/0002-1': 4})
    corpus = load_cvl_layout(root)
    assert [(d.writer, d.split) for d in corpus.documents] == [
        ('0001', 'train'), ('0001', 'test'), ('0002', 'train'), ('0002', 'test')]


def test_omniglot_labels():
    root = _tree(path.join(_tempdir, 'omniglot'), {'Latin/character01': 2, 'Greek/character03': 1})
    images = load_omniglot_layout(root)
    assert images.labels == ['Greek/character03', 'Latin/character01', 'Latin/character01']
    assert all(path.isfile(p) for p in images.paths)


def test_open_corpus_sources():
    root = _iam_fixture('iam-open')
    corpus = open_corpus(root, 'iam', seed=2)
    manifest = path.join(root, CORPUS_MANIFEST)
    save_manifest(corpus, manifest)
    assert open_corpus(manifest).as_dict() == corpus.as_dict()
    assert open_corpus(root, 'cvl').as_dict() == corpus.as_dict()
    assert load_manifest(manifest).train == corpus.train


def test_missing_corpus():
    for source, layout in ((path.join(_tempdir, 'nowhere'), 'iam'), (path.join(_tempdir, 'nowhere'), 'cvl')):
        try:
            open_corpus(source, layout)
        except IngestionError as ex:
            assert ex.exit_code == 3
        else:
            assert False, 'missing root'
    broken = path.join(_tempdir, 'broken.json')
    with open(broken, 'w') as fp:
        fp.write('{"name": ')
    try:
        open_corpus(broken)
    except IngestionError:
        pass
    else:
        assert False, 'truncated manifest'


def test_synthetic_corpus_is_deterministic():
    first = generate_synthetic(7, 3, 6, path.join(_tempdir, 'synth-1'))
    second = generate_synthetic(7, 3, 6, path.join(_tempdir, 'synth-2'))
    files = []
    for folder, _, names in os.walk(path.join(_tempdir, 'synth-1')):
        files.extend(path.relpath(path.join(folder, name), path.join(_tempdir, 'synth-1')) for name in names)
    assert len([f for f in files if f.endswith('.png')]) == 18
    _, mismatch, errors = filecmp.cmpfiles(path.join(_tempdir, 'synth-1'), path.join(_tempdir, 'synth-2'), files,
                                           shallow=False)
    assert not mismatch and not errors
    assert first.writers == second.writers == ['w000', 'w001', 'w002']
    assert len(first.train) == len(first.test) == 9


def test_synthetic_labels_match_their_writer():
    corpus = generate_synthetic(1, 2, 4, path.join(_tempdir, 'synth-labels'))
    labels = read_jsonl(path.join(_tempdir, 'synth-labels', 'labels.jsonl'))
    assert len(labels) == 8
    for record in labels:
        assert record['file'].split(os.sep)[0] == record['writer']
        assert record['stroke_width'] == writer_style(1, int(record['writer'][1:])).stroke_width
    assert {w.writer for w in corpus.train} == {'w000', 'w001'}


def test_pen_width_is_measurable():
    style = writer_style(0, 0)
    glyphs = allographs(letter_skeletons(0), style)
    widths = []
    for pen in (2, 5):
        image = render_word(glyphs, [0, 3, 5, 1], replace(style, stroke_width=pen), np.random.default_rng(0))
        widths.append(stroke_width(image.pixels < 128))
    assert widths[1] - widths[0] >= 2.0
