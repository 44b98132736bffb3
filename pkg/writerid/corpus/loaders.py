"""Readers for IAM-, CVL- and Omniglot-style directory trees of pre-segmented images."""

import os
from dataclasses import dataclass
from os import path
from typing import List, Sequence, Tuple

import numpy as np

from ..imaging import is_image_file
from ..logging import mainLogger
from .model import Corpus, Document, IngestionError, load_manifest

CORPUS_MANIFEST = 'corpus.json'


@dataclass
class LabelledImages:
    paths: List[str]
    labels: List[str]


def _subdirectories(folder_path: str) -> List[str]:
    return sorted(entry.name for entry in os.scandir(folder_path)
                  if not entry.name.startswith('.') and entry.is_dir())


def _images(folder_path: str) -> List[str]:
    return sorted(path.join(folder_path, name) for name in os.listdir(folder_path)
                  if is_image_file(path.join(folder_path, name)))


def _check_root(root: str) -> None:
    if not path.isdir(root):
        raise IngestionError('Dataset root is not a directory', [root])


def _writer_documents(root: str, writer: str, bad: List[str]) -> List[Tuple[str, List[str]]]:
    documents = []
    for document in _subdirectories(path.join(root, writer)):
        words = _images(path.join(root, writer, document))
        if words:
            documents.append((document, words))
        else:
            bad.append(path.join(root, writer, document))
    if not documents:
        bad.append(path.join(root, writer))
    return documents


def _halve(writer: str, document: str, words: List[str], bad: List[str]) -> List[Document]:
    if len(words) < 2:
        bad.append(path.join(writer, document))
        return []
    cut = (len(words) + 1) // 2
    return [Document(writer, document, 'train', words[:cut], part=1),
            Document(writer, document, 'test', words[cut:], part=2)]


def load_iam_layout(root: str, seed: int = 0) -> Corpus:
    """Read ``<root>/<writer>/<form>/*.png`` word images and build the train/test split.

    A writer with two or more forms keeps two of them, drawn under ``seed``: the first for
    training, the second for testing. A writer with one form has its words halved, the
    first half for training.

    Raises:
        IngestionError: the root is missing, or writers/forms hold no usable word images.
    """
    _check_root(root)
    rng = np.random.default_rng(seed)
    writers = _subdirectories(root)
    bad, documents, kept = [], [], []
    for writer in writers:
        forms = _writer_documents(root, writer, bad)
        if len(forms) >= 2:
            first, second = rng.choice(len(forms), 2, replace=False)
            documents.append(Document(writer, forms[first][0], 'train', forms[first][1]))
            documents.append(Document(writer, forms[second][0], 'test', forms[second][1]))
            kept.append(writer)
        elif len(forms) == 1:
            halves = _halve(writer, *forms[0], bad)
            if halves:
                documents.extend(halves)
                kept.append(writer)
    if bad or not kept:
        raise IngestionError('Unreadable IAM layout', bad or [root])
    mainLogger.info('Loaded IAM layout with %d writers from %s', len(kept), root)
    return Corpus('iam', seed, kept, documents, {'root': path.abspath(root)})


def page_number(document: str) -> str:
    return document.rsplit('-', 1)[-1]


def load_cvl_layout(root: str, german_pages: Sequence[str] = ('6',), seed: int = 0) -> Corpus:
    """Read ``<root>/<writer>/<writer>-<page>/*.png`` and split English pages 3:1.

    Pages listed in ``german_pages`` are dropped. Writers with four or more English pages
    train on the first three and test on the fourth; fewer pages fall back to a 3:1 split
    (at least one test page) with a warning, and a single page is halved.

    Raises:
        IngestionError: the root is missing or malformed.
    """
    _check_root(root)
    writers = _subdirectories(root)
    bad, documents, kept = [], [], []
    for writer in writers:
        pages = [(d, w) for d, w in _writer_documents(root, writer, bad) if page_number(d) not in german_pages]
        pages.sort(key=lambda page: (len(page_number(page[0])), page_number(page[0])))
        if not pages:
            continue
        if len(pages) >= 4:
            train, test = pages[:3], pages[3:4]
        elif len(pages) >= 2:
            mainLogger.warning('Writer %s has %d English pages, using a 3:1 fallback split', writer, len(pages))
            n_test = max(1, int(round(len(pages) / 4)))
            train, test = pages[:-n_test], pages[-n_test:]
        else:
            mainLogger.warning('Writer %s has a single English page, halving its words', writer)
            halves = _halve(writer, *pages[0], bad)
            if halves:
                documents.extend(halves)
                kept.append(writer)
            continue
        documents.extend(Document(writer, d, 'train', w) for d, w in train)
        documents.extend(Document(writer, d, 'test', w) for d, w in test)
        kept.append(writer)
    if bad or not kept:
        raise IngestionError('Unreadable CVL layout', bad or [root])
    mainLogger.info('Loaded CVL layout with %d writers from %s', len(kept), root)
    return Corpus('cvl', seed, kept, documents, {'root': path.abspath(root), 'german_pages': list(german_pages)})


def load_omniglot_layout(root: str) -> LabelledImages:
    """Read ``<root>/<alphabet>/<character>/*.png``; the label is ``<alphabet>/<character>``."""
    _check_root(root)
    paths, labels, bad = [], [], []
    for alphabet in _subdirectories(root):
        for character in _subdirectories(path.join(root, alphabet)):
            images = _images(path.join(root, alphabet, character))
            if not images:
                bad.append(path.join(root, alphabet, character))
            paths.extend(images)
            labels.extend([f'{alphabet}/{character}'] * len(images))
    if bad or not paths:
        raise IngestionError('Unreadable Omniglot layout', bad or [root])
    return LabelledImages(paths, labels)


def load_layout(kind: str, root: str, seed: int = 0) -> Corpus:
    if kind == 'iam':
        return load_iam_layout(root, seed)
    if kind == 'cvl':
        return load_cvl_layout(root, seed=seed)
    raise IngestionError(f'Unknown corpus layout `{kind}`')


def open_corpus(source: str, layout: str = 'iam', seed: int = 0) -> Corpus:
    """A corpus manifest file, a directory holding ``corpus.json``, or a layout root read with ``layout``."""
    if path.isfile(source):
        try:
            return load_manifest(source)
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise IngestionError(f'Unreadable corpus manifest: {e}', [source]) from e
    if path.isfile(path.join(source, CORPUS_MANIFEST)):
        return open_corpus(path.join(source, CORPUS_MANIFEST))
    return load_layout(layout, source, seed)
