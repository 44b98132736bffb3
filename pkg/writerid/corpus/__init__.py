from .model import Corpus, Document, WordSample, IngestionError, save_manifest, load_manifest
from .loaders import LabelledImages, CORPUS_MANIFEST, load_iam_layout, load_cvl_layout, load_omniglot_layout, \
    load_layout, open_corpus
from .synthetic import StyleParams, writer_style, letter_skeletons, allographs, render_word, generate_synthetic
