"""Model bundles: everything ``identify`` and ``eval`` need, checksummed and version-tagged."""

import os
import shutil
from dataclasses import dataclass
from os import path
from typing import Dict, List, Optional

from flask import current_app

from .. import __version__
from ..classifier import WriterModel, load_models, save_models
from ..config import PipelineConfig, load_pipeline_config
from ..embednet import EmbedNet, TrainConfig, load_embednet, save_embednet, write_loss_history
from ..errors import ExitCode, WriterIdError
from ..saliency import SaliencyWeights, load_saliency, save_saliency
from ..sparsepca import SparseBasis, load_basis, save_basis
from ..utils import mkdir, read_json, sha256sum, write_json

MANIFEST = 'manifest.json'
CONFIG_FILE = 'pipeline.conf'
EMBEDDER_DIR = 'embedder'


class BundleIntegrityError(WriterIdError):
    """Raised when a bundle is incomplete, altered, or written by an incompatible version."""
    exit_code = ExitCode.BUNDLE


@dataclass
class ModelBundle:
    directory: str
    manifest: dict
    config: PipelineConfig
    config_text: str
    net: EmbedNet
    basis: SparseBasis
    saliency: SaliencyWeights
    models: List[WriterModel]

    @property
    def writers(self) -> List[str]:
        return [m.writer_id for m in self.models]


def resolve_bundle_path(name: str) -> str:
    """Absolute and ``./``-relative paths are used as given; bare names resolve under ``BUNDLE_DIR``."""
    if path.isabs(name) or path.exists(name):
        return path.abspath(name)
    return path.join(current_app.config['BUNDLE_DIR'], name)


def _checksums(directory: str) -> Dict[str, str]:
    sums = {}
    for root, _, files in os.walk(directory):
        for file_name in files:
            full = path.join(root, file_name)
            rel = path.relpath(full, directory).replace(os.sep, '/')
            if rel != MANIFEST:
                sums[rel] = sha256sum(full)
    return dict(sorted(sums.items()))


def write_bundle(directory: str, config: PipelineConfig, config_text: str, net: EmbedNet,
                 train_config: Optional[TrainConfig], history: List[float], basis: SparseBasis,
                 saliency: SaliencyWeights, models: List[WriterModel], run_id: str = '-',
                 extra: Optional[dict] = None) -> dict:
    mkdir(directory)
    embedder_dir = path.join(directory, EMBEDDER_DIR)
    save_embednet(net, embedder_dir, train_config)
    write_loss_history(history, path.join(embedder_dir, 'loss_history.csv'))
    save_basis(basis, directory)
    save_saliency(saliency, directory)
    save_models(models, directory)
    with open(path.join(directory, CONFIG_FILE), 'w') as fp:
        fp.write(config_text)
    manifest = {
        'version': __version__,
        'run_id': run_id,
        'embed_dim': net.embed_dim,
        'components': basis.n_components,
        'writers': [m.writer_id for m in models],
        'seed': config.seed,
        'files': _checksums(directory),
        **(extra or {}),
    }
    write_json(manifest, path.join(directory, MANIFEST))
    return manifest


def _major(version: str) -> str:
    return str(version).split('.', 1)[0]


def verify_bundle(directory: str) -> dict:
    """Check version and checksums; returns the manifest.

    Raises:
        BundleIntegrityError: missing manifest or file, checksum or major version mismatch.
    """
    manifest_path = path.join(directory, MANIFEST)
    if not path.isfile(manifest_path):
        raise BundleIntegrityError(f'No bundle manifest in `{directory}`')
    manifest = read_json(manifest_path)
    if _major(manifest.get('version', '')) != _major(__version__):
        raise BundleIntegrityError(f'Bundle version {manifest.get("version")} is incompatible with {__version__}')
    expected = manifest.get('files', {})
    actual = _checksums(directory)
    missing = sorted(set(expected) - set(actual))
    if missing:
        raise BundleIntegrityError(f'Bundle files missing: {", ".join(missing)}')
    altered = sorted(name for name, digest in expected.items() if actual[name] != digest)
    if altered:
        raise BundleIntegrityError(f'Bundle checksum mismatch: {", ".join(altered)}')
    return manifest


def load_bundle(directory: str) -> ModelBundle:
    manifest = verify_bundle(directory)
    config_path = path.join(directory, CONFIG_FILE)
    config, config_text = load_pipeline_config(config_path)
    models = load_models(directory, manifest['writers'])
    return ModelBundle(directory, manifest, config, config_text, load_embednet(path.join(directory, EMBEDDER_DIR)),
                       load_basis(directory), load_saliency(directory), models)


def publish_bundle(staging: str, directory: str) -> None:
    """Move a finished staging directory into place, replacing an older bundle."""
    if path.exists(directory):
        shutil.rmtree(directory)
    mkdir(path.dirname(path.abspath(directory)))
    shutil.move(staging, directory)
