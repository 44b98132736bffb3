"""Embedder persistence: ``manifest.json`` plus one little-endian float64 file per parameter."""

import json
from os import path
from typing import Optional

import numpy as np
import pandas as pd

from ..errors import ExitCode, WriterIdError
from ..utils import mkdir
from .network import EmbedNet, EmbedNetConfig
from .training import TrainConfig

FORMAT_VERSION = 1
WEIGHTS_DIR = 'weights'


class ModelFormatError(WriterIdError):
    """Raised when a stored embedder does not match its manifest."""
    exit_code = ExitCode.BUNDLE


def save_embednet(net: EmbedNet, directory: str, train_config: Optional[TrainConfig] = None) -> str:
    mkdir(path.join(directory, WEIGHTS_DIR))
    shapes = {}
    for name, param in net.parameters().items():
        param.data.astype('<f8').tofile(path.join(directory, WEIGHTS_DIR, f'{name}.f64'))
        shapes[name] = list(param.shape)
    manifest = {
        'format_version': FORMAT_VERSION,
        'embed_dim': net.embed_dim,
        'architecture': net.config.as_dict(),
        'training': train_config.as_dict() if train_config is not None else None,
        'parameters': shapes,
    }
    manifest_path = path.join(directory, 'manifest.json')
    with open(manifest_path, 'w') as fp:
        json.dump(manifest, fp, indent=2, sort_keys=True)
    return manifest_path


def load_embednet(directory: str) -> EmbedNet:
    with open(path.join(directory, 'manifest.json')) as fp:
        manifest = json.load(fp)
    if manifest.get('format_version') != FORMAT_VERSION:
        raise ModelFormatError(f'Unsupported embedder format {manifest.get("format_version")}')
    architecture = dict(manifest['architecture'])
    architecture['block_filters'] = tuple(architecture['block_filters'])
    net = EmbedNet.create(EmbedNetConfig(**architecture))
    for name, param in net.parameters().items():
        shape = tuple(manifest['parameters'].get(name, ()))
        file_path = path.join(directory, WEIGHTS_DIR, f'{name}.f64')
        if shape != param.shape or not path.isfile(file_path):
            raise ModelFormatError(f'Parameter `{name}` is missing or has shape {shape}, expected {param.shape}')
        values = np.fromfile(file_path, dtype='<f8')
        if values.size != param.data.size:
            raise ModelFormatError(f'Parameter `{name}` holds {values.size} values, expected {param.data.size}')
        param.data[...] = values.reshape(shape).astype(param.data.dtype)
    return net


def write_loss_history(history, file_path: str) -> None:
    df = pd.DataFrame({'epoch': np.arange(1, len(history) + 1), 'mean_loss': history})
    df.to_csv(file_path, index=False, float_format='%.10g')
