from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..errors import DimensionError, ParameterError
from .tensor import Tensor, conv2d, relu, as_tensor

ACTIVATIONS = ('relu', 'identity')


def he_normal(rng: np.random.Generator, shape, fan_in: int, dtype=np.float64) -> Tensor:
    values = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
    return Tensor(values.astype(dtype), requires_grad=True)


@dataclass
class ConvLayer:
    """Kernels ``(out_channels, in_channels, kh, kw)``, one bias per output channel."""
    weight: Tensor
    bias: Tensor
    stride: int = 1
    padding: int = 0
    activation: str = 'relu'

    def __post_init__(self):
        out_channels, _, kh, kw = self.weight.shape
        if kh % 2 == 0 or kw % 2 == 0:
            raise ParameterError(f'Kernel size {kh}x{kw} must be odd')
        if out_channels < 1 or self.bias.shape != (out_channels,):
            raise DimensionError(f'Bias shape {self.bias.shape} does not match {out_channels} output channels')
        if self.activation not in ACTIVATIONS:
            raise ParameterError(f'Unknown activation `{self.activation}`')
        if self.stride < 1 or self.padding < 0:
            raise ParameterError('stride must be >= 1 and padding >= 0')

    @classmethod
    def create(cls, rng: np.random.Generator, in_channels: int, out_channels: int, kernel: int, stride: int = 1,
               padding: Optional[int] = None, activation: str = 'relu', dtype=np.float64) -> 'ConvLayer':
        padding = kernel // 2 if padding is None else padding
        weight = he_normal(rng, (out_channels, in_channels, kernel, kernel), in_channels * kernel * kernel, dtype)
        bias = Tensor(np.zeros(out_channels, dtype=dtype), requires_grad=True)
        return cls(weight, bias, stride, padding, activation)

    @property
    def in_channels(self) -> int:
        return self.weight.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    def parameters(self, prefix: str) -> Dict[str, Tensor]:
        return {f'{prefix}.weight': self.weight, f'{prefix}.bias': self.bias}


def conv_forward(layer: ConvLayer, x) -> Tensor:
    """``f(sum_i x_i * k_ij + b_j)`` with the layer's stride, padding and activation."""
    x = as_tensor(x)
    if x.ndim != 4 or x.shape[1] != layer.in_channels:
        raise DimensionError(f'Input {x.shape} does not have {layer.in_channels} channels')
    out = conv2d(x, layer.weight, layer.bias, layer.stride, layer.padding)
    return relu(out) if layer.activation == 'relu' else out


@dataclass
class Dense:
    weight: Tensor
    bias: Tensor

    @classmethod
    def create(cls, rng: np.random.Generator, in_features: int, out_features: int, dtype=np.float64) -> 'Dense':
        values = rng.standard_normal((in_features, out_features)) * np.sqrt(1.0 / in_features)
        return cls(Tensor(values.astype(dtype), requires_grad=True),
                   Tensor(np.zeros(out_features, dtype=dtype), requires_grad=True))

    def parameters(self, prefix: str) -> Dict[str, Tensor]:
        return {f'{prefix}.weight': self.weight, f'{prefix}.bias': self.bias}


def dense_forward(layer: Dense, x) -> Tensor:
    x = as_tensor(x)
    if x.shape[-1] != layer.weight.shape[0]:
        raise DimensionError(f'Input {x.shape} does not have {layer.weight.shape[0]} features')
    return x @ layer.weight + layer.bias


@dataclass
class ResidualBlock:
    """Two 3x3 convolutions plus a skip path that is the identity or a 1x1 projection."""
    conv1: ConvLayer
    conv2: ConvLayer
    skip: Optional[ConvLayer] = None

    @classmethod
    def create(cls, rng: np.random.Generator, in_channels: int, filters: int, stride: int = 1,
               dtype=np.float64) -> 'ResidualBlock':
        conv1 = ConvLayer.create(rng, in_channels, filters, 3, stride, activation='relu', dtype=dtype)
        conv2 = ConvLayer.create(rng, filters, filters, 3, 1, activation='identity', dtype=dtype)
        skip = None
        if in_channels != filters or stride != 1:
            skip = ConvLayer.create(rng, in_channels, filters, 1, stride, padding=0, activation='identity',
                                    dtype=dtype)
        return cls(conv1, conv2, skip)

    @property
    def filters(self) -> int:
        return self.conv2.out_channels

    def parameters(self, prefix: str) -> Dict[str, Tensor]:
        params = {**self.conv1.parameters(f'{prefix}.conv1'), **self.conv2.parameters(f'{prefix}.conv2')}
        if self.skip is not None:
            params.update(self.skip.parameters(f'{prefix}.skip'))
        return params


def residual_forward(block: ResidualBlock, x) -> Tensor:
    """``relu(conv2(conv1(x)) + skip(x))``."""
    x = as_tensor(x)
    branch = conv_forward(block.conv2, conv_forward(block.conv1, x))
    shortcut = x if block.skip is None else conv_forward(block.skip, x)
    if branch.shape != shortcut.shape:
        raise DimensionError(f'Residual branch {branch.shape} does not match skip path {shortcut.shape}')
    return relu(branch + shortcut)
