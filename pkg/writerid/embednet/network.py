from dataclasses import dataclass, asdict, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import DimensionError, ParameterError
from ..keypoints import NormalizedPatch, PATCH_SIZE
from .layers import ConvLayer, Dense, ResidualBlock, conv_forward, dense_forward, residual_forward
from .tensor import Tensor, global_avg_pool, no_grad

EMBED_DIMS = (256, 512, 1024, 2048)
DTYPES = {'float64': np.float64, 'float32': np.float32}


@dataclass(frozen=True)
class EmbedNetConfig:
    """Architecture hyper-parameters of :class:`EmbedNet`."""
    embed_dim: int = 256
    stem_filters: int = 16
    stem_kernel: int = 7
    block_filters: Tuple[int, ...] = (16, 32, 64, 128)
    block_stride: int = 2
    seed: int = 0
    precision: str = 'float64'
    strict_dims: bool = False

    def __post_init__(self):
        if self.strict_dims and self.embed_dim not in EMBED_DIMS:
            raise ParameterError(f'embed_dim must be one of {EMBED_DIMS}')
        if self.embed_dim < 1 or self.stem_filters < 1 or not self.block_filters:
            raise ParameterError('embed_dim, stem_filters and block_filters must be positive')
        if self.precision not in DTYPES:
            raise ParameterError(f'precision must be one of {tuple(DTYPES)}')
        object.__setattr__(self, 'block_filters', tuple(int(f) for f in self.block_filters))

    def as_dict(self) -> dict:
        d = asdict(self)
        d['block_filters'] = list(self.block_filters)
        return d


@dataclass
class EmbedNet:
    """Residual convolutional embedder: stem, residual blocks, global average pool, dense to D."""
    config: EmbedNetConfig
    stem: ConvLayer
    blocks: List[ResidualBlock]
    fc: Dense
    _parameters: Dict[str, Tensor] = field(default=None, repr=False)

    @classmethod
    def create(cls, config: EmbedNetConfig = EmbedNetConfig()) -> 'EmbedNet':
        rng = np.random.default_rng(config.seed)
        dtype = DTYPES[config.precision]
        stem = ConvLayer.create(rng, 1, config.stem_filters, config.stem_kernel, stride=2, dtype=dtype)
        blocks, channels = [], config.stem_filters
        for filters in config.block_filters:
            blocks.append(ResidualBlock.create(rng, channels, filters, config.block_stride, dtype))
            channels = filters
        fc = Dense.create(rng, channels, config.embed_dim, dtype)
        return cls(config, stem, blocks, fc)

    @property
    def embed_dim(self) -> int:
        return self.config.embed_dim

    @property
    def dtype(self):
        return DTYPES[self.config.precision]

    def parameters(self) -> Dict[str, Tensor]:
        """Trainable tensors keyed by layer path, e.g. ``blocks.0.conv1.weight``."""
        if self._parameters is None:
            params = dict(self.stem.parameters('stem'))
            for index, block in enumerate(self.blocks):
                params.update(block.parameters(f'blocks.{index}'))
            params.update(self.fc.parameters('fc'))
            self._parameters = params
        return self._parameters

    def zero_grad(self) -> None:
        for param in self.parameters().values():
            param.zero_grad()

    def forward(self, x) -> Tensor:
        """Map a ``(N, 1, H, W)`` batch in [0, 1] to ``(N, D)`` embeddings."""
        if not isinstance(x, Tensor):
            x = Tensor(np.asarray(x, dtype=self.dtype))
        if x.ndim != 4 or x.shape[1] != 1:
            raise DimensionError(f'EmbedNet expects (N, 1, H, W) input, got {x.shape}')
        out = conv_forward(self.stem, x)
        for block in self.blocks:
            out = residual_forward(block, out)
        return dense_forward(self.fc, global_avg_pool(out))

    __call__ = forward


@dataclass(frozen=True)
class Siamese:
    """Weight-shared branches: every branch is the one wrapped :class:`EmbedNet`."""
    embedder: EmbedNet
    arity: int = 3

    @property
    def branches(self) -> Tuple[EmbedNet, ...]:
        return (self.embedder,) * self.arity

    def forward(self, *inputs) -> Tuple[Tensor, ...]:
        if len(inputs) != self.arity:
            raise DimensionError(f'Expected {self.arity} inputs, got {len(inputs)}')
        return tuple(branch(x) for branch, x in zip(self.branches, inputs))


def patch_batch(patches: Sequence, dtype=np.float64) -> np.ndarray:
    """Stack patches (``NormalizedPatch`` or uint8 arrays) into a ``(N, 1, H, W)`` batch scaled to [0, 1]."""
    arrays = [p.pixels if isinstance(p, NormalizedPatch) else np.asarray(p) for p in patches]
    batch = np.stack(arrays).astype(dtype)
    if np.issubdtype(arrays[0].dtype, np.integer):
        batch /= 255.0
    return batch[:, None, :, :]


def embed(net: EmbedNet, patch: NormalizedPatch) -> np.ndarray:
    """D-dimensional embedding of a single 105x105 patch; read-only on ``net``."""
    pixels = patch.pixels if isinstance(patch, NormalizedPatch) else np.asarray(patch)
    if pixels.shape != (PATCH_SIZE, PATCH_SIZE):
        raise DimensionError(f'Expected a {PATCH_SIZE}x{PATCH_SIZE} patch, got {pixels.shape}')
    return embed_batch(net, [patch])[0]


def embed_batch(net: EmbedNet, patches: Sequence, chunk_size: int = 64) -> np.ndarray:
    if len(patches) == 0:
        return np.zeros((0, net.embed_dim))
    chunks = []
    with no_grad():
        for start in range(0, len(patches), chunk_size):
            batch = patch_batch(patches[start:start + chunk_size], net.dtype)
            chunks.append(net(batch).data.astype(np.float64))
    return np.concatenate(chunks)
