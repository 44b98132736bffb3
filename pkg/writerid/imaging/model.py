from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..errors import DimensionError


@dataclass(frozen=True)
class GrayImage:
    """An 8-bit grayscale raster, 0 is black ink and 255 is white background.

    Attributes:
        pixels (numpy.ndarray): ``uint8`` array of shape ``(height, width)``.
    """
    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise DimensionError(f'Gray image must be a non-empty 2-D array, got shape {pixels.shape}')
        object.__setattr__(self, 'pixels', np.ascontiguousarray(pixels, dtype=np.uint8))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def as_float(self) -> np.ndarray:
        """Intensities scaled to [0, 1]."""
        return self.pixels.astype(np.float64) / 255.0


@dataclass(frozen=True)
class BinaryImage:
    """A boolean raster, ``True`` marks ink."""
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask)
        if mask.ndim != 2 or mask.shape[0] < 1 or mask.shape[1] < 1:
            raise DimensionError(f'Binary image must be a non-empty 2-D array, got shape {mask.shape}')
        object.__setattr__(self, 'mask', mask.astype(bool))

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


@dataclass(frozen=True)
class WordRegion:
    """A segmented word: bounding box ``(x, y, w, h)`` in source coordinates plus its crop."""
    bbox: Tuple[int, int, int, int]
    image: GrayImage
    ink_pixels: int

    def as_record(self, source: str) -> dict:
        x, y, w, h = self.bbox
        return {'source': source, 'x': x, 'y': y, 'w': w, 'h': h, 'ink_pixels': self.ink_pixels}
