"""Bilinear resampling shared by pyramid downsampling and patch resizing."""

import numpy as np
from scipy import ndimage


def _bilinear(values: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    grid_rows, grid_cols = np.meshgrid(rows, cols, indexing='ij')
    return ndimage.map_coordinates(values.astype(np.float64), [grid_rows, grid_cols], order=1, mode='nearest')


def downsample_half(values: np.ndarray) -> np.ndarray:
    """Halve both dimensions (rounding up); each output pixel averages its 2x2 source block."""
    height, width = values.shape
    rows = 2.0 * np.arange((height + 1) // 2) + 0.5
    cols = 2.0 * np.arange((width + 1) // 2) + 0.5
    return _bilinear(values, rows, cols)


def resize_bilinear(values: np.ndarray, out_height: int, out_width: int) -> np.ndarray:
    """Resize with pixel-center alignment; returns float64."""
    height, width = values.shape
    rows = (np.arange(out_height) + 0.5) * (height / out_height) - 0.5
    cols = (np.arange(out_width) + 0.5) * (width / out_width) - 0.5
    return _bilinear(values, rows, cols)
