"""Grayscale conversion, Gaussian threshold denoising and LoG word segmentation."""

from math import ceil
from typing import List, Optional

import numpy as np
from scipy import ndimage

from ..errors import DimensionError, ExitCode, ParameterError, WriterIdError
from .model import BinaryImage, GrayImage, WordRegion

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# 8-connectivity for word components
_CONNECTIVITY = np.ones((3, 3), dtype=bool)


class SegmentationError(WriterIdError):
    """Raised when page images yield no word regions at all."""
    exit_code = ExitCode.SEGMENTATION


def to_grayscale(image: np.ndarray) -> GrayImage:
    """Convert an ``(height, width, 3)`` RGB raster with the luma formula, rounding half up."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] < 3 or image.shape[0] < 1 or image.shape[1] < 1:
        raise DimensionError(f'Expected a non-empty 3-channel raster, got shape {image.shape}')
    rgb = image[..., :3].astype(np.float64)
    luma = LUMA_WEIGHTS[0] * rgb[..., 0] + LUMA_WEIGHTS[1] * rgb[..., 1] + LUMA_WEIGHTS[2] * rgb[..., 2]
    # 1e-9 absorbs the representation error of the weights on achromatic input
    gray = np.floor(luma + 0.5 + 1e-9)
    return GrayImage(np.clip(gray, 0, 255).astype(np.uint8))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian truncated at radius ``ceil(3 * sigma)``."""
    radius = int(ceil(3.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def gaussian_blur(values: np.ndarray, sigma: float) -> np.ndarray:
    """Separable truncated Gaussian blur with reflected borders."""
    kernel = gaussian_kernel(sigma)
    blurred = ndimage.correlate1d(values.astype(np.float64), kernel, axis=0, mode='reflect')
    return ndimage.correlate1d(blurred, kernel, axis=1, mode='reflect')


def denoise(image: GrayImage, sigma: float = 1.0, threshold: float = 180) -> BinaryImage:
    """Gaussian-filter based threshold: a pixel is ink iff its blurred intensity is below ``threshold``.

    Arguments:
        image (GrayImage): dark-on-light input.
        sigma (float): blur standard deviation in pixels.
        threshold (float): intensity in [0, 255].

    Raises:
        ParameterError: ``sigma`` is not positive or ``threshold`` is out of range.
    """
    if sigma <= 0:
        raise ParameterError(f'sigma must be positive, got {sigma}')
    if not 0 <= threshold <= 255:
        raise ParameterError(f'threshold must lie in [0, 255], got {threshold}')
    blurred = gaussian_blur(image.pixels, sigma)
    return BinaryImage(blurred < threshold)


def _smeared_ink(mask: np.ndarray, log_sigma: float) -> np.ndarray:
    ink = mask.astype(np.float64)
    response = -ndimage.gaussian_laplace(ink, log_sigma, mode='constant', cval=0.0)
    scale = np.abs(response).max()
    if scale == 0:
        return mask.copy()
    # blob response is positive around ink; the tolerance cuts float residue of the kernel tails
    return (response > 1e-6 * scale) | mask


def segment_words(image: BinaryImage, log_sigma: float = 6.0, min_area: int = 30,
                  source: Optional[GrayImage] = None) -> List[WordRegion]:
    """Split an ink mask into word regions.

    Ink is smeared with an isotropic Laplacian-of-Gaussian blob response, connected
    components of the smeared mask become words and each word's bounding box is the
    bounding box of its own ink. Components with fewer than ``min_area`` ink pixels are
    discarded. Regions are ordered top-to-bottom, then left-to-right.

    When ``source`` is given the crops are cut from it (pixels of other words whitened),
    otherwise they are rendered from the mask.
    """
    if log_sigma <= 0:
        raise ParameterError(f'log_sigma must be positive, got {log_sigma}')
    mask = image.mask
    if not mask.any():
        return []
    if source is not None and (source.height, source.width) != mask.shape:
        raise DimensionError('Source image and mask dimensions differ')
    labels, count = ndimage.label(_smeared_ink(mask, log_sigma), structure=_CONNECTIVITY)
    regions = []
    for index, window in enumerate(ndimage.find_objects(labels), start=1):
        if window is None:
            continue
        ink = mask[window] & (labels[window] == index)
        area = int(ink.sum())
        if area < min_area:
            continue
        rows = np.flatnonzero(ink.any(axis=1))
        cols = np.flatnonzero(ink.any(axis=0))
        y0, y1 = window[0].start + rows[0], window[0].start + rows[-1] + 1
        x0, x1 = window[1].start + cols[0], window[1].start + cols[-1] + 1
        own = (labels[y0:y1, x0:x1] == index) & mask[y0:y1, x0:x1]
        if source is not None:
            crop = np.where(labels[y0:y1, x0:x1] == index, source.pixels[y0:y1, x0:x1], 255)
        else:
            crop = np.where(own, 0, 255)
        regions.append(WordRegion(bbox=(int(x0), int(y0), int(x1 - x0), int(y1 - y0)),
                                  image=GrayImage(crop.astype(np.uint8)), ink_pixels=area))
    regions.sort(key=lambda region: (region.bbox[1], region.bbox[0]))
    return regions


def stroke_width(mask: np.ndarray) -> float:
    """Estimate the mean pen width of an ink mask from its distance-transform ridge."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return 0.0
    distance = ndimage.distance_transform_edt(mask)
    ridge = mask & (distance >= ndimage.maximum_filter(distance, size=3))
    return float(2.0 * distance[ridge].mean() - 1.0)
