from dataclasses import dataclass
from math import ceil
from typing import List

import numpy as np
from scipy import ndimage

from ..errors import DimensionError, ParameterError
from ..imaging import GrayImage
from ..logging import mainLogger
from .resample import downsample_half

MIN_IMAGE_SIDE = 16
MIN_OCTAVE_SIDE = 8


@dataclass
class DoGPyramid:
    """Gaussian scale space and its adjacent differences.

    ``gaussians[o][i]`` is blurred to ``base_sigma * 2 ** (o + i / s)`` in original pixels,
    ``dogs[o][i] = gaussians[o][i + 1] - gaussians[o][i]``.
    """
    octaves: int
    scales_per_octave: int
    base_sigma: float
    gaussians: List[List[np.ndarray]]
    dogs: List[List[np.ndarray]]

    def layer_sigma(self, layer: float) -> float:
        """Octave-relative blur of (possibly fractional) layer index ``layer``."""
        return self.base_sigma * 2.0 ** (layer / self.scales_per_octave)


def max_octaves(height: int, width: int) -> int:
    count = 0
    while ceil(min(height, width) / 2 ** count) >= MIN_OCTAVE_SIDE:
        count += 1
    return count


def build_pyramid(image: GrayImage, octaves: int = 4, scales_per_octave: int = 3, base_sigma: float = 1.6,
                  clamp_octaves: bool = True) -> DoGPyramid:
    """Build the difference-of-Gaussians pyramid of a word image.

    Arguments:
        image (GrayImage): input, scaled to [0, 1] in a float64 workspace.
        octaves (int): requested octave count.
        scales_per_octave (int): ``s``; each octave holds ``s + 3`` Gaussians and ``s + 2`` DoGs.
        base_sigma (float): blur of the first Gaussian.
        clamp_octaves (bool): reduce the octave count instead of failing when the image is too small.

    Raises:
        DimensionError: the image is smaller than 16x16, or too small for ``octaves`` and
            ``clamp_octaves`` is off.
    """
    if octaves < 1 or scales_per_octave < 1 or base_sigma <= 0:
        raise ParameterError('octaves and scales_per_octave must be >= 1 and base_sigma positive')
    if image.height < MIN_IMAGE_SIDE or image.width < MIN_IMAGE_SIDE:
        raise DimensionError(f'Image {image.width}x{image.height} is smaller than '
                             f'{MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}')
    allowed = max_octaves(image.height, image.width)
    if octaves > allowed:
        if not clamp_octaves:
            raise DimensionError(f'Image {image.width}x{image.height} supports at most {allowed} octaves')
        mainLogger.debug('Clamping octave count from %d to %d', octaves, allowed)
        octaves = allowed

    k = 2.0 ** (1.0 / scales_per_octave)
    increments = [np.sqrt((base_sigma * k ** i) ** 2 - (base_sigma * k ** (i - 1)) ** 2)
                  for i in range(1, scales_per_octave + 3)]

    gaussians, dogs = [], []
    seed = ndimage.gaussian_filter(image.as_float(), base_sigma, mode='reflect')
    for _ in range(octaves):
        levels = [seed]
        for increment in increments:
            levels.append(ndimage.gaussian_filter(levels[-1], increment, mode='reflect'))
        gaussians.append(levels)
        dogs.append([upper - lower for lower, upper in zip(levels, levels[1:])])
        # levels[s] carries twice the base blur, which halving brings back to base_sigma
        seed = downsample_half(levels[scales_per_octave])
    return DoGPyramid(octaves=octaves, scales_per_octave=scales_per_octave, base_sigma=base_sigma,
                      gaussians=gaussians, dogs=dogs)
