"""Scale-proportional patch cropping and normalisation to the embedder input size."""

from dataclasses import dataclass
from math import floor
from os import path
from typing import List, Tuple

import numpy as np

from ..errors import DimensionError, ExitCode, ParameterError, WriterIdError
from ..imaging import GrayImage, write_png, write_regions_jsonl
from ..logging import mainLogger
from .detection import Keypoint
from .resample import resize_bilinear

PATCH_SIZE = 105
MIN_PATCH_SIDE = 8
MAX_AREA_RATIO = 4


class PatchTooSmall(WriterIdError):
    """Raised when a keypoint's patch side is below the minimum."""
    exit_code = ExitCode.PATCHES


class PatchTooLarge(WriterIdError):
    """Raised when a keypoint's patch would exceed four times the word-image area."""
    exit_code = ExitCode.PATCHES


@dataclass(frozen=True)
class NormalizedPatch:
    """A 105x105 white-padded grayscale patch.

    Attributes:
        pixels (numpy.ndarray): ``uint8`` array of shape ``(105, 105)``.
        source (tuple): ``(word id, keypoint index)``.
    """
    pixels: np.ndarray
    source: Tuple[str, int] = ('', 0)

    def __post_init__(self):
        if np.shape(self.pixels) != (PATCH_SIZE, PATCH_SIZE):
            raise DimensionError(f'Normalized patch must be {PATCH_SIZE}x{PATCH_SIZE}, '
                                 f'got {np.shape(self.pixels)}')
        object.__setattr__(self, 'pixels', np.ascontiguousarray(self.pixels, dtype=np.uint8))

    def as_float(self) -> np.ndarray:
        return self.pixels.astype(np.float64) / 255.0


def _round_half_up(value: float) -> int:
    return int(floor(value + 0.5))


def patch_side(kp: Keypoint, size_factor: float) -> int:
    return _round_half_up(size_factor * kp.scale * 2 ** kp.octave)


def extract_patch(image: GrayImage, kp: Keypoint, size_factor: float = 12.0) -> np.ndarray:
    """Crop an axis-aligned square of side ``round(size_factor * scale * 2^octave)`` around ``kp``.

    Pixels falling outside the image are white.

    Raises:
        PatchTooSmall: the side is below 8 pixels.
        PatchTooLarge: the square covers more than four times the image area.
    """
    if size_factor <= 0:
        raise ParameterError('size_factor must be positive')
    side = patch_side(kp, size_factor)
    if side < MIN_PATCH_SIDE:
        raise PatchTooSmall(f'Patch side {side} is below {MIN_PATCH_SIDE}')
    if side * side > MAX_AREA_RATIO * image.width * image.height:
        raise PatchTooLarge(f'Patch side {side} exceeds {MAX_AREA_RATIO}x the '
                            f'{image.width}x{image.height} image area')

    left = _round_half_up(kp.x) - side // 2
    top = _round_half_up(kp.y) - side // 2
    crop = np.full((side, side), 255, dtype=np.uint8)
    src_top, src_left = max(top, 0), max(left, 0)
    src_bottom, src_right = min(top + side, image.height), min(left + side, image.width)
    if src_bottom > src_top and src_right > src_left:
        crop[src_top - top:src_bottom - top, src_left - left:src_right - left] = \
            image.pixels[src_top:src_bottom, src_left:src_right]
    return crop


def normalize_patch(crop: np.ndarray, source: Tuple[str, int] = ('', 0)) -> NormalizedPatch:
    """Resize ``crop`` so its larger side is 105, keep the aspect ratio and center it on white.

    Raises:
        DimensionError: the crop is smaller than 8x8.
    """
    crop = np.asarray(crop)
    if crop.ndim != 2 or min(crop.shape) < MIN_PATCH_SIDE:
        raise DimensionError(f'Cannot normalize a crop of shape {crop.shape}')
    height, width = crop.shape
    if (height, width) == (PATCH_SIZE, PATCH_SIZE):
        return NormalizedPatch(crop.copy(), source)

    longest = max(height, width)
    out_height = PATCH_SIZE if height == longest else max(1, _round_half_up(height * PATCH_SIZE / longest))
    out_width = PATCH_SIZE if width == longest else max(1, _round_half_up(width * PATCH_SIZE / longest))
    resized = np.clip(np.floor(resize_bilinear(crop, out_height, out_width) + 0.5), 0, 255).astype(np.uint8)

    canvas = np.full((PATCH_SIZE, PATCH_SIZE), 255, dtype=np.uint8)
    top = (PATCH_SIZE - out_height) // 2
    left = (PATCH_SIZE - out_width) // 2
    canvas[top:top + out_height, left:left + out_width] = resized
    return NormalizedPatch(canvas, source)


def word_patches(image: GrayImage, keypoints: List[Keypoint], word_id: str,
                 size_factor: float = 12.0) -> List[Tuple[NormalizedPatch, Keypoint]]:
    """Extract and normalise one patch per keypoint, skipping rejected keypoints."""
    patches = []
    for index, kp in enumerate(keypoints):
        try:
            crop = extract_patch(image, kp, size_factor)
        except (PatchTooSmall, PatchTooLarge) as ex:
            mainLogger.debug('Skipping keypoint %d of word %s: %s', index, word_id, ex)
            continue
        patches.append((normalize_patch(crop, (word_id, index)), kp))
    return patches


def dump_patches(patches: List[Tuple[NormalizedPatch, Keypoint]], out_dir: str) -> str:
    """Write ``<word-id>_<kp-index>.png`` files plus a ``manifest.jsonl``; returns the manifest path."""
    records = []
    for patch, kp in patches:
        word_id, index = patch.source
        file_name = f'{word_id}_{index}.png'
        write_png(GrayImage(patch.pixels), path.join(out_dir, file_name))
        records.append({'file': file_name, 'word_id': word_id, 'kp_index': index, **kp.as_record()})
    manifest = path.join(out_dir, 'manifest.jsonl')
    write_regions_jsonl(records, manifest)
    return manifest
