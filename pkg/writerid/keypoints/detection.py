"""Scale-space extrema detection, sub-pixel localisation and orientation assignment."""

from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
from numpy.linalg import lstsq
from scipy import ndimage

from ..errors import ParameterError
from ..imaging import GrayImage
from ..logging import mainLogger
from .pyramid import DoGPyramid, build_pyramid

MAX_REFINE_STEPS = 5
ORIENTATION_BINS = 36
ORIENTATION_PEAK_RATIO = 0.8
ORIENTATION_SIGMA_FACTOR = 1.5
ORIENTATION_RADIUS_FACTOR = 3.0
HISTOGRAM_SMOOTHING = np.array([1, 4, 6, 4, 1], dtype=np.float64) / 16.0

_NEIGHBOURHOOD = np.ones((3, 3, 3), dtype=bool)
_NEIGHBOURHOOD[1, 1, 1] = False


@dataclass(frozen=True)
class Keypoint:
    """A localised scale-space extremum.

    ``x``/``y`` are in original image coordinates. ``scale`` is the octave-relative blur
    ``base_sigma * 2 ** (layer / s)``; :attr:`size` converts it to original pixels.
    """
    x: float
    y: float
    octave: int
    scale: float
    orientation: float = 0.0
    response: float = 0.0
    layer: float = 0.0

    @property
    def size(self) -> float:
        return self.scale * 2 ** self.octave

    def as_record(self) -> dict:
        return {'x': self.x, 'y': self.y, 'octave': self.octave, 'scale': self.scale,
                'orientation': self.orientation, 'response': self.response}


def _derivatives(cube: np.ndarray):
    """Central-difference gradient and Hessian over (x, y, layer) of a 3x3x3 cube."""
    center = cube[1, 1, 1]
    gradient = 0.5 * np.array([cube[1, 1, 2] - cube[1, 1, 0],
                               cube[1, 2, 1] - cube[1, 0, 1],
                               cube[2, 1, 1] - cube[0, 1, 1]])
    dxx = cube[1, 1, 2] - 2 * center + cube[1, 1, 0]
    dyy = cube[1, 2, 1] - 2 * center + cube[1, 0, 1]
    dss = cube[2, 1, 1] - 2 * center + cube[0, 1, 1]
    dxy = 0.25 * (cube[1, 2, 2] - cube[1, 2, 0] - cube[1, 0, 2] + cube[1, 0, 0])
    dxs = 0.25 * (cube[2, 1, 2] - cube[2, 1, 0] - cube[0, 1, 2] + cube[0, 1, 0])
    dys = 0.25 * (cube[2, 2, 1] - cube[2, 0, 1] - cube[0, 2, 1] + cube[0, 0, 1])
    hessian = np.array([[dxx, dxy, dxs],
                        [dxy, dyy, dys],
                        [dxs, dys, dss]])
    return gradient, hessian


def _localize(stack: np.ndarray, octave: int, layer: int, row: int, col: int, pyramid: DoGPyramid,
              contrast_threshold: float, edge_threshold: float) -> Optional[Keypoint]:
    depth, height, width = stack.shape
    for _ in range(MAX_REFINE_STEPS):
        cube = stack[layer - 1:layer + 2, row - 1:row + 2, col - 1:col + 2]
        gradient, hessian = _derivatives(cube)
        offset = -lstsq(hessian, gradient, rcond=None)[0]
        if np.all(np.abs(offset) < 0.5):
            break
        col += int(round(offset[0]))
        row += int(round(offset[1]))
        layer += int(round(offset[2]))
        if not (1 <= layer <= depth - 2 and 1 <= row <= height - 2 and 1 <= col <= width - 2):
            return None
    else:
        return None

    value = cube[1, 1, 1] + 0.5 * gradient.dot(offset)
    if abs(value) < contrast_threshold:
        return None
    trace = hessian[0, 0] + hessian[1, 1]
    determinant = hessian[0, 0] * hessian[1, 1] - hessian[0, 1] ** 2
    if determinant <= 0 or trace ** 2 / determinant >= (edge_threshold + 1) ** 2 / edge_threshold:
        return None
    factor = 2 ** octave
    return Keypoint(x=(col + offset[0] + 0.5) * factor - 0.5,
                    y=(row + offset[1] + 0.5) * factor - 0.5,
                    octave=octave,
                    scale=pyramid.layer_sigma(layer + offset[2]),
                    response=float(abs(value)),
                    layer=float(layer + offset[2]))


def detect(pyramid: DoGPyramid, contrast_threshold: float = 0.03, edge_threshold: float = 10.0) -> List[Keypoint]:
    """Find strict 26-neighbourhood extrema of the DoG stack and keep the stable ones.

    Candidates are refined by quadratic interpolation, then rejected when the refined
    |DoG| is below ``contrast_threshold`` or when the principal-curvature ratio
    ``tr(H)^2 / det(H)`` reaches ``(r + 1)^2 / r`` for ``r = edge_threshold``.
    """
    if contrast_threshold <= 0 or edge_threshold <= 0:
        raise ParameterError('contrast_threshold and edge_threshold must be positive')
    keypoints = []
    for octave, dogs in enumerate(pyramid.dogs):
        stack = np.stack(dogs)
        neighbour_max = ndimage.maximum_filter(stack, footprint=_NEIGHBOURHOOD, mode='nearest')
        neighbour_min = ndimage.minimum_filter(stack, footprint=_NEIGHBOURHOOD, mode='nearest')
        candidates = ((stack > neighbour_max) | (stack < neighbour_min)) & \
            (np.abs(stack) > 0.5 * contrast_threshold)
        candidates[[0, -1], :, :] = False
        candidates[:, [0, -1], :] = False
        candidates[:, :, [0, -1]] = False
        for layer, row, col in zip(*np.nonzero(candidates)):
            keypoint = _localize(stack, octave, int(layer), int(row), int(col), pyramid,
                                 contrast_threshold, edge_threshold)
            if keypoint is not None:
                keypoints.append(keypoint)
    mainLogger.debug('Detected %d keypoints over %d octaves', len(keypoints), pyramid.octaves)
    return keypoints


def assign_orientations(kp: Keypoint, pyramid: DoGPyramid) -> List[Keypoint]:
    """Return one copy of ``kp`` per dominant gradient orientation.

    A 36-bin histogram of gradient orientations (Gaussian-weighted at 1.5 x scale) is
    built around the keypoint; every smoothed peak reaching 0.8 of the maximum emits a
    keypoint with a parabola-interpolated orientation. Angles follow image coordinates
    (x right, y down). A window without gradient yields an empty list.
    """
    s = pyramid.scales_per_octave
    level = int(np.clip(round(s * np.log2(kp.scale / pyramid.base_sigma)), 0, s + 2))
    image = pyramid.gaussians[kp.octave][level]
    height, width = image.shape
    factor = 2 ** kp.octave
    center_col = int(round((kp.x + 0.5) / factor - 0.5))
    center_row = int(round((kp.y + 0.5) / factor - 0.5))
    sigma = ORIENTATION_SIGMA_FACTOR * kp.scale
    radius = max(1, int(round(ORIENTATION_RADIUS_FACTOR * sigma)))

    rows = np.arange(max(center_row - radius, 1), min(center_row + radius, height - 2) + 1)
    cols = np.arange(max(center_col - radius, 1), min(center_col + radius, width - 2) + 1)
    if rows.size == 0 or cols.size == 0:
        return []
    grid_rows, grid_cols = np.meshgrid(rows, cols, indexing='ij')
    dx = image[grid_rows, grid_cols + 1] - image[grid_rows, grid_cols - 1]
    dy = image[grid_rows + 1, grid_cols] - image[grid_rows - 1, grid_cols]
    magnitude = np.hypot(dx, dy)
    angle = np.mod(np.arctan2(dy, dx), 2 * np.pi)
    weight = np.exp(-((grid_rows - center_row) ** 2 + (grid_cols - center_col) ** 2) / (2 * sigma ** 2))
    bins = np.floor(angle * ORIENTATION_BINS / (2 * np.pi) + 0.5).astype(int) % ORIENTATION_BINS
    histogram = np.bincount(bins.ravel(), weights=(weight * magnitude).ravel(), minlength=ORIENTATION_BINS)
    if histogram.max() <= 0:
        return []
    histogram = ndimage.convolve1d(histogram, HISTOGRAM_SMOOTHING, mode='wrap')

    peak = histogram.max()
    left = np.roll(histogram, 1)
    right = np.roll(histogram, -1)
    oriented = []
    for index in np.flatnonzero((histogram > left) & (histogram > right) &
                                (histogram >= ORIENTATION_PEAK_RATIO * peak)):
        l_value, c_value, r_value = left[index], histogram[index], right[index]
        shift = 0.5 * (l_value - r_value) / (l_value - 2 * c_value + r_value)
        interpolated = (index + shift) % ORIENTATION_BINS
        orientation = (interpolated * 2 * np.pi / ORIENTATION_BINS) % (2 * np.pi)
        oriented.append(replace(kp, orientation=float(orientation)))
    return oriented


def remove_duplicates(keypoints: List[Keypoint]) -> List[Keypoint]:
    unique = {}
    for kp in keypoints:
        key = (round(kp.x, 6), round(kp.y, 6), kp.octave, round(kp.scale, 6), round(kp.orientation, 6))
        unique.setdefault(key, kp)
    return list(unique.values())


def find_keypoints(image: GrayImage, octaves: int = 4, scales_per_octave: int = 3, base_sigma: float = 1.6,
                   contrast_threshold: float = 0.03, edge_threshold: float = 10.0,
                   limit: int = 0) -> List[Keypoint]:
    """Detect, orient and de-duplicate keypoints on a word image.

    Keypoints are returned by decreasing response (ties by position) and, when
    ``limit > 0``, truncated to the ``limit`` strongest.
    """
    pyramid = build_pyramid(image, octaves, scales_per_octave, base_sigma)
    oriented = []
    for kp in detect(pyramid, contrast_threshold, edge_threshold):
        oriented.extend(assign_orientations(kp, pyramid))
    keypoints = sorted(remove_duplicates(oriented), key=lambda kp: (-kp.response, kp.y, kp.x, kp.orientation))
    if limit > 0:
        keypoints = keypoints[:limit]
    return keypoints
