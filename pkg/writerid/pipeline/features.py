"""Word image to patches to embeddings, shared by training, identification and evaluation."""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..config import PipelineConfig
from ..errors import DimensionError
from ..imaging import GrayImage, denoise, read_image
from ..keypoints import Keypoint, NormalizedPatch, find_keypoints, word_patches
from ..logging import mainLogger


@dataclass
class WordPatches:
    word_id: str
    writer: Optional[str]
    patches: List[NormalizedPatch] = field(default_factory=list)
    keypoints: List[Keypoint] = field(default_factory=list)


@dataclass
class PatchSet:
    """Patches of many words, flattened, with the owning word and writer of every patch."""
    words: List[WordPatches]

    @property
    def patches(self) -> List[NormalizedPatch]:
        return [p for word in self.words for p in word.patches]

    @property
    def writers(self) -> np.ndarray:
        return np.array([word.writer for word in self.words for _ in word.patches], dtype=object)

    @property
    def word_index(self) -> np.ndarray:
        return np.array([i for i, word in enumerate(self.words) for _ in word.patches], dtype=np.int64)

    def __len__(self):
        return sum(len(word.patches) for word in self.words)


def prepare_word(image: GrayImage, cfg: PipelineConfig) -> GrayImage:
    """Whiten everything the Gaussian-threshold denoiser does not consider ink."""
    if not cfg.clean_words:
        return image
    mask = denoise(image, cfg.denoise_sigma, cfg.denoise_threshold).mask
    return GrayImage(np.where(mask, image.pixels, 255))


def extract_word(image: GrayImage, word_id: str, cfg: PipelineConfig,
                 writer: Optional[str] = None) -> WordPatches:
    cleaned = prepare_word(image, cfg)
    try:
        keypoints = find_keypoints(cleaned, **cfg.keypoint_settings())
    except DimensionError as ex:
        mainLogger.warning('Word %s yields no keypoints: %s', word_id, ex)
        return WordPatches(word_id, writer)
    pairs = word_patches(cleaned, keypoints, word_id, cfg.patch_size_factor)
    if not pairs:
        mainLogger.warning('Word %s yields no patches', word_id)
        return WordPatches(word_id, writer)
    patches, kept = zip(*pairs)
    return WordPatches(word_id, writer, list(patches), list(kept))


def extract_file(file_path: str, word_id: str, cfg: PipelineConfig, writer: Optional[str] = None) -> WordPatches:
    return extract_word(read_image(file_path), word_id, cfg, writer)


def collect_patches(items: Sequence[Tuple[str, str, Optional[str]]], cfg: PipelineConfig,
                    executor=None) -> PatchSet:
    """Extract patches of ``(path, word id, writer)`` items, in item order."""
    mapper = executor.map if executor is not None else map
    words = list(mapper(lambda item: extract_file(item[0], item[1], cfg, item[2]), items))
    mainLogger.info('Extracted %d patches from %d words', sum(len(w.patches) for w in words), len(words))
    return PatchSet(words)


def sample_items(samples) -> List[Tuple[str, str, str]]:
    return [(s.path, s.word_id, s.writer) for s in samples]
