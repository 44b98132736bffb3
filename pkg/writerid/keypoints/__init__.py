from .pyramid import DoGPyramid, build_pyramid, max_octaves
from .detection import Keypoint, detect, assign_orientations, find_keypoints, remove_duplicates
from .patches import NormalizedPatch, PatchTooSmall, PatchTooLarge, PATCH_SIZE, extract_patch, normalize_patch, \
    patch_side, word_patches, dump_patches
