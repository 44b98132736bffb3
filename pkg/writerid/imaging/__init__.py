from .model import GrayImage, BinaryImage, WordRegion
from .preprocess import SegmentationError, to_grayscale, denoise, segment_words, gaussian_blur, stroke_width
from .io import read_image, write_png, write_regions_jsonl, read_jsonl, is_image_file, IMAGE_EXTENSIONS, \
    ImageReadError, regions_as_records
