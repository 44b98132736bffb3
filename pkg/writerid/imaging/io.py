"""Raster input/output. Grayscale and 24-bit color PNG/PGM (and TIFF) inputs are accepted."""

from os import path
from typing import Iterable, List

import numpy as np
import pandas as pd
from PIL import Image

from ..errors import WriterIdError, ExitCode
from .model import GrayImage, WordRegion
from .preprocess import to_grayscale

IMAGE_EXTENSIONS = ('.png', '.pgm', '.tif', '.tiff')


class ImageReadError(WriterIdError):
    """Raised when an image file cannot be decoded."""
    exit_code = ExitCode.INGESTION


def is_image_file(file_path: str) -> bool:
    return path.isfile(file_path) and file_path.lower().endswith(IMAGE_EXTENSIONS)


def read_image(file_path: str) -> GrayImage:
    """Read a raster as a :class:`GrayImage`; color inputs go through the luma conversion."""
    try:
        with Image.open(file_path) as handle:
            handle.load()
            if handle.mode in ('L', 'P', '1', 'I;16', 'I'):
                pixels = np.asarray(handle.convert('L'))
                return GrayImage(pixels)
            return to_grayscale(np.asarray(handle.convert('RGB')))
    except (OSError, ValueError) as e:
        raise ImageReadError(f'Cannot read image `{file_path}`: {e}') from e


def write_png(image: GrayImage, file_path: str) -> None:
    Image.fromarray(image.pixels, mode='L').save(file_path, format='PNG')


def write_regions_jsonl(records: Iterable[dict], file_path: str) -> None:
    """Write region (or any flat) records as JSON lines, one record per line."""
    df = pd.DataFrame(list(records))
    with open(file_path, 'w') as fp:
        if not df.empty:
            fp.write(df.to_json(orient='records', lines=True, double_precision=15).rstrip('\n') + '\n')


def read_jsonl(file_path: str) -> List[dict]:
    if path.getsize(file_path) == 0:
        return []
    return pd.read_json(file_path, orient='records', lines=True, dtype=False).to_dict(orient='records')


def regions_as_records(regions: List[WordRegion], source: str) -> List[dict]:
    return [region.as_record(source) for region in regions]
