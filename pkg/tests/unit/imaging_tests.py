import tempfile
from os import path

import numpy as np
from PIL import Image

from writerid.errors import DimensionError, ParameterError
from writerid.imaging import GrayImage, denoise, read_image, segment_words, stroke_width, to_grayscale, write_png, \
    ImageReadError

_tempdir: str = ""


def setup_module():
    print(f" == Setting up tests for {__name__}")
    global _tempdir
    _tempdir = tempfile.mkdtemp(prefix='imaging-')


def teardown_module():
    print(f" == Tearing down tests for {__name__}")


def _two_words():
    pixels = np.full((60, 160), 255, dtype=np.uint8)
    pixels[20:30, 10:30] = 0
    pixels[22:34, 100:130] = 0
    return GrayImage(pixels)


def test_grayscale_luma():
    rgb = np.array([[[200, 100, 50], [255, 255, 255], [0, 0, 0]]], dtype=np.uint8)
    gray = to_grayscale(rgb)
    assert gray.pixels.tolist() == [[124, 255, 0]]


def test_grayscale_of_achromatic_is_identity():
    values = np.arange(256, dtype=np.uint8).reshape(16, 16)
    gray = to_grayscale(np.stack([values] * 3, axis=-1))
    assert np.array_equal(gray.pixels, values)


def test_grayscale_rejects_planar_input():
    try:
        to_grayscale(np.zeros((4, 4)))
    except DimensionError:
        pass
    else:
        assert False, 'a 2-D raster is not RGB'


def test_denoise_marks_ink_only():
    mask = denoise(_two_words(), sigma=1.0, threshold=180).mask
    assert mask[25, 20] and mask[28, 115]
    assert not mask[5, 5] and not mask[50, 150]


def test_denoise_parameter_ranges():
    for kwargs in ({'sigma': 0}, {'threshold': 300}):
        try:
            denoise(_two_words(), **kwargs)
        except ParameterError:
            continue
        assert False, f'{kwargs} should be rejected'


def test_segment_two_words_in_reading_order():
    image = _two_words()
    regions = segment_words(denoise(image), log_sigma=3.0, min_area=30, source=image)
    assert len(regions) == 2
    assert regions[0].bbox[0] < regions[1].bbox[0]
    x, y, w, h = regions[1].bbox
    assert regions[1].image.pixels.shape == (h, w)
    assert regions[1].image.pixels.min() == 0


def test_segment_blank_page():
    blank = GrayImage(np.full((40, 40), 255, dtype=np.uint8))
    assert segment_words(denoise(blank)) == []


def test_segment_drops_specks():
    pixels = np.full((60, 60), 255, dtype=np.uint8)
    pixels[30:32, 30:32] = 0
    image = GrayImage(pixels)
    assert segment_words(denoise(image), log_sigma=3.0, min_area=30) == []


def test_stroke_width_of_bar():
    mask = np.zeros((40, 60), dtype=bool)
    mask[10:15, 5:55] = True
    assert abs(stroke_width(mask) - 5.0) < 1.0
    assert stroke_width(np.zeros((5, 5), dtype=bool)) == 0.0


def test_png_and_color_input():
    image = _two_words()
    gray_path = path.join(_tempdir, 'gray.png')
    write_png(image, gray_path)
    assert np.array_equal(read_image(gray_path).pixels, image.pixels)

    color_path = path.join(_tempdir, 'color.png')
    Image.fromarray(np.full((8, 8, 3), (200, 100, 50), dtype=np.uint8), mode='RGB').save(color_path)
    assert int(read_image(color_path).pixels[0, 0]) == 124


def test_unreadable_image():
    bad = path.join(_tempdir, 'bad.png')
    with open(bad, 'w') as fp:
        fp.write('not an image')
    try:
        read_image(bad)
    except ImageReadError as ex:
        assert ex.exit_code == 3
    else:
        assert False, 'garbage must not decode'
