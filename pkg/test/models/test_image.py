import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from boxcoxseg.models import image


def test_to_gray():
    """Tests image.to_gray function"""
    pixels = np.array([[[255, 255, 255], [0, 0, 0], [255, 0, 0]]], dtype=np.float64)
    gray = image.to_gray(image.RgbImage(pixels))
    assert gray.shape == (1, 3)
    assert gray.pixels[0, 0] == pytest.approx(255.0)
    assert gray.pixels[0, 1] == 0.0
    assert gray.pixels[0, 2] == pytest.approx(76.245)


def test_to_gray_is_linear_in_each_channel():
    """Tests image.to_gray scales with a single channel"""
    pixels = np.zeros((2, 2, 3))
    pixels[:, :, 1] = 100.0
    scaled = pixels.copy()
    scaled[:, :, 1] = 50.0
    assert np.allclose(image.to_gray(image.RgbImage(scaled)).pixels,
                       0.5 * image.to_gray(image.RgbImage(pixels)).pixels)


def test_rgb_image_validation():
    """Tests image.RgbImage rejects out of range and badly shaped arrays"""
    with pytest.raises(ValueError):
        image.RgbImage(np.full((2, 2, 3), 256.0))
    with pytest.raises(ValueError):
        image.RgbImage(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        image.RgbImage(np.zeros((0, 2, 3)))


def test_gray_image_validation():
    """Tests image.GrayImage rejects negative and non-finite intensities"""
    with pytest.raises(ValueError):
        image.GrayImage(np.array([[-1.0]]))
    with pytest.raises(ValueError):
        image.GrayImage(np.array([[np.nan]]))
    gray = image.GrayImage(np.array([[1.0]]))
    with pytest.raises(ValueError):
        gray.pixels[0, 0] = 2.0


def test_vectorize():
    """Tests image.vectorize function"""
    vector = image.vectorize(pytest.small_gray)
    assert vector.values.tolist() == [1.0, 2.0, 3.0, 4.0]
    assert vector.origin_shape == (2, 2)
    singleton = image.vectorize(image.GrayImage(np.array([[5.0]])))
    assert singleton.values.tolist() == [5.0] and len(singleton) == 1


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=32), st.integers(min_value=1, max_value=32),
       st.integers(min_value=0, max_value=2 ** 16))
def test_unvectorize_inverts_vectorize(height, width, seed):
    """Tests image.unvectorize restores every image shape"""
    gray = image.GrayImage(np.random.default_rng(seed).uniform(0, 255, (height, width)))
    assert image.unvectorize(image.vectorize(gray)) == gray


def test_intensity_vector_shape_check():
    """Tests image.IntensityVector refuses values that do not fill its shape"""
    with pytest.raises(ValueError):
        image.IntensityVector(np.arange(5.0), (2, 2))


def test_palette_from_string():
    """Tests image.Palette.from_string parsing of gray and colour palettes"""
    palette = pytest.binary_palette
    assert not palette.is_color
    assert palette.num_classes == 2
    assert palette.class_names == ["background", "foreground"]
    lunar = image.Palette.from_string("#000000|#00ff00=surface;#0000ff=rock;#ff0000=sky")
    assert lunar.is_color
    assert lunar.num_classes == 3
    assert lunar.export_value(0) == (0, 0, 0)
    assert lunar.export_value(2) == (255, 0, 0)
    assert image.Palette.from_string(lunar.to_string()).entries == lunar.entries


def test_palette_validation():
    """Tests image.Palette rejects malformed mappings"""
    with pytest.raises(ValueError):
        image.Palette.from_string("0=background;0=foreground")
    with pytest.raises(ValueError):
        image.Palette.from_string("0=background;#ffffff=foreground")
    with pytest.raises(ValueError):
        image.Palette.from_string("0 background")
    with pytest.raises(ValueError):
        image.Palette([(0, 0), (255, 2)])


def test_label_mask():
    """Tests image.LabelMask validation and names"""
    mask = pytest.small_mask
    assert mask.shape == (2, 2)
    assert mask.names() == ["background", "foreground"]
    assert image.LabelMask(np.zeros((2, 2)), 3).names() == ["0", "1", "2"]
    with pytest.raises(ValueError):
        image.LabelMask(np.array([[0, 2]]), 2)
    with pytest.raises(ValueError):
        image.LabelMask(np.array([[0, 1]]), 2, ["only one name"])
