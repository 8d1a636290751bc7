import numpy as np
import pydantic
import pytest
from PIL import Image

from stitchkit.errors import ArgumentError, ImageFormatError, ImageIOError
from stitchkit.imgcore import (
    BinaryMask,
    GrayImage,
    Rect,
    load_image,
    load_mask,
    luma,
    resize_bilinear,
    save_image,
    save_mask,
    to_model_input,
)

from tests.helpers import ramp_image, random_image, random_mask, scalar_resize, write_png


def test_resize_upsamples_on_half_pixel_centers():
    img = GrayImage.from_sequence(2, 1, [0, 255])
    assert resize_bilinear(img, 4, 1).tolist() == [0, 64, 191, 255]


def test_resize_same_size_is_identity():
    img = ramp_image(17, 9)
    assert resize_bilinear(img, 17, 9) is img


@pytest.mark.parametrize("value", [0, 37, 200, 255])
@pytest.mark.parametrize("size", [(3, 5), (224, 224), (40, 13)])
def test_resize_keeps_constant_images(value, size):
    out = resize_bilinear(GrayImage.full(11, 7, value), *size)
    assert out.size == size
    assert np.all(out.pixels == value)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("size", [(5, 8), (13, 3)])
def test_resize_matches_scalar_oracle(seed, size):
    img = random_image(np.random.default_rng(seed), 7, 6)
    got = np.array(resize_bilinear(img, *size).tolist())
    expected = np.array(scalar_resize(img, *size))
    assert np.max(np.abs(got - expected)) <= 1


def test_resize_output_stays_within_input_range():
    img = random_image(np.random.default_rng(3), 31, 17)
    out = resize_bilinear(img, 64, 64)
    assert out.pixels.min() >= img.pixels.min()
    assert out.pixels.max() <= img.pixels.max()


@pytest.mark.parametrize("size", [(0, 4), (4, 0), (-1, 3)])
def test_resize_rejects_empty_target(size):
    with pytest.raises(ArgumentError):
        resize_bilinear(ramp_image(4, 4), *size)


def test_model_input_is_square():
    assert to_model_input(ramp_image(300, 500)).size == (224, 224)


def test_luma_weights():
    rgb = np.array([[[255, 255, 255], [255, 0, 0], [0, 255, 0], [0, 0, 255]]], dtype=np.uint8)
    assert luma(rgb).tolist() == [[255, 77, 151, 28]]


def test_image_rejects_bad_buffers():
    with pytest.raises(ArgumentError):
        GrayImage.from_sequence(3, 3, [0] * 8)
    with pytest.raises(ArgumentError):
        GrayImage(np.zeros((2, 2, 2), dtype=np.uint8))
    with pytest.raises(ArgumentError):
        GrayImage(np.array([[0, 300]]))


def test_image_is_read_only():
    img = ramp_image(4, 4)
    with pytest.raises(ValueError):
        img.pixels[0, 0] = 1


def test_mask_union_and_size_mismatch():
    a = BinaryMask.from_rects(8, 8, [Rect(x=0, y=0, w=2, h=2)])
    b = BinaryMask.from_rects(8, 8, [Rect(x=4, y=4, w=2, h=2)])
    assert a.union(b).count() == 8
    with pytest.raises(ArgumentError):
        a.union(BinaryMask.empty(8, 9))


def test_rect_intersection_with_gap():
    a = Rect(x=0, y=0, w=4, h=4)
    touching = Rect(x=4, y=0, w=4, h=4)
    apart = Rect(x=5, y=0, w=4, h=4)
    assert not a.intersects(touching)
    assert a.intersects(touching, gap=1)
    assert not a.intersects(apart, gap=1)
    assert a.intersects(Rect(x=3, y=3, w=1, h=1))


def test_rect_validation():
    with pytest.raises(pydantic.ValidationError):
        Rect(x=0, y=0, w=0, h=3)
    with pytest.raises(pydantic.ValidationError):
        Rect(x=-1, y=0, w=1, h=1)


@pytest.mark.parametrize("suffix", [".png", ".pgm"])
def test_image_round_trip(tmp_path, suffix):
    img = random_image(np.random.default_rng(5), 23, 11)
    path = tmp_path / f"sample{suffix}"
    save_image(img, path)
    assert load_image(path) == img


def test_mask_round_trip_and_encoding(tmp_path):
    mask = random_mask(np.random.default_rng(6), 19, 12)
    path = tmp_path / "mask.png"
    save_mask(mask, path)
    raw = np.asarray(Image.open(path))
    assert set(np.unique(raw).tolist()) <= {0, 255}
    assert load_mask(path) == mask


def test_mask_load_treats_any_nonzero_as_set(tmp_path):
    path = write_png(np.array([[0, 1], [128, 0]]), tmp_path / "m.png")
    assert load_mask(path).bits.tolist() == [[False, True], [True, False]]


def test_color_input_is_converted_with_luma(tmp_path):
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[..., 0] = 255
    path = tmp_path / "red.png"
    Image.fromarray(rgb).save(path)
    assert load_image(path).tolist() == [77, 77, 77, 77]


def test_missing_file_raises_io_error(tmp_path):
    with pytest.raises(ImageIOError):
        load_image(tmp_path / "nope.png")


def test_truncated_file_raises_io_error(tmp_path):
    path = tmp_path / "broken.png"
    path.write_bytes(b"\x89PNG\r\n\x1a\n garbage")
    with pytest.raises(ImageIOError):
        load_image(path)


def test_sixteen_bit_input_is_rejected(tmp_path):
    path = tmp_path / "deep.png"
    Image.fromarray(np.full((4, 4), 1000, dtype=np.uint16)).save(path)
    with pytest.raises(ImageFormatError):
        load_image(path)


def test_unsupported_output_suffix(tmp_path):
    with pytest.raises(ArgumentError):
        save_image(ramp_image(4, 4), tmp_path / "out.jpg")
