"""Image preprocessing and comparison against direct-summation oracles."""

import math
import time

import numpy as np
import pytest

from conftest import solid
from profilematch.errors import ImageFormatError
from profilematch.images import (GrayImage, InMemoryImageStore, mse,
                                 pixel_levenshtein, preprocess_image, psnr,
                                 resample_bicubic)

BICUBIC_A = -0.5


def catmull_rom_weight(t):
    t = abs(t)
    a = BICUBIC_A
    if t < 1.0:
        return (a + 2.0) * t ** 3 - (a + 3.0) * t ** 2 + 1.0
    if t < 2.0:
        return a * t ** 3 - 5.0 * a * t ** 2 + 8.0 * a * t - 4.0 * a
    return 0.0


def oracle_resample_1d(row, n_out):
    """Direct per-pixel 4-tap convolution, center-aligned, edge-clamped."""
    n_in = len(row)
    scale = n_in / n_out
    out = []
    for i in range(n_out):
        src = (i + 0.5) * scale - 0.5
        base = math.floor(src)
        acc = 0.0
        for k in range(-1, 3):
            idx = min(max(base + k, 0), n_in - 1)
            acc += row[idx] * catmull_rom_weight(src - (base + k))
        out.append(acc)
    return out


class TestGrayImage:
    def test_accepts_flat_uint8(self):
        img = solid(7)
        assert img.pixels.shape == (2304,)
        assert img.pixels[0] == 7

    def test_rejects_wrong_shape(self):
        with pytest.raises(ImageFormatError):
            GrayImage(np.zeros((48, 48), dtype=np.uint8))

    def test_rejects_out_of_range(self):
        with pytest.raises(ImageFormatError):
            GrayImage(np.full(2304, 300, dtype=np.int32))

    def test_bytes_round_trip(self):
        rng = np.random.default_rng(5)
        img = GrayImage(rng.integers(0, 256, 2304, dtype=np.uint8))
        assert GrayImage.from_bytes(img.to_bytes()) == img

    def test_from_bytes_wrong_length(self):
        with pytest.raises(ImageFormatError):
            GrayImage.from_bytes(b"\x00" * 100)

    def test_pixels_are_immutable(self):
        img = solid(0)
        with pytest.raises(ValueError):
            img.pixels[0] = 1


class TestResample:
    def test_matches_direct_summation_oracle_1d(self):
        rng = np.random.default_rng(11)
        row = rng.uniform(0, 255, 96)
        got = resample_bicubic(row.reshape(-1, 1), 48, 1).ravel()
        expected = oracle_resample_1d(row, 48)
        np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_matches_direct_summation_oracle_2d(self):
        rng = np.random.default_rng(12)
        img = rng.uniform(0, 255, (13, 9))
        got = resample_bicubic(img, 5, 4)
        # separable: rows first, then columns of the row-resampled image
        rows_done = np.stack([oracle_resample_1d(img[:, j], 5)
                              for j in range(9)], axis=1)
        expected = np.stack([oracle_resample_1d(rows_done[i, :], 4)
                             for i in range(5)], axis=0)
        np.testing.assert_allclose(got, expected, atol=1e-9)

    def test_constant_image_is_preserved(self):
        img = np.full((100, 77), 133.0)
        out = resample_bicubic(img, 48, 48)
        np.testing.assert_allclose(out, 133.0, atol=1e-9)

    def test_identity_when_size_matches(self):
        rng = np.random.default_rng(13)
        img = rng.uniform(0, 255, (48, 48))
        np.testing.assert_allclose(resample_bicubic(img, 48, 48), img,
                                   atol=1e-9)


class TestPreprocess:
    def test_pure_red_maps_to_luma_76(self):
        raw = np.zeros((100, 100, 3), dtype=np.uint8)
        raw[:, :, 0] = 255
        img = preprocess_image(raw)
        # 0.299 * 255 = 76.245 -> rounds to 76 everywhere
        assert set(img.pixels.tolist()) == {76}

    def test_white_stays_white(self):
        raw = np.full((64, 64, 3), 255, dtype=np.uint8)
        assert set(preprocess_image(raw).pixels.tolist()) == {255}

    def test_overshoot_is_clamped(self):
        # a hard edge makes Catmull-Rom overshoot past the input range
        raw = np.zeros((96, 96, 3), dtype=np.uint8)
        raw[:, 48:, :] = 255
        img = preprocess_image(raw)
        assert img.pixels.min() >= 0 and img.pixels.max() <= 255

    def test_rejects_non_rgb(self):
        with pytest.raises(ImageFormatError):
            preprocess_image(np.zeros((10, 10), dtype=np.uint8))
        with pytest.raises(ImageFormatError):
            preprocess_image(np.zeros((0, 10, 3), dtype=np.uint8))


class TestMetrics:
    def test_mse_extremes(self):
        assert mse(solid(0), solid(255)) == 65025.0
        assert mse(solid(7), solid(7)) == 0.0

    def test_mse_known_value(self):
        a = solid(10)
        b = solid(13)
        assert mse(a, b) == 9.0

    def test_psnr_extremes(self):
        assert psnr(solid(0), solid(255)) == 0.0
        assert psnr(solid(7), solid(7)) == 100.0

    def test_psnr_closed_form(self):
        # uniform offset d gives mse d^2: 10*log10(65025/2601) = 10*log10(25)
        assert psnr(solid(0), solid(51)) == pytest.approx(
            10.0 * math.log10(25.0), abs=1e-12)

    def test_metric_symmetry(self):
        rng = np.random.default_rng(3)
        a = GrayImage(rng.integers(0, 256, 2304, dtype=np.uint8))
        b = GrayImage(rng.integers(0, 256, 2304, dtype=np.uint8))
        assert mse(a, b) == mse(b, a)
        assert psnr(a, b) == psnr(b, a)
        assert pixel_levenshtein(a, b) == pixel_levenshtein(b, a)


class TestPixelLevenshtein:
    def test_identical(self):
        assert pixel_levenshtein(solid(5), solid(5)) == 1.0

    def test_fully_different(self):
        assert pixel_levenshtein(solid(0), solid(255)) == 0.0

    def test_tolerance_restores_match(self):
        assert pixel_levenshtein(solid(100), solid(104), tol=4) == 1.0
        assert pixel_levenshtein(solid(100), solid(104), tol=3) == 0.0

    def test_exact_distance_by_counting_argument(self):
        # flipping k zeros to 255 forces distance exactly k: k substitutions
        # suffice, and every edit changes at most one symbol count while b
        # holds k symbols a lacks entirely
        rng = np.random.default_rng(21)
        for k in (1, 7, 100):
            pixels = np.zeros(2304, dtype=np.uint8)
            flips = rng.choice(2304, size=k, replace=False)
            pixels[flips] = 255
            score = pixel_levenshtein(solid(0), GrayImage(pixels))
            assert score == pytest.approx(1.0 - k / 2304.0, abs=1e-12)
            assert pixel_levenshtein(solid(0), GrayImage(pixels),
                                     tol=255) == 1.0

    def test_speed_full_image(self):
        rng = np.random.default_rng(9)
        a = GrayImage(rng.integers(0, 256, 2304, dtype=np.uint8))
        b = GrayImage(rng.integers(0, 256, 2304, dtype=np.uint8))
        start = time.perf_counter()
        pixel_levenshtein(a, b)
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0


class TestStores:
    def test_in_memory_store(self, image_store):
        assert image_store.get("black.png") == solid(0)
        assert image_store.get("missing.png") is None

    def test_directory_store_with_cache(self, tmp_path):
        from PIL import Image

        from profilematch.images import DirectoryImageStore

        root = tmp_path / "imgs"
        root.mkdir()
        arr = np.full((100, 100, 3), 200, dtype=np.uint8)
        Image.fromarray(arr).save(root / "p.png")
        cache = tmp_path / "cache"
        store = DirectoryImageStore(root, cache_dir=cache)
        first = store.get("p.png")
        assert first is not None
        assert (cache / "p.png.g48").exists()
        # second read comes from the sidecar and is identical
        assert store.get("p.png") == first
        assert store.get("absent.png") is None
