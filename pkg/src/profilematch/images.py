"""Profile-image preprocessing and similarity.

Images are reduced once to a 48x48 grayscale thumbnail (bicubic
Catmull-Rom resample, a = -0.5, then the (0.299, 0.587, 0.114) luma dot
product) and compared as flat 2304-value intensity sequences with MSE,
PSNR, and normalised edit distance.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ImageFormatError

SIDE = 48
N_PIXELS = SIDE * SIDE
MAX_MSE = 255.0 ** 2
PSNR_CAP = 100.0

GRAY_WEIGHTS = (0.299, 0.587, 0.114)

_BICUBIC_A = -0.5


@dataclass(frozen=True)
class GrayImage:
    """Row-major 48x48 grayscale thumbnail; 2304 values in [0, 255]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.shape != (N_PIXELS,):
            raise ImageFormatError(
                f"expected {N_PIXELS} pixels, got shape {px.shape}")
        if px.dtype != np.uint8:
            if px.min() < 0 or px.max() > 255:
                raise ImageFormatError("pixel values outside [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    def to_bytes(self) -> bytes:
        return self.pixels.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GrayImage":
        if len(data) != N_PIXELS:
            raise ImageFormatError(
                f"expected {N_PIXELS} bytes, got {len(data)}")
        return cls(np.frombuffer(data, dtype=np.uint8))

    def __eq__(self, other):
        return isinstance(other, GrayImage) and np.array_equal(
            self.pixels, other.pixels)

    def __hash__(self):
        return hash(self.to_bytes())


def _catmull_rom(t: np.ndarray) -> np.ndarray:
    t = np.abs(t)
    a = _BICUBIC_A
    near = (a + 2.0) * t ** 3 - (a + 3.0) * t ** 2 + 1.0
    far = a * t ** 3 - 5.0 * a * t ** 2 + 8.0 * a * t - 4.0 * a
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _axis_weights(n_in: int, n_out: int):
    """4-tap Catmull-Rom sample positions and weights for one axis.

    Center-aligned source coordinates; tap indices clamp to the image
    (edge replication). Weights at any position sum to 1, so constant
    images are preserved.
    """
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    taps = np.stack([base - 1, base, base + 1, base + 2])
    weights = _catmull_rom(np.stack([frac + 1.0, frac, frac - 1.0, frac - 2.0]))
    return np.clip(taps, 0, n_in - 1), weights


def _resample_axis0(img: np.ndarray, n_out: int) -> np.ndarray:
    taps, weights = _axis_weights(img.shape[0], n_out)
    out = np.zeros((n_out,) + img.shape[1:], dtype=np.float64)
    shape = (n_out,) + (1,) * (img.ndim - 1)
    for k in range(4):
        out += weights[k].reshape(shape) * img[taps[k]]
    return out


def resample_bicubic(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Separable Catmull-Rom resample of an (h, w[, c]) float array."""
    img = np.asarray(img, dtype=np.float64)
    out = _resample_axis0(img, height)
    out = _resample_axis0(out.swapaxes(0, 1), width).swapaxes(0, 1)
    return out


def preprocess_image(raw: np.ndarray) -> GrayImage:
    """Decoded RGB (h, w, 3) array -> 48x48 GrayImage.

    Resamples first, then applies the luma weights; values are rounded
    half-up and clamped to [0, 255] only at the end, keeping the
    negative-lobe overshoot handling in one place.
    """
    raw = np.asarray(raw)
    if raw.ndim != 3 or raw.shape[2] != 3:
        raise ImageFormatError(f"expected (h, w, 3) RGB array, got {raw.shape}")
    if raw.shape[0] < 1 or raw.shape[1] < 1:
        raise ImageFormatError("zero-sized image")
    small = resample_bicubic(raw.astype(np.float64), SIDE, SIDE)
    gray = (small[:, :, 0] * GRAY_WEIGHTS[0]
            + small[:, :, 1] * GRAY_WEIGHTS[1]
            + small[:, :, 2] * GRAY_WEIGHTS[2])
    rounded = np.floor(gray + 0.5)
    clipped = np.clip(rounded, 0, 255).astype(np.uint8)
    return GrayImage(clipped.reshape(N_PIXELS))


def mse(a: GrayImage, b: GrayImage) -> float:
    d = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(d * d))


def psnr(a: GrayImage, b: GrayImage) -> float:
    """10*log10(255^2 / mse), capped at 100 for identical images."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(MAX_MSE / err))


def pixel_levenshtein(a: GrayImage, b: GrayImage, tol: int = 0) -> float:
    """1 - edit_distance/2304 over the two pixel sequences.

    ``tol`` widens symbol equality to |x - y| <= tol (compression
    artifacts make exact intensity match brittle); the default keeps the
    strict comparison.
    """
    dist = kernels.levenshtein_u8(a.pixels, b.pixels, tol)
    return 1.0 - dist / N_PIXELS


def pillow_decoder(path) -> np.ndarray:
    """Decode an image file to an RGB array via Pillow (lazy import)."""
    try:
        from PIL import Image
    except ImportError as exc:
        raise ImageFormatError(
            "Pillow is required to decode image files "
            "(install the 'images' extra)") from exc
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise ImageFormatError(f"cannot decode {path}: {exc}") from exc


class InMemoryImageStore:
    """ref -> GrayImage mapping for tests and synthetic corpora."""

    def __init__(self, images: dict[str, GrayImage] | None = None):
        self._images = dict(images or {})

    def put(self, ref: str, image: GrayImage):
        self._images[ref] = image

    def get(self, ref: str) -> GrayImage | None:
        return self._images.get(ref)


class DirectoryImageStore:
    """Backed by a directory of image files named by their ref.

    Preprocessed thumbnails are cached as 2304-byte sidecar files in
    ``cache_dir`` so repeated runs skip decode + resample.
    """

    CACHE_SUFFIX = ".g48"

    def __init__(self, root, cache_dir=None, decoder=pillow_decoder):
        self.root = root
        self.cache_dir = cache_dir
        self.decoder = decoder
        if cache_dir is not None:
            os.makedirs(cache_dir, exist_ok=True)

    def _cache_path(self, ref: str):
        if self.cache_dir is None:
            return None
        safe = ref.replace(os.sep, "_").replace("/", "_")
        return os.path.join(self.cache_dir, safe + self.CACHE_SUFFIX)

    def get(self, ref: str) -> GrayImage | None:
        cache_path = self._cache_path(ref)
        if cache_path is not None and os.path.exists(cache_path):
            with open(cache_path, "rb") as f:
                return GrayImage.from_bytes(f.read())
        source = os.path.join(self.root, ref)
        if not os.path.exists(source):
            return None
        image = preprocess_image(self.decoder(source))
        if cache_path is not None:
            with open(cache_path, "wb") as f:
                f.write(image.to_bytes())
        return image
