"""Histogram sources: MNIST IDX3 image files and seeded synthetic histograms."""

import struct
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .core import DEFAULT_SMOOTHING, Histogram
from .errors import FormatError

IDX3_UBYTE_MAGIC = 0x00000803
_HEADER = struct.Struct(">IIII")


def read_idx3(path):
    """Read an IDX3 unsigned-byte file into a ``(count, rows, cols)`` uint8 array.

    Layout (big endian): u32 magic ``0x00000803``, u32 count, u32 rows,
    u32 cols, then ``count * rows * cols`` pixel bytes, row-major.
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise FormatError(f"{path}: file too short for an IDX3 header ({len(data)} bytes)")
    magic, count, rows, cols = _HEADER.unpack_from(data)
    if magic != IDX3_UBYTE_MAGIC:
        raise FormatError(f"{path}: bad magic 0x{magic:08x}, expected 0x{IDX3_UBYTE_MAGIC:08x}")
    if count == 0 or rows == 0 or cols == 0:
        raise FormatError(f"{path}: degenerate dimensions ({count}, {rows}, {cols})")
    expected = _HEADER.size + count * rows * cols
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes for dims ({count}, {rows}, {cols}), got {len(data)}")
    pixels = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    return pixels.reshape(count, rows, cols)


class ImageHistograms(Sequence):
    """Lazy sequence of histograms, one per image.

    Each image is flattened row-major, zero pixels are smoothed to
    ``smoothing`` times the image's total intensity, and the result is
    normalized onto the simplex.
    """

    def __init__(self, images, smoothing=DEFAULT_SMOOTHING):
        images = np.asarray(images)
        if images.ndim != 3:
            raise FormatError(f"expected a (count, rows, cols) image stack, got shape {images.shape}")
        totals = images.reshape(images.shape[0], -1).sum(axis=1, dtype=np.int64)
        empty = np.flatnonzero(totals == 0)
        if empty.size:
            raise FormatError(f"image {int(empty[0])} has zero total intensity and cannot be normalized")
        self.images = images
        self.smoothing = smoothing

    @property
    def shape(self):
        return self.images.shape[1:]

    def __len__(self):
        return self.images.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        return Histogram.from_mass(self.images[i].ravel(), smoothing=self.smoothing)


def load_mnist_images(path, smoothing=DEFAULT_SMOOTHING):
    """Histograms for every image of an MNIST IDX3 file (lazily normalized)."""
    return ImageHistograms(read_idx3(path), smoothing=smoothing)


def write_idx3(path, images):
    """Write a uint8 ``(count, rows, cols)`` stack in IDX3 format."""
    images = np.asarray(images, dtype=np.uint8)
    count, rows, cols = images.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(IDX3_UBYTE_MAGIC, count, rows, cols))
        fh.write(np.ascontiguousarray(images).tobytes())


def random_histogram_pair(n, rng):
    """Two histograms with i.i.d. entries uniform on (0, 1], renormalized."""
    if n < 2:
        raise ValueError("n must be at least 2")
    a = 1.0 - rng.random(n)
    b = 1.0 - rng.random(n)
    return Histogram.from_mass(a), Histogram.from_mass(b)


def mnist_like_image(rng, side=28, margin=4, density=0.19):
    """Sparse random uint8 image standing in for an MNIST digit.

    Roughly ``density`` of the pixels inside the central window (``margin``
    pixels from each border) get an intensity in ``[1, 255]``; the rest of
    the image is zero.
    """
    img = np.zeros((side, side), dtype=np.uint8)
    inner = side - 2 * margin
    if inner < 1:
        raise ValueError("margin leaves no room for the central window")
    on = rng.random((inner, inner)) < density
    if not on.any():
        on[rng.integers(inner), rng.integers(inner)] = True
    vals = rng.integers(1, 256, size=(inner, inner), dtype=np.uint8)
    img[margin : side - margin, margin : side - margin] = np.where(on, vals, 0)
    return img


def mnist_like_pair(rng, side=28, smoothing=DEFAULT_SMOOTHING):
    """Pair of smoothed histograms from two independent :func:`mnist_like_image` draws."""
    return tuple(
        Histogram.from_mass(mnist_like_image(rng, side).ravel(), smoothing=smoothing) for _ in range(2)
    )
