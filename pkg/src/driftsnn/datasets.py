"""Dataset ingestion and generation.

Reads and writes the IDX binary format (big-endian magic, dimension
header, unsigned-byte payload) used by the classic handwritten-digit
files, and can procedurally generate a deterministic 28x28 digit corpus
for self-contained experiments: each digit class is a set of strokes,
randomly jittered per sample (rotation, scale, shift, thickness) and
normalized to a fixed total ink so per-sample input spike counts are
comparable across classes.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .encoding import ImageSample
from .errors import DataFormatError

IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_LABELS = 0x00000801

# Total intensity every generated image is scaled to; keeps the encoded
# spike-count distribution narrow across classes.
TARGET_INK = 20000.0

_MAX_ELEMENTS = 1 << 33  # guard against absurd dimension headers


def _read_u32(buf: bytes, offset: int, path, what: str) -> int:
    if len(buf) < offset + 4:
        raise DataFormatError(f"truncated file while reading {what}", path, offset)
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx_images(path) -> np.ndarray:
    """Parse an IDX image file into a [count, rows*cols] uint8 array.

    Expects the 3-dimensional unsigned-byte layout: magic 0x00000803,
    then count, rows, cols as big-endian u32, then row-major pixels.
    """
    path = Path(path)
    buf = path.read_bytes()
    magic = _read_u32(buf, 0, path, "magic")
    if magic != IDX_MAGIC_IMAGES:
        raise DataFormatError(
            f"bad magic 0x{magic:08x}, expected 0x{IDX_MAGIC_IMAGES:08x} (ubyte images)",
            path,
            0,
        )
    count = _read_u32(buf, 4, path, "image count")
    rows = _read_u32(buf, 8, path, "row count")
    cols = _read_u32(buf, 12, path, "column count")
    n_pixels = count * rows * cols
    if n_pixels > _MAX_ELEMENTS:
        raise DataFormatError(
            f"dimension overflow: {count} x {rows} x {cols} pixels", path, 4
        )
    if len(buf) != 16 + n_pixels:
        raise DataFormatError(
            f"payload size mismatch: header promises {n_pixels} pixel bytes, "
            f"file carries {len(buf) - 16}",
            path,
            16,
        )
    if count == 0:
        return np.zeros((0, rows * cols), dtype=np.uint8)
    data = np.frombuffer(buf, dtype=np.uint8, count=n_pixels, offset=16)
    return data.reshape(count, rows * cols).copy()


def load_idx_labels(path) -> np.ndarray:
    """Parse an IDX label file into a [count] uint8 array of digits 0..9."""
    path = Path(path)
    buf = path.read_bytes()
    magic = _read_u32(buf, 0, path, "magic")
    if magic != IDX_MAGIC_LABELS:
        raise DataFormatError(
            f"bad magic 0x{magic:08x}, expected 0x{IDX_MAGIC_LABELS:08x} (ubyte labels)",
            path,
            0,
        )
    count = _read_u32(buf, 4, path, "label count")
    if count > _MAX_ELEMENTS:
        raise DataFormatError(f"dimension overflow: {count} labels", path, 4)
    if len(buf) != 8 + count:
        raise DataFormatError(
            f"payload size mismatch: header promises {count} label bytes, "
            f"file carries {len(buf) - 8}",
            path,
            8,
        )
    labels = np.frombuffer(buf, dtype=np.uint8, count=count, offset=8).copy()
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise DataFormatError(
            f"label byte {labels[bad[0]]} out of range [0, 9]", path, 8 + int(bad[0])
        )
    return labels


def pair_dataset(images: np.ndarray, labels: np.ndarray, path=None):
    """Check that an image array and a label array describe the same set."""
    if images.shape[0] != labels.shape[0]:
        raise DataFormatError(
            f"image/label count mismatch: {images.shape[0]} images, "
            f"{labels.shape[0]} labels",
            path,
        )


def save_idx_images(path, images: np.ndarray, rows: int = 28, cols: int = 28):
    """Write a [count, rows*cols] uint8 array as an IDX image file."""
    images = np.ascontiguousarray(images, dtype=np.uint8)
    header = struct.pack(">IIII", IDX_MAGIC_IMAGES, images.shape[0], rows, cols)
    Path(path).write_bytes(header + images.tobytes())


def save_idx_labels(path, labels: np.ndarray):
    """Write a [count] uint8 array as an IDX label file."""
    labels = np.ascontiguousarray(labels, dtype=np.uint8)
    header = struct.pack(">II", IDX_MAGIC_LABELS, labels.shape[0])
    Path(path).write_bytes(header + labels.tobytes())


# ----------------------------------------------------------------------
# procedural digit corpus
#
# Strokes live in a normalized [0,1]^2 box, y pointing down.  A stroke is
# either a polyline ("seg", [(x, y), ...]) or an elliptical arc
# ("arc", cx, cy, rx, ry, deg0, deg1) swept from deg0 to deg1 (0 deg =
# +x, 90 deg = +y).

DIGIT_STROKES: dict[int, list[tuple]] = {
    0: [("arc", 0.50, 0.50, 0.22, 0.32, 0, 360)],
    1: [("seg", [(0.38, 0.30), (0.52, 0.16), (0.52, 0.84)])],
    2: [
        ("arc", 0.50, 0.31, 0.23, 0.16, 190, 395),
        ("seg", [(0.68, 0.40), (0.28, 0.84), (0.74, 0.84)]),
    ],
    3: [
        ("arc", 0.46, 0.32, 0.21, 0.16, 200, 450),
        ("arc", 0.46, 0.66, 0.22, 0.18, 270, 520),
    ],
    4: [
        ("seg", [(0.58, 0.14), (0.24, 0.60), (0.78, 0.60)]),
        ("seg", [(0.62, 0.32), (0.62, 0.86)]),
    ],
    5: [
        ("seg", [(0.72, 0.16), (0.32, 0.16), (0.30, 0.47)]),
        ("arc", 0.47, 0.64, 0.22, 0.20, 215, 460),
    ],
    6: [
        ("arc", 0.52, 0.52, 0.24, 0.36, 300, 180),
        ("arc", 0.50, 0.67, 0.20, 0.18, 0, 360),
    ],
    7: [("seg", [(0.26, 0.18), (0.76, 0.18), (0.42, 0.85)])],
    8: [
        ("arc", 0.50, 0.32, 0.17, 0.15, 0, 360),
        ("arc", 0.50, 0.67, 0.20, 0.17, 0, 360),
    ],
    9: [
        ("arc", 0.52, 0.34, 0.19, 0.17, 0, 360),
        ("seg", [(0.71, 0.36), (0.62, 0.85)]),
    ],
}

_POINTS_PER_UNIT = 220  # stroke sampling density in the normalized box


def _stroke_points(stroke) -> np.ndarray:
    if stroke[0] == "seg":
        pts = np.asarray(stroke[1], dtype=np.float64)
        out = []
        for a, b in zip(pts[:-1], pts[1:]):
            n = max(2, int(np.hypot(*(b - a)) * _POINTS_PER_UNIT))
            t = np.linspace(0.0, 1.0, n)[:, None]
            out.append(a + t * (b - a))
        return np.concatenate(out)
    if stroke[0] == "arc":
        _, cx, cy, rx, ry, d0, d1 = stroke
        span = np.radians(abs(d1 - d0))
        n = max(2, int(span * max(rx, ry) * _POINTS_PER_UNIT))
        theta = np.radians(np.linspace(d0, d1, n))
        return np.stack([cx + rx * np.cos(theta), cy + ry * np.sin(theta)], axis=1)
    raise ValueError(f"unknown stroke kind {stroke[0]!r}")


def render_digit(
    digit: int,
    rng: np.random.Generator,
    side: int = 28,
    jitter: float = 1.0,
) -> np.ndarray:
    """Render one jittered digit glyph as a [side, side] uint8 image.

    ``jitter`` scales all random distortions; 0 renders the canonical
    glyph.  Total intensity is normalized to ``TARGET_INK``.
    """
    pts = np.concatenate([_stroke_points(s) for s in DIGIT_STROKES[digit]])

    angle = np.radians(rng.uniform(-9.0, 9.0) * jitter)
    scale = 1.0 + rng.uniform(-0.09, 0.09, size=2) * jitter
    shift = rng.uniform(-0.055, 0.055, size=2) * jitter
    rot = np.array(
        [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]]
    )
    pts = (pts - 0.5) * scale @ rot.T + 0.5 + shift

    # bilinear splat onto the pixel grid
    grid = np.zeros((side, side), dtype=np.float64)
    xy = np.clip(pts * (side - 1), 0.0, side - 1 - 1e-9)
    x0 = xy[:, 0].astype(int)
    y0 = xy[:, 1].astype(int)
    fx = xy[:, 0] - x0
    fy = xy[:, 1] - y0
    np.add.at(grid, (y0, x0), (1 - fx) * (1 - fy))
    np.add.at(grid, (y0, np.minimum(x0 + 1, side - 1)), fx * (1 - fy))
    np.add.at(grid, (np.minimum(y0 + 1, side - 1), x0), (1 - fx) * fy)
    np.add.at(grid, (np.minimum(y0 + 1, side - 1), np.minimum(x0 + 1, side - 1)), fx * fy)

    sigma = 0.85 + rng.uniform(0.0, 0.35) * jitter
    grid = gaussian_filter(grid, sigma)
    # two normalization passes: the first clip sheds ink on thin strokes,
    # the second pass pushes the total back toward the target
    for _ in range(2):
        total = grid.sum()
        if total <= 0:
            break
        grid = np.clip(grid * (TARGET_INK / total), 0.0, 255.0)
    return grid.astype(np.uint8)


def synthetic_digit_corpus(
    n_per_class: int, seed: int = 1234, side: int = 28
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic corpus of jittered digits, block-ordered by class.

    Returns (images [n, side*side] uint8, labels [n] uint8).  Every sample
    draws from its own seeded substream, so the corpus is stable under
    resizing.
    """
    images = np.zeros((10 * n_per_class, side * side), dtype=np.uint8)
    labels = np.zeros(10 * n_per_class, dtype=np.uint8)
    i = 0
    for digit in range(10):
        for k in range(n_per_class):
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(digit, k)))
            )
            images[i] = render_digit(digit, rng, side=side).ravel()
            labels[i] = digit
            i += 1
    return images, labels


def write_idx_corpus(
    directory,
    n_train_per_class: int = 700,
    n_test_per_class: int = 200,
    seed: int = 1234,
) -> dict[str, Path]:
    """Generate a train/test digit corpus and write it as four IDX files.

    Train and test draw from disjoint seeded substreams.  Returns the file
    paths keyed as train_images / train_labels / test_images / test_labels.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    train_x, train_y = synthetic_digit_corpus(n_train_per_class, seed=seed)
    test_x, test_y = synthetic_digit_corpus(n_test_per_class, seed=seed + 1)
    paths = {
        "train_images": directory / "train-images-idx3-ubyte",
        "train_labels": directory / "train-labels-idx1-ubyte",
        "test_images": directory / "test-images-idx3-ubyte",
        "test_labels": directory / "test-labels-idx1-ubyte",
    }
    save_idx_images(paths["train_images"], train_x)
    save_idx_labels(paths["train_labels"], train_y)
    save_idx_images(paths["test_images"], test_x)
    save_idx_labels(paths["test_labels"], test_y)
    return paths


def as_samples(images: np.ndarray, labels: np.ndarray) -> list[ImageSample]:
    """Wrap parallel image/label arrays as ImageSample objects."""
    pair_dataset(images, labels)
    return [ImageSample(pixels=img, label=int(lab)) for img, lab in zip(images, labels)]
