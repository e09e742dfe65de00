"""MNIST IDX ingestion, 20x20 reduction and reproducible train/test splits."""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, IdxCountMismatchError, IdxMagicError, IdxTruncatedError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
CROP = 4

TRAIN_IMAGES = "train-images-idx3-ubyte"
TRAIN_LABELS = "train-labels-idx1-ubyte"
TEST_IMAGES = "t10k-images-idx3-ubyte"
TEST_LABELS = "t10k-labels-idx1-ubyte"


def _read_bytes(path):
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        return fh.read()


def parse_idx(buf, expected_magic, name="<buffer>"):
    """Decode an unsigned-byte IDX tensor from ``buf``."""
    if len(buf) < 4:
        raise IdxTruncatedError(f"{name}: expected at least 4 header bytes, got {len(buf)}")
    (magic,) = struct.unpack(">I", buf[:4])
    if magic != expected_magic:
        raise IdxMagicError(
            f"{name}: magic 0x{magic:08x}, expected 0x{expected_magic:08x}"
        )
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(buf) < header:
        raise IdxTruncatedError(f"{name}: expected {header} header bytes, got {len(buf)}")
    dims = struct.unpack(f">{ndim}I", buf[4:header])
    expected = header + int(np.prod(dims, dtype=np.int64))
    if len(buf) < expected:
        raise IdxTruncatedError(
            f"{name}: expected {expected} bytes, got {len(buf)}"
        )
    return np.frombuffer(buf, dtype=np.uint8, count=expected - header, offset=header).reshape(dims)


def serialize_idx(array):
    """Encode an unsigned-byte array as IDX bytes."""
    array = np.asarray(array)
    if array.dtype != np.uint8:
        raise DomainError(f"only uint8 tensors are supported, got {array.dtype}")
    magic = 0x00000800 | array.ndim
    return struct.pack(f">I{array.ndim}I", magic, *array.shape) + array.tobytes()


@dataclass(frozen=True)
class RawDataset:
    images: np.ndarray  # (n, 28, 28) uint8
    labels: np.ndarray  # (n,) uint8

    def __len__(self):
        return len(self.labels)


def load_idx(images_path, labels_path):
    """Parse an image/label IDX file pair (``.gz`` decompressed transparently)."""
    images = parse_idx(_read_bytes(images_path), IMAGE_MAGIC, str(images_path))
    labels = parse_idx(_read_bytes(labels_path), LABEL_MAGIC, str(labels_path))
    if images.ndim != 3:
        raise IdxMagicError(f"{images_path}: expected a 3-D image tensor, got {images.ndim}-D")
    if len(images) != len(labels):
        raise IdxCountMismatchError(
            f"{len(images)} images in {images_path} but {len(labels)} labels in {labels_path}"
        )
    return RawDataset(images, labels)


def find_split_files(data_dir, split="train"):
    """Locate the IDX pair for ``split`` in ``data_dir``, preferring raw files."""
    names = (TRAIN_IMAGES, TRAIN_LABELS) if split == "train" else (TEST_IMAGES, TEST_LABELS)
    found = []
    for name in names:
        for candidate in (Path(data_dir) / name, Path(data_dir) / f"{name}.gz"):
            if candidate.exists():
                found.append(candidate)
                break
        else:
            raise FileNotFoundError(f"{name}[.gz] not found in {data_dir}")
    return tuple(found)


@dataclass(frozen=True)
class LabeledData:
    images: np.ndarray  # (n, 400) float64 in [-1, 1]
    labels: np.ndarray  # (n,) int64 in [0, 9]

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise DomainError("images and labels differ in length")

    def __len__(self):
        return len(self.labels)

    def subset(self, index):
        return LabeledData(self.images[index], self.labels[index])

    def one_hot(self, n_classes=10):
        return np.eye(n_classes)[self.labels]


def to_20x20(raw):
    """Crop the centered 20x20 window and scale pixels to [-1, 1]."""
    imgs = raw.images
    if imgs.shape[1:] != (28, 28):
        raise DomainError(f"expected 28x28 images, got {imgs.shape[1:]}")
    crop = imgs[:, CROP:28 - CROP, CROP:28 - CROP].reshape(len(imgs), -1)
    return LabeledData(crop.astype(np.float64) / 255.0 * 2.0 - 1.0, raw.labels.astype(np.int64))


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise DomainError(f"test_fraction must be in (0, 1), got {self.test_fraction}")


def split_indices(n, spec):
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_test = int(round(n * spec.test_fraction))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def reshuffle_split(data, spec):
    """Seeded random partition into ``(train, test)``."""
    train_idx, test_idx = split_indices(len(data), spec)
    return data.subset(train_idx), data.subset(test_idx)


def load_pool(data_dir, size=None, seed=0):
    """Load the MNIST training file as 20x20 data, optionally a seeded subset."""
    images, labels = find_split_files(data_dir, "train")
    data = to_20x20(load_idx(images, labels))
    if size is not None and size < len(data):
        idx = np.sort(np.random.default_rng(seed).choice(len(data), size, replace=False))
        data = data.subset(idx)
    return data
