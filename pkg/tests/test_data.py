import gzip

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from mramsim.data import (
    IMAGE_MAGIC, LABEL_MAGIC, LabeledData, RawDataset, SplitSpec, find_split_files, load_idx,
    load_pool, parse_idx, reshuffle_split, serialize_idx, split_indices, to_20x20,
)
from mramsim.errors import (
    DomainError, IdxCountMismatchError, IdxFormatError, IdxMagicError, IdxTruncatedError,
)


def _write_pair(tmp_path, n_img=5, n_lab=5, gz=False):
    rng = np.random.default_rng(0)
    imgs = rng.integers(0, 256, (n_img, 28, 28), dtype=np.uint8)
    labs = rng.integers(0, 10, n_lab, dtype=np.uint8)
    ip, lp = tmp_path / "img.idx", tmp_path / "lab.idx"
    if gz:
        ip, lp = ip.with_suffix(".gz"), lp.with_suffix(".gz")
        ip.write_bytes(gzip.compress(serialize_idx(imgs)))
        lp.write_bytes(gzip.compress(serialize_idx(labs)))
    else:
        ip.write_bytes(serialize_idx(imgs))
        lp.write_bytes(serialize_idx(labs))
    return ip, lp, imgs, labs


@given(arrays(np.uint8, st.tuples(st.integers(0, 4), st.integers(1, 5), st.integers(1, 5))))
def test_idx_round_trip_bytes(arr):
    buf = serialize_idx(arr)
    parsed = parse_idx(buf, IMAGE_MAGIC)
    np.testing.assert_array_equal(parsed, arr)
    assert serialize_idx(np.ascontiguousarray(parsed)) == buf


def test_label_file_as_image_is_magic_error():
    buf = serialize_idx(np.arange(10, dtype=np.uint8))
    with pytest.raises(IdxMagicError):
        parse_idx(buf, IMAGE_MAGIC)


def test_truncated_names_byte_counts():
    buf = serialize_idx(np.zeros((2, 3, 3), dtype=np.uint8))[:-5]
    with pytest.raises(IdxTruncatedError, match="expected 34 bytes, got 29"):
        parse_idx(buf, IMAGE_MAGIC)
    with pytest.raises(IdxTruncatedError):
        parse_idx(b"\x00\x00", LABEL_MAGIC)


def test_error_classes_distinct():
    kinds = {IdxMagicError, IdxTruncatedError, IdxCountMismatchError}
    assert len(kinds) == 3 and all(issubclass(k, IdxFormatError) for k in kinds)


def test_serialize_requires_uint8():
    with pytest.raises(DomainError):
        serialize_idx(np.zeros(3, dtype=np.int16))


@pytest.mark.parametrize("gz", [False, True])
def test_load_idx_pair(tmp_path, gz):
    ip, lp, imgs, labs = _write_pair(tmp_path, gz=gz)
    raw = load_idx(ip, lp)
    np.testing.assert_array_equal(raw.images, imgs)
    np.testing.assert_array_equal(raw.labels, labs)


def test_load_idx_count_mismatch(tmp_path):
    ip, lp, _, _ = _write_pair(tmp_path, 5, 4)
    with pytest.raises(IdxCountMismatchError):
        load_idx(ip, lp)


def test_find_split_files_missing(tmp_path):
    with pytest.raises(FileNotFoundError):
        find_split_files(tmp_path)


def test_crop_extremes():
    zeros = RawDataset(np.zeros((1, 28, 28), np.uint8), np.zeros(1, np.uint8))
    full = RawDataset(np.full((1, 28, 28), 255, np.uint8), np.zeros(1, np.uint8))
    assert np.all(to_20x20(zeros).images == -1.0)
    assert np.all(to_20x20(full).images == 1.0)


def test_crop_index_mapping_exhaustive():
    # tag every pixel by position: code 28*r + c modulo 256 plus a second image for the high part
    pos = np.arange(28 * 28).reshape(28, 28)
    raw = RawDataset(np.stack([pos % 256, pos // 256]).astype(np.uint8), np.zeros(2, np.uint8))
    out = to_20x20(raw).images
    codes = np.rint((out + 1) / 2 * 255).astype(np.int64)
    decoded = (codes[0] + 256 * codes[1]).reshape(20, 20)
    for r in range(20):
        for c in range(20):
            assert decoded[r, c] == 28 * (r + 4) + (c + 4)
    border = set(pos.ravel()) - set(decoded.ravel())
    assert {0, 27, 28 * 27, 28 * 28 - 1} <= border


def test_crop_rejects_other_sizes():
    with pytest.raises(DomainError):
        to_20x20(RawDataset(np.zeros((1, 20, 20), np.uint8), np.zeros(1, np.uint8)))


def test_split_sizes_and_partition():
    train_idx, test_idx = split_indices(10_000, SplitSpec(0.2, seed=3))
    assert (len(train_idx), len(test_idx)) == (8000, 2000)
    assert not set(train_idx) & set(test_idx)
    assert set(train_idx) | set(test_idx) == set(range(10_000))


def test_split_deterministic():
    a = split_indices(500, SplitSpec(0.3, seed=1))
    b = split_indices(500, SplitSpec(0.3, seed=1))
    c = split_indices(500, SplitSpec(0.3, seed=2))
    np.testing.assert_array_equal(a[1], b[1])
    assert not np.array_equal(a[1], c[1])


@pytest.mark.parametrize("frac", [0.0, 1.0, -0.5])
def test_split_fraction_validated(frac):
    with pytest.raises(DomainError):
        SplitSpec(frac)


def test_labeled_data_length_check():
    with pytest.raises(DomainError):
        LabeledData(np.zeros((2, 400)), np.zeros(3, dtype=np.int64))
    d = LabeledData(np.zeros((2, 400)), np.array([1, 9]))
    assert d.one_hot().shape == (2, 10)


def test_mnist_training_header(mnist_dir):
    raw = load_idx(*find_split_files(mnist_dir, "train"))
    assert raw.images.shape == (60000, 28, 28)
    assert set(np.unique(raw.labels)) == set(range(10))


def test_mnist_splits_contain_every_class(mnist_dir):
    pool = load_pool(mnist_dir, 12000, seed=0)
    train, test = reshuffle_split(pool, SplitSpec(1 / 6, seed=0))
    assert (len(train), len(test)) == (10_000, 2000)
    assert set(np.unique(train.labels)) == set(np.unique(test.labels)) == set(range(10))
    assert train.images.min() >= -1 and train.images.max() <= 1
