import os
import struct

import numpy as np
import pytest

from qprune.data import Dataset

DATA_ENV = "QPRUNE_DATA"
_DATA_CANDIDATES = (
    os.path.join(os.path.dirname(__file__), "..", "data"),
    "/root/data",
)


def find_data_dir() -> str | None:
    override = os.environ.get(DATA_ENV)
    candidates = (override,) if override else _DATA_CANDIDATES
    for cand in candidates:
        if cand and os.path.isdir(os.path.join(cand, "mnist")):
            return os.path.abspath(cand)
    return None


@pytest.fixture(scope="session")
def data_dir() -> str:
    d = find_data_dir()
    if d is None:
        pytest.skip(f"real dataset files not found; set ${DATA_ENV} to a directory "
                    "holding mnist/ and cifar10/ subdirectories")
    return d


@pytest.fixture(scope="session")
def mnist_dir(data_dir) -> str:
    return os.path.join(data_dir, "mnist")


@pytest.fixture(scope="session")
def cifar10_dir(data_dir) -> str:
    d = os.path.join(data_dir, "cifar10")
    if not os.path.isdir(d):
        pytest.skip("cifar10 files not found")
    return d


def write_idx_images(path, images: np.ndarray) -> None:
    """images: uint8 [N,H,W]."""
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">iiii", 2051, n, h, w))
        f.write(images.tobytes())


def write_idx_labels(path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">ii", 2049, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def make_mnist_files(directory, n_train=240, n_test=60, seed=0) -> None:
    """Synthetic MNIST-shaped IDX files (random pixels, balanced labels)."""
    rng = np.random.default_rng(seed)
    os.makedirs(directory, exist_ok=True)
    for prefix, n in (("train", n_train), ("t10k", n_test)):
        images = rng.integers(0, 256, size=(n, 28, 28), dtype=np.uint8)
        labels = (np.arange(n) % 10).astype(np.uint8)
        write_idx_images(os.path.join(directory, f"{prefix}-images-idx3-ubyte"), images)
        write_idx_labels(os.path.join(directory, f"{prefix}-labels-idx1-ubyte"), labels)


def synthetic_dataset(n=120, shape=(1, 28, 28), classes=10, seed=0) -> Dataset:
    rng = np.random.default_rng(seed)
    images = rng.random((n, *shape), dtype=np.float32)
    labels = (np.arange(n) % classes).astype(np.int64)
    return Dataset(images, labels, classes)
