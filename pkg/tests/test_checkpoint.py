import numpy as np
import pytest

from qprune.checkpoint import MAGIC, load_checkpoint, restore_into, save_checkpoint
from qprune.errors import DataFormatError
from qprune.models import build_network, model_spec
from qprune.pruning import capture_snapshot, full_mask, global_magnitude_prune


def small_net(seed=0):
    return build_network(model_spec("lenet12", "mnist", "quat"), seed=seed)


def test_roundtrip_params_bit_exact(tmp_path):
    net = small_net()
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, net)
    ckpt = load_checkpoint(path)
    assert ckpt.model == "lenet12" and ckpt.field == "quat" and ckpt.dataset == "mnist"
    assert ckpt.dtype == "float32"
    for p in net.parameters():
        np.testing.assert_array_equal(ckpt.params[p.name], p.tensor.data)
    assert not ckpt.masks


def test_roundtrip_with_mask(tmp_path):
    net = small_net()
    mask = global_magnitude_prune(net, full_mask(net), 0.4)
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, net, mask)
    ckpt = load_checkpoint(path)
    for name, arr in mask.arrays.items():
        np.testing.assert_array_equal(ckpt.masks[name], arr)
        assert ckpt.masks[name].dtype == np.uint8


def test_roundtrip_with_rewind_snapshot(tmp_path):
    net = small_net()
    snap = capture_snapshot(net)
    mask = global_magnitude_prune(net, full_mask(net), 0.2)
    for p in net.parameters():
        p.tensor.data += 1.0  # drift: saved params differ from theta_0
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, net, mask, snap)
    ckpt = load_checkpoint(path)
    for p in net.parameters():
        np.testing.assert_array_equal(ckpt.snapshot[p.name], snap.arrays[p.name])
        np.testing.assert_array_equal(ckpt.params[p.name], p.tensor.data)


def test_serialization_is_deterministic(tmp_path):
    net = small_net(seed=3)
    a, b = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
    save_checkpoint(a, net)
    save_checkpoint(b, net)
    assert open(a, "rb").read() == open(b, "rb").read()


def test_restore_into_matching_network(tmp_path):
    net = small_net(seed=1)
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, net)
    other = small_net(seed=2)
    restore_into(other, load_checkpoint(path))
    for pa, pb in zip(net.parameters(), other.parameters()):
        np.testing.assert_array_equal(pa.tensor.data, pb.tensor.data)


def test_bad_magic_rejected(tmp_path):
    p = tmp_path / "bogus.ckpt"
    p.write_bytes(b"NOTACKPT" + bytes(100))
    with pytest.raises(DataFormatError, match="magic"):
        load_checkpoint(str(p))


def test_truncated_blob_rejected(tmp_path):
    net = small_net()
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, net)
    raw = open(path, "rb").read()
    open(path, "wb").write(raw[: len(raw) - 64])
    with pytest.raises(DataFormatError, match="overruns"):
        load_checkpoint(path)


def test_file_starts_with_magic(tmp_path):
    net = small_net()
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, net)
    assert open(path, "rb").read(8) == MAGIC
