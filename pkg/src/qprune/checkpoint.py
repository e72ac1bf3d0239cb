"""Self-describing model checkpoint container.

Layout (stable across versions):

* bytes 0..7   magic ``b"QPCKPT01"``
* bytes 8..11  little-endian u32 header length L
* bytes 12..12+L  UTF-8 JSON header::

      {"format": 1, "model": ..., "dataset": ..., "field": ...,
       "dtype": "float32"|"float64",
       "tensors": [{"name": ..., "shape": [...],
                    "kind": "param"|"mask"|"init",
                    "offset": ..., "nbytes": ...}, ...]}

* the raw data blob; each tensor's bytes start at its ``offset`` within the
  blob.  Params and init values (the rewind snapshot theta_0) are
  little-endian scalars of the header dtype; masks are u8.

Tensors appear in registry order (params, then masks, then snapshot) so
identical networks serialize to identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataFormatError
from .models import Network
from .pruning import Mask, Snapshot

MAGIC = b"QPCKPT01"

_DTYPES = {"float32": "<f4", "float64": "<f8"}


@dataclass
class Checkpoint:
    model: str
    dataset: str
    field: str
    dtype: str
    params: dict[str, np.ndarray]
    masks: dict[str, np.ndarray]
    snapshot: dict[str, np.ndarray]


def save_checkpoint(
    path: str,
    net: Network,
    mask: Optional[Mask] = None,
    snapshot: Optional[Snapshot] = None,
) -> None:
    dtype_name = net.dtype.name
    if dtype_name not in _DTYPES:
        raise ValueError(f"unsupported checkpoint dtype {dtype_name}")
    scalar = np.dtype(_DTYPES[dtype_name])
    entries = []
    blobs = []
    offset = 0

    def emit(name: str, arr: np.ndarray, kind: str, dt) -> None:
        nonlocal offset
        raw = np.ascontiguousarray(arr, dtype=dt).tobytes()
        entries.append(
            {"name": name, "shape": list(arr.shape), "kind": kind,
             "offset": offset, "nbytes": len(raw)}
        )
        blobs.append(raw)
        offset += len(raw)

    for p in net.parameters():
        emit(p.name, p.tensor.data, "param", scalar)
    if mask is not None:
        for p in net.prunable_parameters():
            emit(p.name, mask.arrays[p.name], "mask", "<u1")
    if snapshot is not None:
        for p in net.parameters():
            emit(p.name, snapshot.arrays[p.name], "init", scalar)
    header = {
        "format": 1,
        "model": net.spec.name,
        "dataset": net.spec.dataset,
        "field": net.spec.field,
        "dtype": dtype_name,
        "tensors": entries,
    }
    head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(len(head).to_bytes(4, "little"))
        f.write(head)
        for raw in blobs:
            f.write(raw)


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < 12 or buf[:8] != MAGIC:
        raise DataFormatError(f"{path}: not a checkpoint (bad magic at offset 0)")
    head_len = int.from_bytes(buf[8:12], "little")
    if len(buf) < 12 + head_len:
        raise DataFormatError(f"{path}: truncated header at offset 12")
    try:
        header = json.loads(buf[12 : 12 + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataFormatError(f"{path}: corrupt header: {e}") from e
    if header.get("dtype") not in _DTYPES:
        raise DataFormatError(f"{path}: unsupported dtype {header.get('dtype')!r}")
    scalar = np.dtype(_DTYPES[header["dtype"]])
    blob = buf[12 + head_len :]
    sections: dict[str, dict[str, np.ndarray]] = {"param": {}, "mask": {}, "init": {}}
    for ent in header["tensors"]:
        start, nbytes = ent["offset"], ent["nbytes"]
        if start + nbytes > len(blob):
            raise DataFormatError(
                f"{path}: tensor {ent['name']} overruns the data blob "
                f"(offset {start}, {nbytes} bytes, blob {len(blob)})"
            )
        kind = ent["kind"]
        if kind not in sections:
            raise DataFormatError(f"{path}: unknown tensor kind {kind!r}")
        raw = blob[start : start + nbytes]
        dt = np.dtype("<u1") if kind == "mask" else scalar
        sections[kind][ent["name"]] = np.frombuffer(raw, dtype=dt).reshape(ent["shape"]).copy()
    return Checkpoint(
        model=header["model"],
        dataset=header["dataset"],
        field=header["field"],
        dtype=header["dtype"],
        params=sections["param"],
        masks=sections["mask"],
        snapshot=sections["init"],
    )


def restore_into(net: Network, ckpt: Checkpoint) -> Network:
    """Copy checkpoint parameter values into a structurally matching network."""
    for p in net.parameters():
        if p.name not in ckpt.params:
            raise DataFormatError(f"checkpoint lacks parameter {p.name}")
        saved = ckpt.params[p.name]
        if tuple(saved.shape) != p.tensor.shape:
            raise DataFormatError(
                f"checkpoint parameter {p.name} has shape {saved.shape}, expected {p.tensor.shape}"
            )
        p.tensor.data = saved.astype(net.dtype, copy=True)
    return net
