"""Versioned checkpoint files.

A checkpoint is a single UTF-8 JSON document::

    {
      "format": "mafsim-checkpoint",
      "version": 1,
      "meta":    {...},                # agent tag, configs, free-form scalars
      "tensors": [                     # in the agent's state_dict order
        {"name": "policy/W0", "dtype": "<f8", "shape": [100, 64], "data": "<base64>"},
        ...
      ],
      "sha256": "<hex>"                # over the canonical JSON of every other field
    }

Tensor bytes are little-endian float64, C order, so a reload is bit-exact.
"""

from __future__ import annotations

import base64
import hashlib
import json
from pathlib import Path

import numpy as np

from mafsim.errors import CheckpointError

FORMAT = "mafsim-checkpoint"
VERSION = 1


def _digest(body: dict) -> str:
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def encode(tensors: dict[str, np.ndarray], meta: dict) -> str:
    items = []
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")
        # tobytes() is C order regardless of layout; ascontiguousarray would promote 0-d to 1-d
        items.append({"name": name, "dtype": "<f8", "shape": list(arr.shape),
                      "data": base64.b64encode(arr.tobytes(order="C")).decode("ascii")})
    body = {"format": FORMAT, "version": VERSION, "meta": meta, "tensors": items}
    body["sha256"] = _digest(body)
    return json.dumps(body, indent=1)


def decode(text: str) -> tuple[dict[str, np.ndarray], dict]:
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint is corrupt or truncated: {exc}") from None
    if not isinstance(body, dict) or body.get("format") != FORMAT:
        raise CheckpointError("not a mafsim checkpoint")
    if body.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {body.get('version')!r}, "
                              f"expected {VERSION}")
    stored = body.pop("sha256", None)
    if stored != _digest(body):
        raise CheckpointError("checkpoint checksum mismatch")
    tensors = {}
    for item in body["tensors"]:
        raw = base64.b64decode(item["data"])
        arr = np.frombuffer(raw, dtype=item["dtype"]).astype(float)
        tensors[item["name"]] = arr.reshape(tuple(item["shape"]))
    return tensors, body["meta"]


def save(path, tensors: dict[str, np.ndarray], meta: dict) -> None:
    Path(path).write_text(encode(tensors, meta))


def load(path) -> tuple[dict[str, np.ndarray], dict]:
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError:
        raise CheckpointError("checkpoint is not valid UTF-8") from None
    return decode(text)


def check_shapes(expected: dict[str, np.ndarray], loaded: dict[str, np.ndarray]) -> None:
    """Raise CheckpointError naming the first tensor whose presence or shape differs."""
    for name, arr in expected.items():
        if name not in loaded:
            raise CheckpointError(f"checkpoint is missing tensor {name!r}")
        if tuple(np.shape(arr)) != tuple(loaded[name].shape):
            raise CheckpointError(f"shape mismatch for layer {name!r}: checkpoint has "
                                  f"{tuple(loaded[name].shape)}, model expects {tuple(np.shape(arr))}")
    extra = set(loaded) - set(expected)
    if extra:
        raise CheckpointError(f"checkpoint has unexpected tensors {sorted(extra)}")
