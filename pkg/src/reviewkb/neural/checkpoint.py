"""Checkpoint format: JSON manifest plus a little-endian float64 payload.

``save_checkpoint(prefix, ...)`` writes ``prefix.json`` (tensor names, shapes,
byte offsets, and free-form metadata such as seed/hyperparameters/vocab) and
``prefix.bin`` (tensors concatenated in manifest order, C layout, '<f8').
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DataError

FORMAT = "reviewkb-checkpoint-v1"


def save_checkpoint(prefix: str | Path, tensors: dict[str, np.ndarray], metadata: dict) -> None:
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    entries = []
    offset = 0
    blobs = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    manifest = {"format": FORMAT, "metadata": metadata, "tensors": entries}
    prefix.with_suffix(".json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    prefix.with_suffix(".bin").write_bytes(b"".join(blobs))


def load_checkpoint(prefix: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    prefix = Path(prefix)
    manifest_path = prefix.with_suffix(".json")
    payload_path = prefix.with_suffix(".bin")
    for path in (manifest_path, payload_path):
        if not path.exists():
            raise DataError(f"missing checkpoint file {path}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("format") != FORMAT:
        raise DataError(f"unrecognized checkpoint format in {manifest_path}")
    payload = payload_path.read_bytes()
    tensors: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        data = np.frombuffer(payload, dtype="<f8", count=count, offset=start)
        tensors[entry["name"]] = data.reshape(shape).astype(np.float64)
    return tensors, manifest["metadata"]
