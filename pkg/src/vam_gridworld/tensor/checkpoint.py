"""
Named-tensor checkpoints: a JSON manifest plus a little-endian float64 blob.

    <stem>.json   {"format": ..., "tensors": [{"name", "shape", "offset", "count"}], "metadata": {...}}
    <stem>.bin    concatenated row-major values, tensors in name order
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from vam_gridworld.common.errors import DataError
from vam_gridworld.tensor.autodiff import Tensor

CHECKPOINT_FORMAT = 'vam-named-tensors/1'


def _paths(stem: str) -> Tuple[Path, Path]:
    base = Path(stem)
    if base.suffix in ('.json', '.bin'):
        base = base.with_suffix('')
    return base.with_suffix('.json'), base.with_suffix('.bin')


def save_checkpoint(params: Dict[str, Tensor], stem: str, metadata: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write ``params`` to ``<stem>.json`` and ``<stem>.bin``.

    Output bytes depend only on the parameter values and metadata.

    Returns:
        Path of the manifest file
    """
    manifest_path, blob_path = _paths(stem)
    os.makedirs(manifest_path.parent, exist_ok=True)

    entries = []
    offset = 0
    with open(blob_path, 'wb') as f:
        for name in sorted(params):
            data = np.ascontiguousarray(params[name].data, dtype='<f8')
            f.write(data.tobytes(order='C'))
            entries.append({
                "name": name,
                "shape": list(data.shape),
                "offset": offset,
                "count": int(data.size),
            })
            offset += data.size

    manifest = {
        "format": CHECKPOINT_FORMAT,
        "blob": blob_path.name,
        "tensors": entries,
        "metadata": metadata or {},
    }
    with open(manifest_path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')
    return manifest_path


def load_checkpoint(stem: str) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    """
    Read a checkpoint written by ``save_checkpoint``.

    Returns:
        (name -> array, metadata)

    Raises:
        DataError: If files are missing or the blob does not match the manifest.
    """
    manifest_path, blob_path = _paths(stem)
    if not manifest_path.exists():
        raise DataError(f"Checkpoint manifest not found: {manifest_path}")
    with open(manifest_path, 'r', encoding='utf-8') as f:
        manifest = json.load(f)
    if manifest.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"Unsupported checkpoint format: {manifest.get('format')!r}")

    blob_path = manifest_path.parent / manifest.get("blob", blob_path.name)
    if not blob_path.exists():
        raise DataError(f"Checkpoint blob not found: {blob_path}")
    values = np.fromfile(blob_path, dtype='<f8')

    arrays: Dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        start, count = entry["offset"], entry["count"]
        if start + count > values.size:
            raise DataError(f"Checkpoint blob too short for tensor {entry['name']}")
        arrays[entry["name"]] = values[start:start + count].astype(np.float64).reshape(entry["shape"])
    return arrays, manifest.get("metadata", {})
