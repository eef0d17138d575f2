"""Run manifests: parameters plus content hashes of the outputs.

The content hash covers exactly the label map and merge log bytes, in
that order, so two runs agree on the hash if and only if those outputs
are byte-equal. Auxiliary files (event logs, extra label maps) are
listed with their own hashes but stay out of the content hash: they may
legitimately differ between executors producing identical segmentations.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def content_hash(paths: Sequence) -> str:
    """sha256 over the concatenated bytes of `paths`, in order."""
    digest = hashlib.sha256()
    for path in paths:
        digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def _entry(path: Path) -> dict:
    return {"path": path.name, "bytes": path.stat().st_size, "sha256": file_sha256(path)}


def write_manifest(
    path,
    parameters: dict,
    hashed: Sequence[tuple[str, Path]],
    extra: Sequence[tuple[str, Path]] = (),
) -> dict:
    """Write the manifest JSON; returns the manifest dict."""
    path = Path(path)
    doc = {
        "parameters": parameters,
        "outputs": {name: _entry(Path(p)) for name, p in [*hashed, *extra]},
        "hashed_outputs": [name for name, _ in hashed],
        "content_hash": content_hash([p for _, p in hashed]),
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
