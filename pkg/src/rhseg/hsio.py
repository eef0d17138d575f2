"""File formats: raw band-sequential image cubes and PGM label maps.

An image is a pair of files: a JSON header naming the dimensions and
layout, and a raw file of little-endian float32 samples in
band-sequential order. Label maps go to binary PGM (P5, maxval 65535,
big-endian 16-bit samples) with an optional CSV companion.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import HeaderMismatch, ShortFile, TooManyLabels
from .graph import LabelMap
from .image import HyperImage

HEADER_SUFFIX = ".json"
RAW_SUFFIX = ".raw"


def _header_dict(image: HyperImage) -> dict:
    return {
        "width": image.width,
        "height": image.height,
        "bands": image.bands,
        "dtype": "f32",
        "interleave": "bsq",
        "byte_order": "le",
    }


def image_paths(stem) -> tuple[Path, Path]:
    stem = Path(stem)
    return stem.with_suffix(HEADER_SUFFIX), stem.with_suffix(RAW_SUFFIX)


def write_image(image: HyperImage, stem) -> tuple[Path, Path]:
    """Write <stem>.json and <stem>.raw; returns the two paths."""
    header_path, raw_path = image_paths(stem)
    header_path.write_text(json.dumps(_header_dict(image), indent=2) + "\n")
    raw_path.write_bytes(np.ascontiguousarray(image.samples, dtype="<f4").tobytes())
    return header_path, raw_path


def read_image(header_path, raw_path=None) -> HyperImage:
    """Read the header/raw pair back; lossless at 32-bit precision."""
    header_path = Path(header_path)
    if raw_path is None:
        raw_path = header_path.with_suffix(RAW_SUFFIX)
    raw_path = Path(raw_path)
    try:
        header = json.loads(header_path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise HeaderMismatch(f"unparseable header {header_path}: {exc}") from exc
    for key in ("width", "height", "bands"):
        if not isinstance(header.get(key), int) or header[key] < 1:
            raise HeaderMismatch(f"header field {key!r} missing or invalid")
    if header.get("dtype") != "f32":
        raise HeaderMismatch(f"unsupported dtype {header.get('dtype')!r} (need f32)")
    if header.get("interleave") != "bsq":
        raise HeaderMismatch(
            f"unsupported interleave {header.get('interleave')!r} (need bsq)"
        )
    if header.get("byte_order") != "le":
        raise HeaderMismatch(
            f"unsupported byte order {header.get('byte_order')!r} (need le)"
        )
    width, height, bands = header["width"], header["height"], header["bands"]
    expected = width * height * bands * 4
    raw = raw_path.read_bytes()
    if len(raw) < expected:
        raise ShortFile(f"{raw_path} holds {len(raw)} bytes, needs {expected}")
    if len(raw) > expected:
        raise HeaderMismatch(
            f"{raw_path} holds {len(raw)} bytes, header declares {expected}"
        )
    samples = np.frombuffer(raw, dtype="<f4").astype(np.float32)
    return HyperImage(width, height, bands, samples.reshape(bands, height, width))


def write_labels(labels: LabelMap, path, csv_path=None) -> Path:
    """Write a label map as 16-bit binary PGM; optional CSV grid."""
    path = Path(path)
    arr = np.asarray(labels.labels, dtype=np.int64)
    if arr.size and (arr.max() > 65535 or arr.min() < 0):
        raise TooManyLabels(
            f"labels span {arr.min()}..{arr.max()}, PGM carries 0..65535"
        )
    body = arr.astype(">u2").tobytes()
    header = f"P5\n{labels.width} {labels.height}\n65535\n".encode("ascii")
    path.write_bytes(header + body)
    if csv_path is not None:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in arr.reshape(labels.height, labels.width):
                writer.writerow(int(v) for v in row)
    return path


def read_labels(path) -> LabelMap:
    """Read back a 16-bit PGM written by write_labels."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5":
        raise HeaderMismatch(f"{path} is not a P5 PGM")
    try:
        width, height = (int(v) for v in parts[1].split())
        maxval = int(parts[2])
    except ValueError as exc:
        raise HeaderMismatch(f"{path}: bad PGM header") from exc
    if maxval != 65535:
        raise HeaderMismatch(f"{path}: expected maxval 65535, got {maxval}")
    body = parts[3]
    expected = width * height * 2
    if len(body) < expected:
        raise ShortFile(f"{path} body holds {len(body)} bytes, needs {expected}")
    grid = np.frombuffer(body[:expected], dtype=">u2").astype(np.int64)
    return LabelMap(width, height, grid.reshape(height, width))
