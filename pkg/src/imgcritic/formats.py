"""File formats: HMF heatmap binary, 8-bit grayscale PNG, JSON sidecars.

HMF layout: magic b"HMF1", then width and height as unsigned 32-bit
little-endian, then width*height float32 little-endian values, row-major.
The float32 payload matches Heatmap's storage exactly, so an HMF round
trip is a bit-exact identity.
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .core import BoundingBox, EvaluationRecord, Heatmap, ScoreVector, clamp_box

HMF_MAGIC = b"HMF1"
# Refuse absurd headers before allocating (256 MPixel cap).
MAX_PIXELS = 1 << 28


def encode_hmf(h: Heatmap) -> bytes:
    header = HMF_MAGIC + struct.pack("<II", h.width, h.height)
    payload = h.data.astype("<f4").tobytes()
    return header + payload


def decode_hmf(data: bytes) -> Heatmap:
    if len(data) < 12 or data[:4] != HMF_MAGIC:
        raise ValueError("malformed HMF header (bad magic or truncated)")
    width, height = struct.unpack("<II", data[4:12])
    if width < 1 or height < 1:
        raise ValueError(f"HMF dimensions must be positive, got {width}x{height}")
    if width * height > MAX_PIXELS:
        raise ValueError(f"HMF dimensions overflow sanity cap: {width}x{height}")
    expected = 12 + 4 * width * height
    if len(data) != expected:
        raise ValueError(
            f"HMF payload length mismatch: expected {expected} bytes, got {len(data)}"
        )
    values = np.frombuffer(data, dtype="<f4", offset=12).reshape(height, width)
    if not np.all(np.isfinite(values)):
        raise ValueError("HMF values must be finite")
    if values.min() < 0.0 or values.max() > 1.0:
        raise ValueError("HMF values must lie in [0, 1]")
    return Heatmap(values)


def encode_png(h: Heatmap) -> bytes:
    # Round half up: v -> floor(255 v + 0.5).
    quantized = np.floor(h.as_float64() * 255.0 + 0.5).astype(np.uint8)
    img = Image.fromarray(quantized, mode="L")
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def decode_png(data: bytes) -> Heatmap:
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise ValueError(f"malformed PNG: {exc}") from exc
    if img.format != "PNG":
        raise ValueError(f"expected PNG data, got {img.format}")
    if img.mode != "L":
        raise ValueError(f"heatmap PNG must be 8-bit single-channel (mode L), got {img.mode}")
    if img.width * img.height > MAX_PIXELS:
        raise ValueError(f"PNG dimensions overflow sanity cap: {img.width}x{img.height}")
    arr = np.asarray(img, dtype=np.float64) / 255.0
    return Heatmap(arr)


def save_heatmap(h: Heatmap, format: str) -> bytes:
    """Serialize a heatmap; format is "hmf" or "png"."""
    if format == "hmf":
        return encode_hmf(h)
    if format == "png":
        return encode_png(h)
    raise ValueError(f"unknown heatmap format {format!r} (expected 'hmf' or 'png')")


def load_heatmap(data: bytes, format: str) -> Heatmap:
    if format == "hmf":
        return decode_hmf(data)
    if format == "png":
        return decode_png(data)
    raise ValueError(f"unknown heatmap format {format!r} (expected 'hmf' or 'png')")


def load_heatmap_file(path: str | Path) -> Heatmap:
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".hmf":
        fmt = "hmf"
    elif suffix == ".png":
        fmt = "png"
    else:
        raise ValueError(f"cannot infer heatmap format from {path.name!r} (.hmf or .png)")
    return load_heatmap(path.read_bytes(), fmt)


def boxes_from_json(obj) -> list[BoundingBox]:
    """Parse [[x1, y1, x2, y2], ...]."""
    if not isinstance(obj, list):
        raise ValueError("boxes JSON must be a list of 4-element arrays")
    boxes = []
    for i, entry in enumerate(obj):
        if not isinstance(entry, (list, tuple)) or len(entry) != 4:
            raise ValueError(f"box {i} must be a 4-element array, got {entry!r}")
        boxes.append(BoundingBox(*(float(c) for c in entry)))
    return boxes


def boxes_to_json(boxes: list[BoundingBox]) -> list[list[float]]:
    return [b.as_list() for b in boxes]


def scores_from_json(obj) -> ScoreVector:
    if not isinstance(obj, dict):
        raise ValueError("scores JSON must be an object")
    try:
        return ScoreVector(
            alignment=float(obj["alignment"]),
            aesthetics=float(obj["aesthetics"]),
            plausibility=float(obj["plausibility"]),
            overall=float(obj["overall"]),
        )
    except KeyError as exc:
        raise ValueError(f"scores JSON missing key {exc.args[0]!r}") from exc


def load_manifest(path: str | Path) -> list[EvaluationRecord]:
    """Load records from a manifest: a JSON list of entries with an id, a
    score_path, and optional heatmap/box paths, all relative to the manifest.
    A directory may be given instead; it must contain a manifest.json.

    Omitted heatmap paths leave the heatmap absent; omitted box paths mean
    no boxes. Boxes are clamped to their own heatmap's bounds when that
    heatmap is present.
    """
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    base = path.parent
    entries = json.loads(path.read_text())
    if not isinstance(entries, list):
        raise ValueError(f"manifest {path} must contain a JSON list")
    records = []
    for entry in entries:
        if not isinstance(entry, dict) or "id" not in entry or "score_path" not in entry:
            raise ValueError(f"manifest entry must have 'id' and 'score_path': {entry!r}")
        scores = scores_from_json(json.loads((base / entry["score_path"]).read_text()))
        heatmaps: dict[str, Heatmap | None] = {}
        boxes: dict[str, list[BoundingBox]] = {}
        for kind in ("artifact", "misalignment"):
            hm_path = entry.get(f"{kind}_heatmap_path")
            heatmaps[kind] = load_heatmap_file(base / hm_path) if hm_path else None
            bx_path = entry.get(f"{kind}_boxes_path")
            raw = boxes_from_json(json.loads((base / bx_path).read_text())) if bx_path else []
            hm = heatmaps[kind]
            if hm is not None:
                raw = [clamp_box(b, hm.width, hm.height) for b in raw]
            boxes[kind] = raw
        records.append(
            EvaluationRecord(
                id=str(entry["id"]),
                scores=scores,
                artifact_heatmap=heatmaps["artifact"],
                misalignment_heatmap=heatmaps["misalignment"],
                artifact_boxes=boxes["artifact"],
                misalignment_boxes=boxes["misalignment"],
            )
        )
    return records
