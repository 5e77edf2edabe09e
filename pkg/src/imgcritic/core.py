"""Core domain types: heatmaps, bounding boxes, score vectors, records.

All operations are pure functions over effectively immutable values, so
everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SCORE_DIMENSIONS = ("alignment", "aesthetics", "plausibility", "overall")


class Heatmap:
    """A width x height grid of intensities in [0, 1].

    Values are stored as float32 (the on-disk HMF precision), row-major:
    value(x, y) = data[y, x]. A map whose total mass is zero is "blank".
    """

    __slots__ = ("data",)

    def __init__(self, data):
        arr = np.asarray(data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"heatmap data must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"heatmap dimensions must be positive, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("heatmap values must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("heatmap values must lie in [0, 1]")
        arr = arr.copy()
        arr.flags.writeable = False
        self.data = arr

    @classmethod
    def from_values(cls, width: int, height: int, values: Sequence[float]) -> "Heatmap":
        """Build from a flat row-major value sequence of length width*height."""
        if width < 1 or height < 1:
            raise ValueError(f"heatmap dimensions must be positive, got {width}x{height}")
        arr = np.asarray(values, dtype=np.float32)
        if arr.size != width * height:
            raise ValueError(
                f"expected {width * height} values for a {width}x{height} heatmap, got {arr.size}"
            )
        return cls(arr.reshape(height, width))

    @classmethod
    def blank(cls, width: int, height: int) -> "Heatmap":
        return cls(np.zeros((height, width), dtype=np.float32))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def flat(self) -> np.ndarray:
        """Row-major flattened values."""
        return self.data.reshape(-1)

    def as_float64(self) -> np.ndarray:
        return self.data.astype(np.float64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Heatmap):
            return NotImplemented
        return self.data.shape == other.data.shape and bool(
            np.array_equal(self.data, other.data)
        )

    def __repr__(self) -> str:
        return f"Heatmap({self.width}x{self.height}, mass={total_mass(self):.4g})"


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in continuous pixel coordinates, origin top-left.

    Must have strictly positive area; bounds against a particular image are
    enforced separately (see clamp_box).
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for name in ("x1", "y1", "x2", "y2"):
            v = float(getattr(self, name))
            if not np.isfinite(v):
                raise ValueError(f"box coordinate {name} must be finite, got {v!r}")
            object.__setattr__(self, name, v)
        if not (self.x2 > self.x1 and self.y2 > self.y1):
            raise ValueError(
                f"box must have positive area, got "
                f"[{self.x1}, {self.y1}, {self.x2}, {self.y2}]"
            )

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]


@dataclass(frozen=True)
class ScoreVector:
    """The four evaluation scores, each in [0, 1]."""

    alignment: float
    aesthetics: float
    plausibility: float
    overall: float

    def __post_init__(self):
        for name in SCORE_DIMENSIONS:
            v = float(getattr(self, name))
            if not np.isfinite(v) or not 0.0 <= v <= 1.0:
                raise ValueError(f"score {name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, v)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in SCORE_DIMENSIONS}

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alignment, self.aesthetics, self.plausibility, self.overall)


@dataclass
class EvaluationRecord:
    """One sample's scores, optional heatmaps and flaw-region boxes.

    Each box list is validated against its own heatmap's dimensions when that
    heatmap is present; the two heatmaps need not share dimensions.
    """

    id: str
    scores: ScoreVector
    artifact_heatmap: Heatmap | None = None
    misalignment_heatmap: Heatmap | None = None
    artifact_boxes: list[BoundingBox] = field(default_factory=list)
    misalignment_boxes: list[BoundingBox] = field(default_factory=list)

    def __post_init__(self):
        for label, heatmap, boxes in (
            ("artifact", self.artifact_heatmap, self.artifact_boxes),
            ("misalignment", self.misalignment_heatmap, self.misalignment_boxes),
        ):
            if heatmap is None:
                continue
            for box in boxes:
                if box.x1 < 0 or box.y1 < 0 or box.x2 > heatmap.width or box.y2 > heatmap.height:
                    raise ValueError(
                        f"record {self.id!r}: {label} box {box.as_list()} exceeds "
                        f"{heatmap.width}x{heatmap.height} heatmap bounds"
                    )


def total_mass(h: Heatmap) -> float:
    """Sum of all heatmap values (zero iff the map is blank)."""
    return float(np.sum(h.data, dtype=np.float64))


def box_area(b: BoundingBox) -> float:
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def box_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0 when disjoint."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = box_area(a) + box_area(b) - inter
    return inter / union


def clamp_box(b: BoundingBox, width: int, height: int) -> BoundingBox:
    """Clamp a box to image bounds; reject boxes that degenerate.

    Model-emitted boxes routinely overflow image bounds, so loaders clamp
    rather than reject outright; a box left with no area is an error.
    """
    x1 = min(max(b.x1, 0.0), float(width))
    x2 = min(max(b.x2, 0.0), float(width))
    y1 = min(max(b.y1, 0.0), float(height))
    y2 = min(max(b.y2, 0.0), float(height))
    if not (x2 > x1 and y2 > y1):
        raise ValueError(
            f"box {b.as_list()} degenerates after clamping to {width}x{height}"
        )
    return BoundingBox(x1, y1, x2, y2)


def box_mask(width: int, height: int, b: BoundingBox) -> np.ndarray:
    """Boolean (height, width) mask of pixels whose centers fall in the box.

    A pixel (x, y) has center (x + 0.5, y + 0.5); membership is the half-open
    test [x1, x2) x [y1, y2), which makes abutting boxes partition pixels.
    """
    cx = np.arange(width, dtype=np.float64) + 0.5
    cy = np.arange(height, dtype=np.float64) + 0.5
    in_x = (cx >= b.x1) & (cx < b.x2)
    in_y = (cy >= b.y1) & (cy < b.y2)
    return np.outer(in_y, in_x)


def union_mask(width: int, height: int, boxes: Iterable[BoundingBox]) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    for b in boxes:
        mask |= box_mask(width, height, b)
    return mask


def mass_in_region(h: Heatmap, boxes: Iterable[BoundingBox]) -> float:
    """Heatmap mass covered by the union of the boxes (no double counting).

    Only pixel centers inside the grid are counted, so boxes may extend
    beyond the image without error.
    """
    mask = union_mask(h.width, h.height, boxes)
    return float(np.sum(h.data, where=mask, dtype=np.float64))
