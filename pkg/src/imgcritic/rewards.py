"""Verifiable rewards over flaw heatmaps, boxes and scores.

The grounding reward scores predicted boxes against a ground-truth heatmap
via three sub-rewards, each in [0, 1]:

  completeness  covered mass / total mass (how much flaw intensity the box
                union captures)
  compactness   mean over boxes of the average intensity inside the box
  uniqueness    1 - mean pairwise IoU (no redundant boxes)

combined as their arithmetic mean. Degenerate inputs follow fixed edge
rules: a blank map with no boxes is a perfect 1, while boxes on a blank map
or a highlighted map with no boxes score 0.

The score reward sums 1 - |pred - gt| over the four score dimensions (range
[0, 4]); the heatmap reward sums 1 - MSE over the artifact/misalignment
pairs (range [0, 2], per-pixel mean so it is resolution independent). The
total reward is their sum, range [0, 7].
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from .core import (
    BoundingBox,
    EvaluationRecord,
    Heatmap,
    ScoreVector,
    box_iou,
    box_mask,
    mass_in_region,
    total_mass,
)


class GroundingEdgeCase(str, Enum):
    NONE = "none"
    BLANK_MATCH = "blank_match"          # blank map, no boxes -> 1
    BLANK_MISMATCH = "blank_mismatch"    # boxes predicted on a blank map -> 0
    MISSING_BOXES = "missing_boxes"      # highlighted map, no boxes -> 0


@dataclass(frozen=True)
class GroundingBreakdown:
    completeness: float
    compactness: float
    uniqueness: float
    combined: float
    edge_case: GroundingEdgeCase = GroundingEdgeCase.NONE

    def as_dict(self) -> dict:
        return {
            "completeness": self.completeness,
            "compactness": self.compactness,
            "uniqueness": self.uniqueness,
            "combined": self.combined,
            "edge_case": self.edge_case.value,
        }


def completeness(h: Heatmap, boxes: list[BoundingBox]) -> float:
    if not boxes:
        raise ValueError("completeness requires at least one box")
    total = total_mass(h)
    if total <= 0.0:
        raise ValueError("completeness undefined for a blank heatmap")
    return mass_in_region(h, boxes) / total


def compactness(h: Heatmap, boxes: list[BoundingBox]) -> float:
    """Mean over boxes of the average intensity at covered pixel centers.

    A box containing no pixel centers contributes 0.
    """
    if not boxes:
        raise ValueError("compactness requires at least one box")
    data = h.as_float64()
    per_box = []
    for b in boxes:
        mask = box_mask(h.width, h.height, b)
        count = int(mask.sum())
        if count == 0:
            per_box.append(0.0)
        else:
            per_box.append(float(np.sum(data, where=mask)) / count)
    return float(np.mean(per_box))


def uniqueness(boxes: list[BoundingBox]) -> float:
    if not boxes:
        raise ValueError("uniqueness requires at least one box")
    if len(boxes) < 2:
        return 1.0
    ious = [box_iou(a, b) for a, b in combinations(boxes, 2)]
    return 1.0 - float(np.mean(ious))


def grounding_reward_single(
    h: Heatmap, boxes: list[BoundingBox], blank_threshold: float = 0.0
) -> GroundingBreakdown:
    """Grounding reward for one heatmap/box-list pair, edge rules included.

    Sub-reward fields are reported as 0 when an edge rule fires, since the
    formulas are undefined there; `combined` carries the forced value.
    """
    blank = total_mass(h) <= blank_threshold
    if blank and not boxes:
        return GroundingBreakdown(0.0, 0.0, 0.0, 1.0, GroundingEdgeCase.BLANK_MATCH)
    if blank:
        return GroundingBreakdown(0.0, 0.0, 0.0, 0.0, GroundingEdgeCase.BLANK_MISMATCH)
    if not boxes:
        return GroundingBreakdown(0.0, 0.0, 0.0, 0.0, GroundingEdgeCase.MISSING_BOXES)
    comp = completeness(h, boxes)
    compact = compactness(h, boxes)
    unique = uniqueness(boxes)
    return GroundingBreakdown(comp, compact, unique, (comp + compact + unique) / 3.0)


def grounding_reward(
    art_h: Heatmap,
    mis_h: Heatmap,
    art_boxes: list[BoundingBox],
    mis_boxes: list[BoundingBox],
    blank_threshold: float = 0.0,
) -> float:
    """Mean of the per-type grounding rewards (artifact and misalignment)."""
    art = grounding_reward_single(art_h, art_boxes, blank_threshold)
    mis = grounding_reward_single(mis_h, mis_boxes, blank_threshold)
    return (art.combined + mis.combined) / 2.0


def score_reward(pred: ScoreVector, gt: ScoreVector) -> float:
    """Sum over the four dimensions of 1 - |pred - gt|, in [0, 4]."""
    return float(
        sum(1.0 - abs(p - g) for p, g in zip(pred.as_tuple(), gt.as_tuple()))
    )


def _pair_mse(pred: Heatmap, gt: Heatmap) -> float:
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise ValueError(
            f"heatmap dimensions differ: {pred.width}x{pred.height} vs {gt.width}x{gt.height}"
        )
    diff = pred.as_float64() - gt.as_float64()
    return float(np.mean(diff * diff))


def heatmap_reward(
    pred_art: Heatmap, gt_art: Heatmap, pred_mis: Heatmap, gt_mis: Heatmap
) -> float:
    """Sum over both heatmap types of 1 - per-pixel MSE, in [0, 2]."""
    return (1.0 - _pair_mse(pred_art, gt_art)) + (1.0 - _pair_mse(pred_mis, gt_mis))


def total_reward(
    gt_art_h: Heatmap,
    gt_mis_h: Heatmap,
    pred_art_boxes: list[BoundingBox],
    pred_mis_boxes: list[BoundingBox],
    pred_scores: ScoreVector,
    gt_scores: ScoreVector,
    pred_art_h: Heatmap,
    pred_mis_h: Heatmap,
    blank_threshold: float = 0.0,
) -> float:
    """Grounding + score + heatmap reward, in [0, 7].

    Grounding compares predicted boxes against the ground-truth heatmaps.
    """
    return (
        grounding_reward(gt_art_h, gt_mis_h, pred_art_boxes, pred_mis_boxes, blank_threshold)
        + score_reward(pred_scores, gt_scores)
        + heatmap_reward(pred_art_h, gt_art_h, pred_mis_h, gt_mis_h)
    )


def _effective_pair(pred_h: Heatmap | None, gt_h: Heatmap | None) -> tuple[Heatmap, Heatmap]:
    # Absent heatmaps count as blank for rewards; dimensions come from the
    # counterpart (1x1 when both are absent, contributing a perfect match).
    if pred_h is None and gt_h is None:
        return Heatmap.blank(1, 1), Heatmap.blank(1, 1)
    if pred_h is None:
        return Heatmap.blank(gt_h.width, gt_h.height), gt_h
    if gt_h is None:
        return pred_h, Heatmap.blank(pred_h.width, pred_h.height)
    return pred_h, gt_h


def reward_report(
    pred: EvaluationRecord, gt: EvaluationRecord, blank_threshold: float = 0.0
) -> dict:
    """Full reward breakdown for a prediction record against its ground truth.

    Grounding scores the prediction's boxes against the ground-truth
    heatmaps; the heatmap reward compares the two records' heatmaps.
    """
    pred_art, gt_art = _effective_pair(pred.artifact_heatmap, gt.artifact_heatmap)
    pred_mis, gt_mis = _effective_pair(pred.misalignment_heatmap, gt.misalignment_heatmap)
    art_grounding = grounding_reward_single(gt_art, pred.artifact_boxes, blank_threshold)
    mis_grounding = grounding_reward_single(gt_mis, pred.misalignment_boxes, blank_threshold)
    grounding_value = (art_grounding.combined + mis_grounding.combined) / 2.0
    r_s = score_reward(pred.scores, gt.scores)
    r_h = heatmap_reward(pred_art, gt_art, pred_mis, gt_mis)
    return {
        "id": pred.id,
        "grounding": {
            "artifact": art_grounding.as_dict(),
            "misalignment": mis_grounding.as_dict(),
            "value": grounding_value,
        },
        "score_reward": r_s,
        "heatmap_reward": r_h,
        "total": grounding_value + r_s + r_h,
    }
