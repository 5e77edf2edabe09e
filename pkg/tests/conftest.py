"""Shared fixtures and independent oracle implementations.

Oracles are deliberately written as plain-Python (math.fsum) or pairwise
formulations so they share no code path with the library's vectorized
implementations.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import pytest

from imgcritic.core import BoundingBox, EvaluationRecord, Heatmap, ScoreVector
from imgcritic.formats import encode_hmf
from imgcritic.parsing import ParsedResponse

# A fixture response in the canonical look-think-predict shape.
CANONICAL_RESPONSE = (
    "<think>\n"
    "The cat's left paw merges with the table edge, and the lamp from the "
    "caption is missing on the right side.\n"
    "Proposed regions (xyxy): 1.[12,34,156,198];2.[200,40,260,120]\n"
    "</think>\n"
    "<answer>Semantic Alignment score: 0.80\n"
    "Aesthetic score: 0.70\n"
    "Plausibility score: 0.90\n"
    "Overall Impression score: 0.80\n"
    "Misalignment Locations: 1.[200,40,260,120]\n"
    "Artifact Locations: 1.[12,34,156,198]</answer>"
)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


# ---------------------------------------------------------------------------
# builders


def random_heatmap(rng, width=8, height=8, blank=False, sparse=False) -> Heatmap:
    if blank:
        return Heatmap.blank(width, height)
    values = rng.random((height, width))
    if sparse:
        values = values * (rng.random((height, width)) < 0.1)
        if not values.any():
            values[rng.integers(height), rng.integers(width)] = 0.5
    return Heatmap(values)


def random_scores(rng) -> ScoreVector:
    return ScoreVector(*rng.random(4))


def random_box(rng, width=8, height=8) -> BoundingBox:
    x1, x2 = np.sort(rng.uniform(0, width, 2))
    y1, y2 = np.sort(rng.uniform(0, height, 2))
    return BoundingBox(x1, y1, x2 + 0.25, y2 + 0.25)


_WORDS = (
    "the image shows a distorted hand near the glass while the background "
    "stays clean and the colors look balanced but one region deviates from "
    "the caption"
).split()


def random_parsed_response(rng) -> ParsedResponse:
    think = " ".join(rng.choice(_WORDS, size=rng.integers(3, 12)))
    scores = ScoreVector(*(int(k) / 100.0 for k in rng.integers(0, 101, 4)))

    def boxes(n):
        out = []
        for _ in range(n):
            x1, y1 = rng.uniform(0, 200, 2)
            w, h = rng.uniform(0.5, 150, 2)
            out.append(BoundingBox(x1, y1, x1 + w, y1 + h))
        return out

    return ParsedResponse(
        think_text=think,
        proposed_regions=boxes(rng.integers(0, 4)),
        scores=scores,
        misalignment_locations=boxes(rng.integers(0, 3)),
        artifact_locations=boxes(rng.integers(0, 3)),
    )


def block_heatmap(width, height, box, intensity=1.0) -> Heatmap:
    """Heatmap that is `intensity` inside the integer box and 0 outside."""
    data = np.zeros((height, width))
    x1, y1, x2, y2 = (int(v) for v in box)
    data[y1:y2, x1:x2] = intensity
    return Heatmap(data)


def perfect_record_pair() -> tuple[EvaluationRecord, EvaluationRecord]:
    """A ground-truth record and an identical prediction whose boxes exactly
    cover the heatmap blocks (total reward 7.0)."""
    scores = ScoreVector(0.8, 0.7, 0.9, 0.8)

    def build(rid):
        return EvaluationRecord(
            id=rid,
            scores=scores,
            artifact_heatmap=block_heatmap(16, 16, (4, 4, 8, 8)),
            misalignment_heatmap=block_heatmap(16, 16, (2, 2, 6, 6)),
            artifact_boxes=[BoundingBox(4, 4, 8, 8)],
            misalignment_boxes=[BoundingBox(2, 2, 6, 6)],
        )

    return build("r0"), build("r0")


def write_record_files(directory: Path, record: EvaluationRecord) -> dict:
    """Write a record's files and return its manifest entry."""
    directory.mkdir(parents=True, exist_ok=True)
    rid = record.id
    entry = {"id": rid, "score_path": f"{rid}_scores.json"}
    (directory / entry["score_path"]).write_text(json.dumps(record.scores.as_dict()))
    for kind in ("artifact", "misalignment"):
        heatmap = getattr(record, f"{kind}_heatmap")
        if heatmap is not None:
            name = f"{rid}_{kind}.hmf"
            (directory / name).write_bytes(encode_hmf(heatmap))
            entry[f"{kind}_heatmap_path"] = name
        boxes = getattr(record, f"{kind}_boxes")
        if boxes:
            name = f"{rid}_{kind}_boxes.json"
            (directory / name).write_text(json.dumps([b.as_list() for b in boxes]))
            entry[f"{kind}_boxes_path"] = name
    return entry


def write_manifest(directory: Path, records: list[EvaluationRecord]) -> Path:
    entries = [write_record_files(directory, r) for r in records]
    path = directory / "manifest.json"
    path.write_text(json.dumps(entries))
    return path


# ---------------------------------------------------------------------------
# oracles


def pearson_oracle(xs, ys) -> float:
    n = len(xs)
    mx = math.fsum(xs) / n
    my = math.fsum(ys) / n
    cov = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys)) / n
    vx = math.fsum((x - mx) ** 2 for x in xs) / n
    vy = math.fsum((y - my) ** 2 for y in ys) / n
    return cov / math.sqrt(vx * vy)


def average_ranks_oracle(xs) -> list[float]:
    order = sorted(range(len(xs)), key=lambda i: xs[i])
    ranks = [0.0] * len(xs)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and xs[order[j + 1]] == xs[order[i]]:
            j += 1
        rank = (i + j) / 2.0 + 1.0  # ties share the average rank
        for k in range(i, j + 1):
            ranks[order[k]] = rank
        i = j + 1
    return ranks


def spearman_oracle(xs, ys) -> float:
    return pearson_oracle(average_ranks_oracle(list(xs)), average_ranks_oracle(list(ys)))


def mse_oracle(pred, gt) -> float:
    # tolist() yields Python floats so the arithmetic below runs in f64
    p, g = pred.flat.tolist(), gt.flat.tolist()
    return math.fsum((a - b) ** 2 for a, b in zip(p, g)) / len(p)


def kld_oracle(pred, gt, eps=1e-12) -> float:
    p, g = pred.flat.tolist(), gt.flat.tolist()
    pm = math.fsum(p) + eps
    gm = math.fsum(g)
    return math.fsum(
        (gi / gm) * math.log(eps + (gi / gm) / (eps + pi / pm)) for pi, gi in zip(p, g)
    )


def sim_oracle(pred, gt) -> float:
    p, g = pred.flat.tolist(), gt.flat.tolist()
    pm = math.fsum(p)
    gm = math.fsum(g)
    return math.fsum(min(pi / pm, gi / gm) for pi, gi in zip(p, g))


def nss_oracle(pred, gt, threshold=0.0) -> float:
    p = pred.flat.tolist()
    n = len(p)
    mean = math.fsum(p) / n
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in p) / n)
    z = [(v - mean) / std for v in p]
    at_fix = [zv for zv, gv in zip(z, gt.flat.tolist()) if gv > threshold]
    return math.fsum(at_fix) / len(at_fix)


def auc_pairwise_oracle(pred, gt, threshold=0.0) -> float:
    """AUC as P(pred_pos > pred_neg) + 0.5 P(pred_pos == pred_neg)."""
    p = pred.as_float64().reshape(-1)
    fix = gt.as_float64().reshape(-1) > threshold
    pos = p[fix][:, None]
    neg = p[~fix][None, :]
    return float(np.mean((pos > neg) + 0.5 * (pos == neg)))


def group_advantage_oracle(rewards, sigma_floor=1e-8) -> list[float]:
    n = len(rewards)
    if max(rewards) == min(rewards):
        return [0.0] * n
    mean = math.fsum(rewards) / n
    std = math.sqrt(math.fsum((r - mean) ** 2 for r in rewards) / n)
    return [(r - mean) / max(std, sigma_floor) for r in rewards]
