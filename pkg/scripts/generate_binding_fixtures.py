#!/usr/bin/env python3
"""Generate the shared fixture corpus for the bindings parity suite.

Expected values are computed by calling the library natively (no HTTP), so
the frontend tests can assert that binding results are bit-identical to the
native ones. Writes frontend/fixtures/corpus.json.
"""

import json
from pathlib import Path

import numpy as np

from imgcritic import __version__
from imgcritic.core import BoundingBox, EvaluationRecord, Heatmap, ScoreVector
from imgcritic.client import heatmap_to_wire, record_to_wire
from imgcritic.metrics import HEATMAP_METRICS, plcc, srcc
from imgcritic.parsing import parse_response
from imgcritic.rewards import (
    grounding_reward_single,
    heatmap_reward,
    reward_report,
    score_reward,
)
from imgcritic.verifier import SelectionPolicy, aggregate, rank_candidates

OUT = Path(__file__).resolve().parent.parent / "frontend" / "fixtures" / "corpus.json"

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

LENIENT_RESPONSE = (
    "<answer>Semantic Alignment score: 0.55\n"
    "Aesthetic score: 0.45\n"
    "Plausibility score: 1.2\n"
    "Overall Impression score: 0.5</answer>"
)


def rand_heatmap(rng, width, height, blank=False):
    if blank:
        return Heatmap.blank(width, height)
    return Heatmap(rng.random((height, width)))


def rand_scores(rng):
    return ScoreVector(*(float(v) for v in rng.random(4)))


def scores_wire(s):
    return s.as_dict()


def grounding_case(art_h, mis_h, art_boxes, mis_boxes):
    art = grounding_reward_single(art_h if art_h else Heatmap.blank(1, 1), art_boxes)
    mis = grounding_reward_single(mis_h if mis_h else Heatmap.blank(1, 1), mis_boxes)
    return {
        "artifact_heatmap": heatmap_to_wire(art_h) if art_h else None,
        "misalignment_heatmap": heatmap_to_wire(mis_h) if mis_h else None,
        "artifact_boxes": [b.as_list() for b in art_boxes],
        "misalignment_boxes": [b.as_list() for b in mis_boxes],
        "expected": {
            "artifact": art.as_dict(),
            "misalignment": mis.as_dict(),
            "value": (art.combined + mis.combined) / 2.0,
        },
    }


def parsed_wire(parsed):
    return {
        "think_text": parsed.think_text,
        "proposed_regions": [b.as_list() for b in parsed.proposed_regions],
        "scores": parsed.scores.as_dict(),
        "misalignment_locations": [b.as_list() for b in parsed.misalignment_locations],
        "artifact_locations": [b.as_list() for b in parsed.artifact_locations],
    }


def main():
    rng = np.random.default_rng(20250810)
    corpus = {"service": "imgcritic", "version": __version__}

    corpus["score_reward"] = []
    for _ in range(6):
        pred, gt = rand_scores(rng), rand_scores(rng)
        corpus["score_reward"].append(
            {"prediction": scores_wire(pred), "ground_truth": scores_wire(gt),
             "expected": score_reward(pred, gt)}
        )
    same = rand_scores(rng)
    corpus["score_reward"].append(
        {"prediction": scores_wire(same), "ground_truth": scores_wire(same), "expected": 4.0}
    )

    corpus["heatmap_reward"] = []
    for _ in range(5):
        pa, ga = rand_heatmap(rng, 8, 8), rand_heatmap(rng, 8, 8)
        pm, gm = rand_heatmap(rng, 6, 4), rand_heatmap(rng, 6, 4)
        corpus["heatmap_reward"].append(
            {
                "prediction_artifact": heatmap_to_wire(pa),
                "ground_truth_artifact": heatmap_to_wire(ga),
                "prediction_misalignment": heatmap_to_wire(pm),
                "ground_truth_misalignment": heatmap_to_wire(gm),
                "expected": heatmap_reward(pa, ga, pm, gm),
            }
        )

    block = np.zeros((8, 8))
    block[2:6, 2:6] = 1.0
    block_map = Heatmap(block)
    box = BoundingBox(2, 2, 6, 6)
    corpus["grounding_reward"] = [
        grounding_case(None, None, [], []),                      # blank match on both
        grounding_case(block_map, None, [], []),                 # missing boxes / blank match
        grounding_case(None, None, [box], []),                   # boxes on blank
        grounding_case(block_map, block_map, [box], [box]),      # perfect
        grounding_case(
            rand_heatmap(rng, 8, 8), rand_heatmap(rng, 8, 8),
            [box, BoundingBox(0, 0, 3, 3)], [BoundingBox(1, 1, 7, 5)],
        ),
    ]

    def record(rid, blank=False):
        return EvaluationRecord(
            id=rid,
            scores=rand_scores(rng),
            artifact_heatmap=rand_heatmap(rng, 8, 8, blank=blank),
            misalignment_heatmap=rand_heatmap(rng, 6, 6, blank=blank),
            artifact_boxes=[BoundingBox(1, 1, 5, 5)] if not blank else [],
            misalignment_boxes=[BoundingBox(0, 0, 4, 3)] if not blank else [],
        )

    corpus["total_reward"] = []
    for i in range(4):
        pred, gt = record(f"p{i}"), record(f"p{i}", blank=(i == 3))
        corpus["total_reward"].append(
            {
                "prediction": record_to_wire(pred),
                "ground_truth": record_to_wire(gt),
                "expected": reward_report(pred, gt),
            }
        )

    corpus["plcc"], corpus["srcc"] = [], []
    for _ in range(6):
        xs = [float(v) for v in rng.random(40)]
        ys = [float(v) for v in rng.random(40)]
        corpus["plcc"].append({"xs": xs, "ys": ys, "expected": plcc(xs, ys)})
        txs = [float(v) for v in rng.integers(0, 8, 40) / 7.0]
        tys = [float(v) for v in rng.integers(0, 8, 40) / 7.0]
        corpus["srcc"].append({"xs": txs, "ys": tys, "expected": srcc(txs, tys)})

    corpus["heatmap_metrics"] = []
    for metric in ("mse", "cc", "kld", "sim", "nss", "auc_judd"):
        for _ in range(4):
            pred = rand_heatmap(rng, 16, 16)
            gt_values = rng.random((16, 16)) * (rng.random((16, 16)) < 0.15)
            if not gt_values.any():
                gt_values[0, 0] = 0.5
            gt = Heatmap(gt_values)
            fn = HEATMAP_METRICS[metric]
            expected = fn(pred, gt, 0.0) if metric in ("nss", "auc_judd") else fn(pred, gt)
            corpus["heatmap_metrics"].append(
                {
                    "metric": metric,
                    "prediction": heatmap_to_wire(pred),
                    "ground_truth": heatmap_to_wire(gt),
                    "fixation_threshold": 0.0,
                    "expected": expected,
                }
            )

    corpus["parse_response"] = [
        {
            "text": CANONICAL_RESPONSE,
            "strict": True,
            "expected": parsed_wire(parse_response(CANONICAL_RESPONSE, strict=True)),
        },
        {
            "text": LENIENT_RESPONSE,
            "strict": False,
            "expected": parsed_wire(parse_response(LENIENT_RESPONSE, strict=False)),
        },
    ]

    corpus["select_best"] = []
    for weights in (None, (0.1, 0.2, 0.3, 0.4), (0.0, 0.0, 0.0, 1.0)):
        candidates = [rand_scores(rng) for _ in range(16)]
        policy = SelectionPolicy(weights=weights) if weights else SelectionPolicy()
        ranking = rank_candidates(candidates, policy)
        corpus["select_best"].append(
            {
                "candidates": [scores_wire(c) for c in candidates],
                "weights": list(weights) if weights else None,
                "expected": {
                    "best_index": ranking[0],
                    "ranking": ranking,
                    "aggregates": [aggregate(c, policy) for c in candidates],
                },
            }
        )

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(corpus, indent=1) + "\n")
    sections = [k for k in corpus if isinstance(corpus[k], list)]
    total = sum(len(corpus[k]) for k in sections)
    print(f"wrote {OUT} ({total} fixtures across {len(sections)} functions)")


if __name__ == "__main__":
    main()
