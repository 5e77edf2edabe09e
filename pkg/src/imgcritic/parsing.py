"""Parser and renderer for the look-think-predict evaluation response format.

A response carries a <think> block (free reasoning plus a "Proposed regions
(xyxy):" line listing candidate flaw boxes) and an <answer> block with four
labeled scores and two flaw-location lists. Region lists use the enumerated
grammar "1.[x1,y1,x2,y2];2.[x1,y1,x2,y2]"; empty lists are written "none".

Lenient mode (the default for real model output) tolerates a missing think
block, missing location lines and out-of-range scores (clamped); strict mode
gates fixtures and rejects all of those. Score lines are required in both
modes: there is no defensible default for a missing score.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .core import BoundingBox, ScoreVector


class ParseError(ValueError):
    """Raised when response text does not match the expected format."""


@dataclass
class ParsedResponse:
    think_text: str = ""
    proposed_regions: list[BoundingBox] = field(default_factory=list)
    scores: ScoreVector = ScoreVector(0.0, 0.0, 0.0, 0.0)
    misalignment_locations: list[BoundingBox] = field(default_factory=list)
    artifact_locations: list[BoundingBox] = field(default_factory=list)


_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_REGION_ITEM = re.compile(
    r"^(\d+)\s*\.\s*\[\s*({n})\s*,\s*({n})\s*,\s*({n})\s*,\s*({n})\s*\]$".format(n=_NUMBER)
)
_THINK_BLOCK = re.compile(r"<think>(.*?)</think>", re.DOTALL | re.IGNORECASE)
_ANSWER_BLOCK = re.compile(r"<answer>(.*?)</answer>", re.DOTALL | re.IGNORECASE)
_REGIONS_LINE = re.compile(
    r"Proposed\s+regions\s*\(xyxy\)\s*:([^\n]*)", re.IGNORECASE
)

_SCORE_LABELS = {
    "alignment": r"Semantic\s+Alignment\s+score",
    "aesthetics": r"Aesthetic\s+score",
    "plausibility": r"Plausibility\s+score",
    "overall": r"Overall\s+Impression\s+score",
}
_LOCATION_LABELS = {
    "misalignment": r"Misalignment\s+Locations",
    "artifact": r"Artifact\s+Locations",
}


def parse_region_list(text: str) -> list[BoundingBox]:
    """Parse an enumerated region list; "" and "none" yield no regions.

    Indices must start at 1 and increase by 1; each entry is a bracketed
    x1,y1,x2,y2 quadruple with positive area.
    """
    text = text.strip()
    if not text or text.lower() == "none":
        return []
    segments = [seg.strip() for seg in text.split(";")]
    segments = [seg for seg in segments if seg]
    boxes = []
    for expected_index, seg in enumerate(segments, start=1):
        m = _REGION_ITEM.match(seg)
        if m is None:
            raise ParseError(f"malformed region entry {seg!r}")
        index = int(m.group(1))
        if index != expected_index:
            raise ParseError(
                f"region indices must be 1,2,...: got {index} where {expected_index} expected"
            )
        coords = [float(m.group(i)) for i in range(2, 6)]
        try:
            boxes.append(BoundingBox(*coords))
        except ValueError as exc:
            raise ParseError(str(exc)) from exc
    return boxes


def _find_labeled_value(body: str, label_pattern: str) -> str | None:
    m = re.search(label_pattern + r"\s*:([^\n]*)", body, re.IGNORECASE)
    if m is None:
        return None
    return m.group(1).strip()


def _parse_score(raw: str, name: str, strict: bool) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ParseError(f"{name} score {raw!r} is not a number") from exc
    if not math.isfinite(value):
        raise ParseError(f"{name} score {raw!r} is not finite")
    if not 0.0 <= value <= 1.0:
        if strict:
            raise ParseError(f"{name} score {value} out of [0, 1]")
        value = min(max(value, 0.0), 1.0)
    return value


def _strip_sentence_period(raw: str) -> str:
    # Lenient ingestion: a region list used to end a sentence.
    if raw.endswith(".") and raw[:-1].rstrip().endswith("]"):
        return raw[:-1].rstrip()
    return raw


def parse_response(text: str, strict: bool = False) -> ParsedResponse:
    """Parse a full look-think-predict response."""
    think_text = ""
    proposed: list[BoundingBox] = []
    think_match = _THINK_BLOCK.search(text)
    if think_match is not None:
        think_body = think_match.group(1)
        regions_match = _REGIONS_LINE.search(think_body)
        if regions_match is not None:
            raw = regions_match.group(1).strip()
            if not strict:
                raw = _strip_sentence_period(raw)
            proposed = parse_region_list(raw)
            think_body = think_body[: regions_match.start()] + think_body[regions_match.end():]
        think_text = think_body.strip()

    answer_match = _ANSWER_BLOCK.search(text)
    if answer_match is None:
        raise ParseError("missing <answer> block")
    answer = answer_match.group(1)

    score_values = {}
    for name, label in _SCORE_LABELS.items():
        raw = _find_labeled_value(answer, label)
        if raw is None:
            raise ParseError(f"missing {name} score line in <answer>")
        score_values[name] = _parse_score(raw, name, strict)

    locations = {}
    for kind, label in _LOCATION_LABELS.items():
        raw = _find_labeled_value(answer, label)
        if raw is None:
            if strict:
                raise ParseError(f"missing {kind} locations line in <answer>")
            locations[kind] = []
            continue
        if not strict:
            raw = _strip_sentence_period(raw)
        locations[kind] = parse_region_list(raw)

    return ParsedResponse(
        think_text=think_text,
        proposed_regions=proposed,
        scores=ScoreVector(**score_values),
        misalignment_locations=locations["misalignment"],
        artifact_locations=locations["artifact"],
    )


def render_region_list(boxes: list[BoundingBox]) -> str:
    if not boxes:
        return "none"
    return ";".join(
        f"{i}.[{b.x1!r},{b.y1!r},{b.x2!r},{b.y2!r}]" for i, b in enumerate(boxes, start=1)
    )


def render_response(r: ParsedResponse) -> str:
    """Emit the canonical response text; parse_response inverts it exactly
    (given 2-decimal scores and think text that avoids the format's tokens).
    """
    lines = ["<think>"]
    if r.think_text:
        lines.append(r.think_text)
    lines.append(f"Proposed regions (xyxy): {render_region_list(r.proposed_regions)}")
    lines.append("</think>")
    lines.append(
        "<answer>Semantic Alignment score: {a:.2f}\n"
        "Aesthetic score: {b:.2f}\n"
        "Plausibility score: {c:.2f}\n"
        "Overall Impression score: {d:.2f}\n"
        "Misalignment Locations: {mis}\n"
        "Artifact Locations: {art}</answer>".format(
            a=r.scores.alignment,
            b=r.scores.aesthetics,
            c=r.scores.plausibility,
            d=r.scores.overall,
            mis=render_region_list(r.misalignment_locations),
            art=render_region_list(r.artifact_locations),
        )
    )
    return "\n".join(lines)
