"""Best-of-N candidate selection over four-dimensional score vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import SCORE_DIMENSIONS, ScoreVector

_TIE_RULES = SCORE_DIMENSIONS + ("index",)


@dataclass(frozen=True)
class SelectionPolicy:
    """Weighted aggregation plus a deterministic tie-break chain.

    Weights must be nonnegative and sum to 1. Tie rules are score dimensions
    (higher wins) or "index" (lower wins); an index rule is always applied
    last so the ranking is a total order.
    """

    weights: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    tie_break: tuple[str, ...] = ("overall", "index")

    def __post_init__(self):
        if len(self.weights) != 4:
            raise ValueError(f"need 4 weights, got {len(self.weights)}")
        weights = tuple(float(w) for w in self.weights)
        if any(not math.isfinite(w) or w < 0.0 for w in weights):
            raise ValueError(f"weights must be nonnegative, got {weights}")
        if abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got sum {sum(weights)!r}")
        object.__setattr__(self, "weights", weights)
        for rule in self.tie_break:
            if rule not in _TIE_RULES:
                raise ValueError(f"unknown tie rule {rule!r} (expected one of {_TIE_RULES})")
        object.__setattr__(self, "tie_break", tuple(self.tie_break))


def aggregate(s: ScoreVector, p: SelectionPolicy) -> float:
    """Weighted sum of the four score components, in [0, 1]."""
    return float(sum(w * v for w, v in zip(p.weights, s.as_tuple())))


def _sort_key(candidates: list[ScoreVector], aggregates: list[float], p: SelectionPolicy):
    rules = list(p.tie_break)
    if "index" not in rules:
        rules.append("index")

    def key(i: int):
        parts = [-aggregates[i]]
        for rule in rules:
            parts.append(i if rule == "index" else -getattr(candidates[i], rule))
        return tuple(parts)

    return key


def rank_candidates(candidates: list[ScoreVector], p: SelectionPolicy | None = None) -> list[int]:
    """Indices in descending aggregate order, ties broken by the policy chain."""
    if not candidates:
        raise ValueError("candidate list must not be empty")
    policy = p if p is not None else SelectionPolicy()
    aggregates = [aggregate(s, policy) for s in candidates]
    return sorted(range(len(candidates)), key=_sort_key(candidates, aggregates, policy))


def select_best(candidates: list[ScoreVector], p: SelectionPolicy | None = None) -> int:
    """Index of the best candidate; always rank_candidates(...)[0]."""
    return rank_candidates(candidates, p)[0]
