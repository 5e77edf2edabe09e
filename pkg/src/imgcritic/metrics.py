"""Score-correlation and heatmap-quality metrics, plus the dataset report.

Heatmap metrics follow the saliency-benchmark conventions: CC is Pearson
over flattened pixels, KLD/SIM compare the maps as probability distributions
(each normalized by its mass), and NSS/AUC-Judd binarize the ground truth
into fixation pixels (gt > threshold, default 0). Population standard
deviation is used throughout for deterministic small-n behavior.

The dataset report splits heatmap samples by blank (GT=0) versus highlighted
(GT>0) ground truth: MSE is reported over all samples and over the GT=0
subset, while CC/KLD/SIM/NSS/AUC-Judd average over GT>0 samples only.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .core import SCORE_DIMENSIONS, EvaluationRecord, Heatmap, total_mass

KLD_EPS = 1e-12
THREADS_ENV_VAR = "IMGCRITIC_THREADS"


def _as_float_array(xs: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(xs, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def plcc(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson linear correlation coefficient."""
    x = _as_float_array(xs, "xs")
    y = _as_float_array(ys, "ys")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    if x.size < 2:
        raise ValueError("correlation requires at least 2 samples")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = np.sqrt(np.mean(dx * dx))
    sy = np.sqrt(np.mean(dy * dy))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation undefined for a constant input")
    if np.array_equal(x, y):
        return 1.0  # exact; the general path leaves sqrt rounding residue
    r = float(np.mean(dx * dy) / (sx * sy))
    return min(1.0, max(-1.0, r))


def srcc(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation; ties receive average ranks."""
    x = _as_float_array(xs, "xs")
    y = _as_float_array(ys, "ys")
    if x.size != y.size:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    return plcc(rankdata(x, method="average"), rankdata(y, method="average"))


def _check_same_dims(pred: Heatmap, gt: Heatmap):
    if (pred.width, pred.height) != (gt.width, gt.height):
        raise ValueError(
            f"heatmap dimensions differ: {pred.width}x{pred.height} vs {gt.width}x{gt.height}"
        )


def heatmap_mse(pred: Heatmap, gt: Heatmap) -> float:
    _check_same_dims(pred, gt)
    diff = pred.as_float64() - gt.as_float64()
    return float(np.mean(diff * diff))


def heatmap_cc(pred: Heatmap, gt: Heatmap) -> float:
    _check_same_dims(pred, gt)
    return plcc(pred.as_float64().reshape(-1), gt.as_float64().reshape(-1))


def heatmap_kld(pred: Heatmap, gt: Heatmap) -> float:
    """KL divergence of the gt distribution from the prediction.

    Both maps are normalized by mass (the prediction's with an epsilon guard
    so blank predictions give a large finite value, not infinity). Clamped at
    0 to absorb the epsilon-induced negative residue on identical maps.
    """
    _check_same_dims(pred, gt)
    gt_mass = total_mass(gt)
    if gt_mass <= 0.0:
        raise ValueError("KLD undefined for a blank ground-truth heatmap")
    p = pred.as_float64() / (total_mass(pred) + KLD_EPS)
    g = gt.as_float64() / gt_mass
    value = float(np.sum(g * np.log(KLD_EPS + g / (KLD_EPS + p))))
    return max(0.0, value)


def heatmap_sim(pred: Heatmap, gt: Heatmap) -> float:
    """Histogram intersection of the two mass-normalized maps, in [0, 1]."""
    _check_same_dims(pred, gt)
    pred_mass = total_mass(pred)
    gt_mass = total_mass(gt)
    if pred_mass <= 0.0 or gt_mass <= 0.0:
        raise ValueError("SIM undefined for a blank heatmap")
    if np.array_equal(pred.data, gt.data):
        # Identical distributions intersect fully; skip the rounding residue.
        return 1.0
    p = pred.as_float64() / pred_mass
    g = gt.as_float64() / gt_mass
    return float(np.sum(np.minimum(p, g)))


def _fixation_mask(gt: Heatmap, threshold: float) -> np.ndarray:
    return gt.as_float64() > threshold


def heatmap_nss(pred: Heatmap, gt: Heatmap, fixation_threshold: float = 0.0) -> float:
    """Mean z-scored prediction value at fixation pixels (gt > threshold)."""
    _check_same_dims(pred, gt)
    fixations = _fixation_mask(gt, fixation_threshold)
    if not fixations.any():
        raise ValueError("NSS undefined with an empty fixation set")
    p = pred.as_float64()
    std = float(p.std())
    if std == 0.0:
        raise ValueError("NSS undefined for a constant prediction")
    z = (p - p.mean()) / std
    return float(z[fixations].mean())


def heatmap_auc_judd(pred: Heatmap, gt: Heatmap, fixation_threshold: float = 0.0) -> float:
    """ROC area with fixation pixels as positives, all others negatives.

    Computed with the rank (Mann-Whitney) formulation, which equals the
    trapezoidal ROC area with thresholds at distinct prediction values and
    the ties-count-half convention.
    """
    _check_same_dims(pred, gt)
    fixations = _fixation_mask(gt, fixation_threshold).reshape(-1)
    n_pos = int(fixations.sum())
    n_neg = fixations.size - n_pos
    if n_pos == 0:
        raise ValueError("AUC-Judd undefined with an empty fixation set")
    if n_neg == 0:
        raise ValueError("AUC-Judd undefined when every pixel is a fixation")
    ranks = rankdata(pred.as_float64().reshape(-1), method="average")
    pos_rank_sum = float(ranks[fixations].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


HEATMAP_METRICS = {
    "mse": heatmap_mse,
    "cc": heatmap_cc,
    "kld": heatmap_kld,
    "sim": heatmap_sim,
    "nss": heatmap_nss,
    "auc_judd": heatmap_auc_judd,
}


@dataclass
class ScoreCorrelations:
    plcc: float | None
    srcc: float | None

    def as_dict(self) -> dict:
        return {"plcc": self.plcc, "srcc": self.srcc}


@dataclass
class HeatmapBlock:
    """Per-heatmap-type metrics; GT>0 metrics are per-record macro averages."""

    mse_all: float | None = None
    mse_gt0: float | None = None
    cc: float | None = None
    kld: float | None = None
    sim: float | None = None
    nss: float | None = None
    auc_judd: float | None = None
    count_gt0: int = 0
    count_gt_pos: int = 0

    def as_dict(self) -> dict:
        return {
            "mse_all": self.mse_all,
            "mse_gt0": self.mse_gt0,
            "cc": self.cc,
            "kld": self.kld,
            "sim": self.sim,
            "nss": self.nss,
            "auc_judd": self.auc_judd,
            "count_gt0": self.count_gt0,
            "count_gt_pos": self.count_gt_pos,
        }


@dataclass
class MetricReport:
    scores: dict[str, ScoreCorrelations]
    artifact: HeatmapBlock
    misalignment: HeatmapBlock
    record_count: int
    errors: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "scores": {name: sc.as_dict() for name, sc in self.scores.items()},
            "heatmaps": {
                "artifact": self.artifact.as_dict(),
                "misalignment": self.misalignment.as_dict(),
            },
            "record_count": self.record_count,
            "errors": list(self.errors),
        }


def default_thread_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR)
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from exc
    return max(1, n)


def _mean_or_none(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def _heatmap_record_metrics(args):
    """Metrics for one record's one heatmap type; returns (values, errors)."""
    rid, kind, pred, gt, fixation_threshold, blank_threshold = args
    values: dict[str, float] = {}
    errors: list[str] = []
    if gt is None:
        return values, errors
    if pred is None:
        errors.append(f"{rid}/{kind}: prediction heatmap missing, record skipped")
        return values, errors
    try:
        values["mse"] = heatmap_mse(pred, gt)
    except ValueError as exc:
        errors.append(f"{rid}/{kind}: {exc}")
        return values, errors
    blank = total_mass(gt) <= blank_threshold
    values["blank"] = 1.0 if blank else 0.0
    if blank:
        return values, errors
    for name in ("cc", "kld", "sim"):
        try:
            values[name] = HEATMAP_METRICS[name](pred, gt)
        except ValueError as exc:
            errors.append(f"{rid}/{kind} {name}: {exc}")
    for name in ("nss", "auc_judd"):
        try:
            values[name] = HEATMAP_METRICS[name](pred, gt, fixation_threshold)
        except ValueError as exc:
            errors.append(f"{rid}/{kind} {name}: {exc}")
    return values, errors


def evaluate_dataset(
    preds: list[EvaluationRecord],
    gts: list[EvaluationRecord],
    fixation_threshold: float = 0.0,
    blank_threshold: float = 0.0,
    threads: int | None = None,
) -> MetricReport:
    """Aggregate score correlations and heatmap metrics over matched records.

    Records are matched by id (every gt id must have a prediction and vice
    versa). Per-record metric failures are collected into report.errors and
    the affected record is excluded from that metric's average.
    """
    pred_by_id = {r.id: r for r in preds}
    if len(pred_by_id) != len(preds):
        raise ValueError("duplicate ids in predictions")
    gt_ids = [r.id for r in gts]
    if len(set(gt_ids)) != len(gt_ids):
        raise ValueError("duplicate ids in ground truth")
    if set(pred_by_id) != set(gt_ids):
        missing = sorted(set(gt_ids) - set(pred_by_id))[:5]
        extra = sorted(set(pred_by_id) - set(gt_ids))[:5]
        raise ValueError(f"id mismatch between lists (missing={missing}, extra={extra})")
    if threads is None:
        threads = default_thread_count()

    errors: list[str] = []
    scores: dict[str, ScoreCorrelations] = {}
    plcc_values, srcc_values = [], []
    for dim in SCORE_DIMENSIONS:
        gt_col = [getattr(r.scores, dim) for r in gts]
        pred_col = [getattr(pred_by_id[r.id].scores, dim) for r in gts]
        try:
            p = plcc(pred_col, gt_col)
            s = srcc(pred_col, gt_col)
        except ValueError as exc:
            errors.append(f"scores/{dim}: {exc}")
            scores[dim] = ScoreCorrelations(None, None)
            continue
        scores[dim] = ScoreCorrelations(p, s)
        plcc_values.append(p)
        srcc_values.append(s)
    scores["average"] = ScoreCorrelations(_mean_or_none(plcc_values), _mean_or_none(srcc_values))

    blocks = {}
    for kind, attr in (("artifact", "artifact_heatmap"), ("misalignment", "misalignment_heatmap")):
        tasks = [
            (r.id, kind, getattr(pred_by_id[r.id], attr), getattr(r, attr),
             fixation_threshold, blank_threshold)
            for r in gts
        ]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_heatmap_record_metrics, tasks))
        else:
            results = [_heatmap_record_metrics(t) for t in tasks]

        collected: dict[str, list[float]] = {
            name: [] for name in ("mse", "mse_gt0", "cc", "kld", "sim", "nss", "auc_judd")
        }
        count_gt0 = count_gt_pos = 0
        for values, record_errors in results:
            errors.extend(record_errors)
            if "mse" in values:
                collected["mse"].append(values["mse"])
            if "blank" in values:
                if values["blank"]:
                    count_gt0 += 1
                    collected["mse_gt0"].append(values["mse"])
                else:
                    count_gt_pos += 1
            for name in ("cc", "kld", "sim", "nss", "auc_judd"):
                if name in values:
                    collected[name].append(values[name])
        blocks[kind] = HeatmapBlock(
            mse_all=_mean_or_none(collected["mse"]),
            mse_gt0=_mean_or_none(collected["mse_gt0"]),
            cc=_mean_or_none(collected["cc"]),
            kld=_mean_or_none(collected["kld"]),
            sim=_mean_or_none(collected["sim"]),
            nss=_mean_or_none(collected["nss"]),
            auc_judd=_mean_or_none(collected["auc_judd"]),
            count_gt0=count_gt0,
            count_gt_pos=count_gt_pos,
        )

    return MetricReport(
        scores=scores,
        artifact=blocks["artifact"],
        misalignment=blocks["misalignment"],
        record_count=len(gts),
        errors=errors,
    )
