"""Pydantic request/response models for the HTTP service.

Wire conventions: heatmaps are {width, height, values} with row-major
values; boxes are [x1, y1, x2, y2] arrays; scores are objects keyed by
alignment/aesthetics/plausibility/overall.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field, field_validator

from ..core import BoundingBox, EvaluationRecord, Heatmap, ScoreVector, clamp_box

Box = tuple[float, float, float, float]


class HeatmapModel(BaseModel):
    width: int = Field(ge=1)
    height: int = Field(ge=1)
    values: list[float]

    def to_heatmap(self) -> Heatmap:
        return Heatmap.from_values(self.width, self.height, self.values)


class ScoreModel(BaseModel):
    alignment: float = Field(ge=0.0, le=1.0)
    aesthetics: float = Field(ge=0.0, le=1.0)
    plausibility: float = Field(ge=0.0, le=1.0)
    overall: float = Field(ge=0.0, le=1.0)

    def to_scores(self) -> ScoreVector:
        return ScoreVector(self.alignment, self.aesthetics, self.plausibility, self.overall)

    @classmethod
    def from_scores(cls, s: ScoreVector) -> "ScoreModel":
        return cls(**s.as_dict())


def _to_boxes(raw: list[Box], heatmap: Heatmap | None) -> list[BoundingBox]:
    boxes = [BoundingBox(*b) for b in raw]
    if heatmap is not None:
        boxes = [clamp_box(b, heatmap.width, heatmap.height) for b in boxes]
    return boxes


class RecordModel(BaseModel):
    id: str = ""
    scores: ScoreModel
    artifact_heatmap: HeatmapModel | None = None
    misalignment_heatmap: HeatmapModel | None = None
    artifact_boxes: list[Box] = []
    misalignment_boxes: list[Box] = []

    def to_record(self) -> EvaluationRecord:
        art_h = self.artifact_heatmap.to_heatmap() if self.artifact_heatmap else None
        mis_h = self.misalignment_heatmap.to_heatmap() if self.misalignment_heatmap else None
        return EvaluationRecord(
            id=self.id,
            scores=self.scores.to_scores(),
            artifact_heatmap=art_h,
            misalignment_heatmap=mis_h,
            artifact_boxes=_to_boxes(self.artifact_boxes, art_h),
            misalignment_boxes=_to_boxes(self.misalignment_boxes, mis_h),
        )


class VersionResponse(BaseModel):
    name: str
    version: str


class ValueResponse(BaseModel):
    value: float


class ScoreRewardRequest(BaseModel):
    prediction: ScoreModel
    ground_truth: ScoreModel


class HeatmapRewardRequest(BaseModel):
    prediction_artifact: HeatmapModel
    ground_truth_artifact: HeatmapModel
    prediction_misalignment: HeatmapModel
    ground_truth_misalignment: HeatmapModel


class GroundingRequest(BaseModel):
    artifact_heatmap: HeatmapModel | None = None
    misalignment_heatmap: HeatmapModel | None = None
    artifact_boxes: list[Box] = []
    misalignment_boxes: list[Box] = []
    blank_threshold: float = 0.0


class GroundingBreakdownModel(BaseModel):
    completeness: float
    compactness: float
    uniqueness: float
    combined: float
    edge_case: str


class GroundingResponse(BaseModel):
    artifact: GroundingBreakdownModel
    misalignment: GroundingBreakdownModel
    value: float


class RewardReport(BaseModel):
    id: str = ""
    grounding: GroundingResponse
    score_reward: float
    heatmap_reward: float
    total: float


class RewardPairRequest(BaseModel):
    prediction: RecordModel
    ground_truth: RecordModel
    blank_threshold: float = 0.0


class RewardBatchRequest(BaseModel):
    predictions: list[RecordModel]
    ground_truth: list[RecordModel]
    blank_threshold: float = 0.0


class CorrelationRequest(BaseModel):
    xs: list[float]
    ys: list[float]


class HeatmapMetricRequest(BaseModel):
    metric: Literal["mse", "cc", "kld", "sim", "nss", "auc_judd"]
    prediction: HeatmapModel
    ground_truth: HeatmapModel
    fixation_threshold: float = 0.0


class MetricsRequest(BaseModel):
    predictions: list[RecordModel]
    ground_truth: list[RecordModel]
    fixation_threshold: float = 0.0
    blank_threshold: float = 0.0


class ScoreCorrelationsModel(BaseModel):
    plcc: float | None
    srcc: float | None


class HeatmapBlockModel(BaseModel):
    mse_all: float | None
    mse_gt0: float | None
    cc: float | None
    kld: float | None
    sim: float | None
    nss: float | None
    auc_judd: float | None
    count_gt0: int
    count_gt_pos: int


class MetricReportModel(BaseModel):
    scores: dict[str, ScoreCorrelationsModel]
    heatmaps: dict[str, HeatmapBlockModel]
    record_count: int
    errors: list[str]


class ParseRequest(BaseModel):
    text: str
    strict: bool = False


class ParsedResponseModel(BaseModel):
    think_text: str
    proposed_regions: list[Box]
    scores: ScoreModel
    misalignment_locations: list[Box]
    artifact_locations: list[Box]


class SelectRequest(BaseModel):
    candidates: list[ScoreModel]
    weights: tuple[float, float, float, float] | None = None

    @field_validator("candidates")
    @classmethod
    def _nonempty(cls, v):
        if not v:
            raise ValueError("candidate list must not be empty")
        return v


class SelectResponse(BaseModel):
    best_index: int
    ranking: list[int]
    aggregates: list[float]


class GrpoDemoRequest(BaseModel):
    width: int = Field(default=16, ge=1)
    height: int = Field(default=16, ge=1)
    num_steps: int = Field(default=2, ge=1)
    group_size: int = Field(default=8, ge=2)
    iterations: int = Field(default=300, ge=0)
    learning_rate: float = 8.0
    epsilon: float = 0.2
    sigma: float = 0.4
    sigma_floor: float = 1e-8
    seed: int = 0
    condition: str = "region"
    mode: Literal["dense", "image_only"] = "dense"
    kl_beta: float = 0.0


class GrpoDemoResponse(BaseModel):
    curve: list[dict]
    final_region_mse: float
    condition: str
    mode: str
    final_mean_map: list[list[float]]
