"""FastAPI service exposing the reward engine, metrics, parser and verifier."""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..core import BoundingBox, Heatmap
from ..denseflow import TrainConfig, train_toy
from ..metrics import HEATMAP_METRICS, evaluate_dataset, plcc, srcc
from ..parsing import parse_response
from ..rewards import grounding_reward_single, heatmap_reward, reward_report, score_reward
from ..verifier import SelectionPolicy, aggregate, rank_candidates
from . import schemas

SERVICE_NAME = "imgcritic"


def create_app() -> FastAPI:
    app = FastAPI(title=SERVICE_NAME, version=__version__)

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/version", response_model=schemas.VersionResponse)
    def version():
        return schemas.VersionResponse(name=SERVICE_NAME, version=__version__)

    @app.post("/rewards/score", response_model=schemas.ValueResponse)
    def rewards_score(req: schemas.ScoreRewardRequest):
        value = score_reward(req.prediction.to_scores(), req.ground_truth.to_scores())
        return schemas.ValueResponse(value=value)

    @app.post("/rewards/heatmap", response_model=schemas.ValueResponse)
    def rewards_heatmap(req: schemas.HeatmapRewardRequest):
        value = heatmap_reward(
            req.prediction_artifact.to_heatmap(),
            req.ground_truth_artifact.to_heatmap(),
            req.prediction_misalignment.to_heatmap(),
            req.ground_truth_misalignment.to_heatmap(),
        )
        return schemas.ValueResponse(value=value)

    def _grounding(req: schemas.GroundingRequest) -> schemas.GroundingResponse:
        art_h = req.artifact_heatmap.to_heatmap() if req.artifact_heatmap else Heatmap.blank(1, 1)
        mis_h = (
            req.misalignment_heatmap.to_heatmap()
            if req.misalignment_heatmap
            else Heatmap.blank(1, 1)
        )
        art = grounding_reward_single(
            art_h, [BoundingBox(*b) for b in req.artifact_boxes], req.blank_threshold
        )
        mis = grounding_reward_single(
            mis_h, [BoundingBox(*b) for b in req.misalignment_boxes], req.blank_threshold
        )
        return schemas.GroundingResponse(
            artifact=schemas.GroundingBreakdownModel(**art.as_dict()),
            misalignment=schemas.GroundingBreakdownModel(**mis.as_dict()),
            value=(art.combined + mis.combined) / 2.0,
        )

    @app.post("/rewards/grounding", response_model=schemas.GroundingResponse)
    def rewards_grounding(req: schemas.GroundingRequest):
        return _grounding(req)

    def _reward_report_model(report: dict) -> schemas.RewardReport:
        return schemas.RewardReport(
            id=report["id"],
            grounding=schemas.GroundingResponse(
                artifact=schemas.GroundingBreakdownModel(**report["grounding"]["artifact"]),
                misalignment=schemas.GroundingBreakdownModel(
                    **report["grounding"]["misalignment"]
                ),
                value=report["grounding"]["value"],
            ),
            score_reward=report["score_reward"],
            heatmap_reward=report["heatmap_reward"],
            total=report["total"],
        )

    @app.post("/rewards/total", response_model=schemas.RewardReport)
    def rewards_total(req: schemas.RewardPairRequest):
        report = reward_report(
            req.prediction.to_record(), req.ground_truth.to_record(), req.blank_threshold
        )
        return _reward_report_model(report)

    @app.post("/rewards/batch", response_model=list[schemas.RewardReport])
    def rewards_batch(req: schemas.RewardBatchRequest):
        preds = [r.to_record() for r in req.predictions]
        gts = {r.id: r.to_record() for r in req.ground_truth}
        if len(gts) != len(req.ground_truth):
            raise ValueError("duplicate ids in ground truth")
        missing = [p.id for p in preds if p.id not in gts]
        if missing:
            raise ValueError(f"ground truth missing for ids {missing[:5]}")
        return [
            _reward_report_model(reward_report(p, gts[p.id], req.blank_threshold))
            for p in preds
        ]

    @app.post("/metrics/plcc", response_model=schemas.ValueResponse)
    def metrics_plcc(req: schemas.CorrelationRequest):
        return schemas.ValueResponse(value=plcc(req.xs, req.ys))

    @app.post("/metrics/srcc", response_model=schemas.ValueResponse)
    def metrics_srcc(req: schemas.CorrelationRequest):
        return schemas.ValueResponse(value=srcc(req.xs, req.ys))

    @app.post("/metrics/heatmap", response_model=schemas.ValueResponse)
    def metrics_heatmap(req: schemas.HeatmapMetricRequest):
        fn = HEATMAP_METRICS[req.metric]
        pred = req.prediction.to_heatmap()
        gt = req.ground_truth.to_heatmap()
        if req.metric in ("nss", "auc_judd"):
            value = fn(pred, gt, req.fixation_threshold)
        else:
            value = fn(pred, gt)
        return schemas.ValueResponse(value=value)

    @app.post("/metrics/evaluate", response_model=schemas.MetricReportModel)
    def metrics_evaluate(req: schemas.MetricsRequest):
        report = evaluate_dataset(
            [r.to_record() for r in req.predictions],
            [r.to_record() for r in req.ground_truth],
            fixation_threshold=req.fixation_threshold,
            blank_threshold=req.blank_threshold,
        )
        return schemas.MetricReportModel(**report.as_dict())

    @app.post("/parse", response_model=schemas.ParsedResponseModel)
    def parse(req: schemas.ParseRequest):
        parsed = parse_response(req.text, strict=req.strict)
        return schemas.ParsedResponseModel(
            think_text=parsed.think_text,
            proposed_regions=[tuple(b.as_list()) for b in parsed.proposed_regions],
            scores=schemas.ScoreModel.from_scores(parsed.scores),
            misalignment_locations=[tuple(b.as_list()) for b in parsed.misalignment_locations],
            artifact_locations=[tuple(b.as_list()) for b in parsed.artifact_locations],
        )

    @app.post("/select", response_model=schemas.SelectResponse)
    def select(req: schemas.SelectRequest):
        policy = (
            SelectionPolicy(weights=req.weights) if req.weights is not None else SelectionPolicy()
        )
        candidates = [c.to_scores() for c in req.candidates]
        ranking = rank_candidates(candidates, policy)
        return schemas.SelectResponse(
            best_index=ranking[0],
            ranking=ranking,
            aggregates=[aggregate(c, policy) for c in candidates],
        )

    @app.post("/grpo/demo", response_model=schemas.GrpoDemoResponse)
    def grpo_demo(req: schemas.GrpoDemoRequest):
        config = TrainConfig(
            width=req.width,
            height=req.height,
            num_steps=req.num_steps,
            group_size=req.group_size,
            iterations=req.iterations,
            learning_rate=req.learning_rate,
            epsilon=req.epsilon,
            sigma=req.sigma,
            sigma_floor=req.sigma_floor,
            seed=req.seed,
            condition=req.condition,
            mode=req.mode,
            kl_beta=req.kl_beta,
        )
        result = train_toy(config)
        return schemas.GrpoDemoResponse(
            curve=result.curve,
            final_region_mse=result.region_mse,
            condition=result.condition,
            mode=result.mode,
            final_mean_map=[list(map(float, row)) for row in result.final_mean_map],
        )

    return app


app = create_app()
