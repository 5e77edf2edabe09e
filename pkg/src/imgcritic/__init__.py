"""imgcritic: reward engine and evaluation toolkit for image flaw diagnosis."""

__version__ = "0.1.0"

from .core import (
    BoundingBox,
    EvaluationRecord,
    Heatmap,
    ScoreVector,
    box_area,
    box_iou,
    clamp_box,
    mass_in_region,
    total_mass,
)
from .denseflow import (
    DenseRewardField,
    RewardField,
    ToyFlowPolicy,
    TrainConfig,
    Trajectory,
    dense_advantages,
    denseflow_objective,
    flow_grpo_objective,
    image_ratio,
    pixel_surrogate_value,
    sample_group,
    train_toy,
)
from .formats import load_heatmap, load_manifest, save_heatmap
from .grpo import SurrogateSample, clipped_surrogate, group_advantages, kl_estimate, rft_objective
from .metrics import (
    MetricReport,
    evaluate_dataset,
    heatmap_auc_judd,
    heatmap_cc,
    heatmap_kld,
    heatmap_mse,
    heatmap_nss,
    heatmap_sim,
    plcc,
    srcc,
)
from .parsing import ParsedResponse, ParseError, parse_region_list, parse_response, render_response
from .rewards import (
    GroundingBreakdown,
    compactness,
    completeness,
    grounding_reward,
    grounding_reward_single,
    heatmap_reward,
    score_reward,
    total_reward,
    uniqueness,
)
from .verifier import SelectionPolicy, aggregate, rank_candidates, select_best
