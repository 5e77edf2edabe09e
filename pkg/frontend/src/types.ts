/** Wire-level and calling-convention types for the imgcritic service. */

/** Heatmap passed as a contiguous row-major buffer plus its dimensions. */
export interface HeatmapInput {
  values: Float64Array | readonly number[];
  width: number;
  height: number;
}

/** Boxes travel as a flat float array of length 4k: [x1,y1,x2,y2, x1,...]. */
export type FlatBoxes = Float64Array | readonly number[];

export interface Scores {
  alignment: number;
  aesthetics: number;
  plausibility: number;
  overall: number;
}

export interface GroundingBreakdown {
  completeness: number;
  compactness: number;
  uniqueness: number;
  combined: number;
  edge_case: string;
}

export interface GroundingResult {
  artifact: GroundingBreakdown;
  misalignment: GroundingBreakdown;
  value: number;
}

export interface RecordInput {
  id?: string;
  scores: Scores;
  artifact_heatmap?: HeatmapInput | null;
  misalignment_heatmap?: HeatmapInput | null;
  artifact_boxes?: FlatBoxes;
  misalignment_boxes?: FlatBoxes;
}

export interface RewardReport {
  id: string;
  grounding: GroundingResult;
  score_reward: number;
  heatmap_reward: number;
  total: number;
}

export interface ParsedResponse {
  think_text: string;
  proposed_regions: number[][];
  scores: Scores;
  misalignment_locations: number[][];
  artifact_locations: number[][];
}

export interface SelectResult {
  best_index: number;
  ranking: number[];
  aggregates: number[];
}

export type HeatmapMetric = "mse" | "cc" | "kld" | "sim" | "nss" | "auc_judd";

export interface ServiceInfo {
  name: string;
  version: string;
}

/** The bound function table returned by bindService. */
export interface BoundFunctions {
  info: ServiceInfo;
  scoreReward(prediction: Scores, groundTruth: Scores): Promise<number>;
  heatmapReward(
    predictionArtifact: HeatmapInput,
    groundTruthArtifact: HeatmapInput,
    predictionMisalignment: HeatmapInput,
    groundTruthMisalignment: HeatmapInput,
  ): Promise<number>;
  groundingReward(
    artifactHeatmap: HeatmapInput | null,
    misalignmentHeatmap: HeatmapInput | null,
    artifactBoxes: FlatBoxes,
    misalignmentBoxes: FlatBoxes,
    blankThreshold?: number,
  ): Promise<GroundingResult>;
  totalReward(prediction: RecordInput, groundTruth: RecordInput): Promise<RewardReport>;
  plcc(xs: readonly number[], ys: readonly number[]): Promise<number>;
  srcc(xs: readonly number[], ys: readonly number[]): Promise<number>;
  heatmapMetric(
    metric: HeatmapMetric,
    prediction: HeatmapInput,
    groundTruth: HeatmapInput,
    fixationThreshold?: number,
  ): Promise<number>;
  parseResponse(text: string, strict?: boolean): Promise<ParsedResponse>;
  selectBest(
    candidates: readonly Scores[],
    weights?: readonly [number, number, number, number] | null,
  ): Promise<SelectResult>;
}
