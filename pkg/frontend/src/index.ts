export {
  bindService,
  ServiceError,
  VersionMismatchError,
  SERVICE_NAME,
  SUPPORTED_VERSION,
} from "./client.js";
export type {
  BindOptions,
} from "./client.js";
export type {
  BoundFunctions,
  FlatBoxes,
  GroundingBreakdown,
  GroundingResult,
  HeatmapInput,
  HeatmapMetric,
  ParsedResponse,
  RecordInput,
  RewardReport,
  Scores,
  SelectResult,
  ServiceInfo,
} from "./types.js";
