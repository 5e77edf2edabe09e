/**
 * HTTP bindings for the imgcritic service.
 *
 * bindService checks the service's name and version up front, then returns
 * a table of typed wrappers, one per exported function. Wrappers are pure
 * pass-throughs: inputs are serialized to the documented JSON wire format
 * and results come back numerically identical to the native library.
 * Service-side failures surface as ServiceError carrying the HTTP status
 * and the native diagnostic message.
 */

import type {
  BoundFunctions,
  FlatBoxes,
  HeatmapInput,
  HeatmapMetric,
  RecordInput,
  Scores,
  ServiceInfo,
} from "./types.js";

export const SERVICE_NAME = "imgcritic";
export const SUPPORTED_VERSION = "0.1.0";

export class ServiceError extends Error {
  constructor(
    public readonly code: number,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export class VersionMismatchError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "VersionMismatchError";
  }
}

function heatmapWire(h: HeatmapInput): { width: number; height: number; values: number[] } {
  if (h.values.length !== h.width * h.height) {
    throw new Error(
      `heatmap buffer length ${h.values.length} does not match ${h.width}x${h.height}`,
    );
  }
  return { width: h.width, height: h.height, values: Array.from(h.values) };
}

function boxesWire(flat: FlatBoxes): number[][] {
  if (flat.length % 4 !== 0) {
    throw new Error(`flat box array length ${flat.length} is not a multiple of 4`);
  }
  const boxes: number[][] = [];
  for (let i = 0; i < flat.length; i += 4) {
    boxes.push([flat[i], flat[i + 1], flat[i + 2], flat[i + 3]]);
  }
  return boxes;
}

function recordWire(r: RecordInput): Record<string, unknown> {
  return {
    id: r.id ?? "",
    scores: r.scores,
    artifact_heatmap: r.artifact_heatmap ? heatmapWire(r.artifact_heatmap) : null,
    misalignment_heatmap: r.misalignment_heatmap ? heatmapWire(r.misalignment_heatmap) : null,
    artifact_boxes: boxesWire(r.artifact_boxes ?? []),
    misalignment_boxes: boxesWire(r.misalignment_boxes ?? []),
  };
}

async function readError(res: Response): Promise<ServiceError> {
  let detail: unknown;
  try {
    detail = ((await res.json()) as { detail?: unknown }).detail;
  } catch {
    detail = undefined;
  }
  const message =
    typeof detail === "string" ? detail : detail !== undefined ? JSON.stringify(detail) : res.statusText;
  return new ServiceError(res.status, message);
}

export interface BindOptions {
  /** Exact version string the client expects; defaults to SUPPORTED_VERSION. */
  expectedVersion?: string;
  fetchImpl?: typeof fetch;
}

export async function bindService(
  baseUrl: string,
  options: BindOptions = {},
): Promise<BoundFunctions> {
  const url = baseUrl.replace(/\/+$/, "");
  const fetchImpl = options.fetchImpl ?? fetch;

  async function post<T>(path: string, body: unknown): Promise<T> {
    const res = await fetchImpl(url + path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      throw await readError(res);
    }
    return (await res.json()) as T;
  }

  const versionRes = await fetchImpl(url + "/version");
  if (!versionRes.ok) {
    throw await readError(versionRes);
  }
  const info = (await versionRes.json()) as ServiceInfo;
  const expected = options.expectedVersion ?? SUPPORTED_VERSION;
  if (info.name !== SERVICE_NAME || info.version !== expected) {
    throw new VersionMismatchError(
      `service says ${info.name}@${info.version}, client expects ${SERVICE_NAME}@${expected}`,
    );
  }

  return {
    info,

    async scoreReward(prediction: Scores, groundTruth: Scores): Promise<number> {
      const r = await post<{ value: number }>("/rewards/score", {
        prediction,
        ground_truth: groundTruth,
      });
      return r.value;
    },

    async heatmapReward(predArt, gtArt, predMis, gtMis): Promise<number> {
      const r = await post<{ value: number }>("/rewards/heatmap", {
        prediction_artifact: heatmapWire(predArt),
        ground_truth_artifact: heatmapWire(gtArt),
        prediction_misalignment: heatmapWire(predMis),
        ground_truth_misalignment: heatmapWire(gtMis),
      });
      return r.value;
    },

    async groundingReward(artH, misH, artBoxes, misBoxes, blankThreshold = 0) {
      return post("/rewards/grounding", {
        artifact_heatmap: artH ? heatmapWire(artH) : null,
        misalignment_heatmap: misH ? heatmapWire(misH) : null,
        artifact_boxes: boxesWire(artBoxes),
        misalignment_boxes: boxesWire(misBoxes),
        blank_threshold: blankThreshold,
      });
    },

    async totalReward(prediction, groundTruth) {
      return post("/rewards/total", {
        prediction: recordWire(prediction),
        ground_truth: recordWire(groundTruth),
      });
    },

    async plcc(xs, ys): Promise<number> {
      const r = await post<{ value: number }>("/metrics/plcc", { xs, ys });
      return r.value;
    },

    async srcc(xs, ys): Promise<number> {
      const r = await post<{ value: number }>("/metrics/srcc", { xs, ys });
      return r.value;
    },

    async heatmapMetric(
      metric: HeatmapMetric,
      prediction,
      groundTruth,
      fixationThreshold = 0,
    ): Promise<number> {
      const r = await post<{ value: number }>("/metrics/heatmap", {
        metric,
        prediction: heatmapWire(prediction),
        ground_truth: heatmapWire(groundTruth),
        fixation_threshold: fixationThreshold,
      });
      return r.value;
    },

    async parseResponse(text: string, strict = false) {
      return post("/parse", { text, strict });
    },

    async selectBest(candidates, weights = null) {
      const body: Record<string, unknown> = { candidates };
      if (weights) {
        body.weights = weights;
      }
      return post("/select", body);
    },
  };
}
