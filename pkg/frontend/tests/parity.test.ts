/**
 * Bindings parity: every bound function must return results bit-identical
 * to the native library, recorded in fixtures/corpus.json by
 * scripts/generate_binding_fixtures.py.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { beforeAll, describe, expect, it } from "vitest";

import {
  bindService,
  ServiceError,
  VersionMismatchError,
  type BoundFunctions,
  type FlatBoxes,
  type HeatmapInput,
  type HeatmapMetric,
  type RecordInput,
  type Scores,
} from "../src/index.js";
import { SERVICE_URL } from "./config.js";

interface WireHeatmap {
  width: number;
  height: number;
  values: number[];
}

interface WireRecord {
  id: string;
  scores: Scores;
  artifact_heatmap: WireHeatmap | null;
  misalignment_heatmap: WireHeatmap | null;
  artifact_boxes: number[][];
  misalignment_boxes: number[][];
}

const here = dirname(fileURLToPath(import.meta.url));
const corpus = JSON.parse(readFileSync(join(here, "..", "fixtures", "corpus.json"), "utf-8"));

function toHeatmap(wire: WireHeatmap | null): HeatmapInput | null {
  if (!wire) {
    return null;
  }
  return { values: Float64Array.from(wire.values), width: wire.width, height: wire.height };
}

function toFlatBoxes(boxes: number[][]): FlatBoxes {
  return Float64Array.from(boxes.flat());
}

function toRecord(wire: WireRecord): RecordInput {
  return {
    id: wire.id,
    scores: wire.scores,
    artifact_heatmap: toHeatmap(wire.artifact_heatmap),
    misalignment_heatmap: toHeatmap(wire.misalignment_heatmap),
    artifact_boxes: toFlatBoxes(wire.artifact_boxes),
    misalignment_boxes: toFlatBoxes(wire.misalignment_boxes),
  };
}

/** Bit-exact structural comparison (numbers must be the same double). */
function assertSame(actual: unknown, expected: unknown, path = "$"): void {
  if (typeof expected === "number") {
    expect(typeof actual, path).toBe("number");
    if (actual !== expected) {
      throw new Error(`${path}: ${actual} !== ${expected}`);
    }
    return;
  }
  if (Array.isArray(expected)) {
    expect(Array.isArray(actual), path).toBe(true);
    const arr = actual as unknown[];
    expect(arr.length, path).toBe(expected.length);
    expected.forEach((item, i) => assertSame(arr[i], item, `${path}[${i}]`));
    return;
  }
  if (expected !== null && typeof expected === "object") {
    expect(actual, path).toBeTypeOf("object");
    const obj = actual as Record<string, unknown>;
    for (const key of Object.keys(expected)) {
      assertSame(obj[key], (expected as Record<string, unknown>)[key], `${path}.${key}`);
    }
    return;
  }
  expect(actual, path).toBe(expected);
}

let api: BoundFunctions;

beforeAll(async () => {
  api = await bindService(SERVICE_URL);
});

describe("bindService", () => {
  it("reports the service identity", () => {
    expect(api.info.name).toBe("imgcritic");
    expect(api.info.version).toBe(corpus.version);
  });

  it("rejects a version mismatch at bind time", async () => {
    await expect(bindService(SERVICE_URL, { expectedVersion: "9.9.9" })).rejects.toBeInstanceOf(
      VersionMismatchError,
    );
  });

  it("surfaces native diagnostics as ServiceError", async () => {
    const good: Scores = { alignment: 0.5, aesthetics: 0.5, plausibility: 0.5, overall: 0.5 };
    const bad = { ...good, overall: 1.7 };
    const err = await api.scoreReward(bad, good).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect((err as ServiceError).code).toBe(422);
    expect((err as ServiceError).message.length).toBeGreaterThan(0);
  });
});

describe("parity with the native library", () => {
  it("scoreReward", async () => {
    for (const fixture of corpus.score_reward) {
      const value = await api.scoreReward(fixture.prediction, fixture.ground_truth);
      assertSame(value, fixture.expected);
    }
  });

  it("heatmapReward", async () => {
    for (const fixture of corpus.heatmap_reward) {
      const value = await api.heatmapReward(
        toHeatmap(fixture.prediction_artifact)!,
        toHeatmap(fixture.ground_truth_artifact)!,
        toHeatmap(fixture.prediction_misalignment)!,
        toHeatmap(fixture.ground_truth_misalignment)!,
      );
      assertSame(value, fixture.expected);
    }
  });

  it("groundingReward", async () => {
    for (const fixture of corpus.grounding_reward) {
      const result = await api.groundingReward(
        toHeatmap(fixture.artifact_heatmap),
        toHeatmap(fixture.misalignment_heatmap),
        toFlatBoxes(fixture.artifact_boxes),
        toFlatBoxes(fixture.misalignment_boxes),
      );
      assertSame(result, fixture.expected);
    }
  });

  it("totalReward", async () => {
    for (const fixture of corpus.total_reward) {
      const report = await api.totalReward(
        toRecord(fixture.prediction),
        toRecord(fixture.ground_truth),
      );
      assertSame(report, fixture.expected);
    }
  });

  it("plcc", async () => {
    for (const fixture of corpus.plcc) {
      assertSame(await api.plcc(fixture.xs, fixture.ys), fixture.expected);
    }
  });

  it("srcc", async () => {
    for (const fixture of corpus.srcc) {
      assertSame(await api.srcc(fixture.xs, fixture.ys), fixture.expected);
    }
  });

  it("heatmap metrics", async () => {
    for (const fixture of corpus.heatmap_metrics) {
      const value = await api.heatmapMetric(
        fixture.metric as HeatmapMetric,
        toHeatmap(fixture.prediction)!,
        toHeatmap(fixture.ground_truth)!,
        fixture.fixation_threshold,
      );
      assertSame(value, fixture.expected, `$.${fixture.metric}`);
    }
  });

  it("parseResponse", async () => {
    for (const fixture of corpus.parse_response) {
      const parsed = await api.parseResponse(fixture.text, fixture.strict);
      assertSame(parsed, fixture.expected);
    }
  });

  it("selectBest", async () => {
    for (const fixture of corpus.select_best) {
      const result = await api.selectBest(fixture.candidates, fixture.weights);
      assertSame(result, fixture.expected);
    }
  });
});

describe("input validation", () => {
  it("rejects mismatched heatmap buffers client-side", () => {
    const bad: HeatmapInput = { values: new Float64Array(3), width: 2, height: 2 };
    expect(() =>
      api.heatmapMetric("mse", bad, bad),
    ).rejects.toThrowError(/buffer length/);
  });

  it("rejects flat box arrays with stray coordinates", async () => {
    await expect(
      api.groundingReward(null, null, new Float64Array(5), new Float64Array(0)),
    ).rejects.toThrowError(/multiple of 4/);
  });
});
