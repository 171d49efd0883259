// The scripted operator session against the live service: draw four
// demonstrations around a freshly placed danger zone, retrain on a 30 s
// budget, and verify from server responses alone that the heatmap changed
// and the replanned path clears the zone.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { Console } from "../src/controller";
import { ViewState } from "../src/state";
import type { Geometry, Point, ZodDef } from "../src/types";

interface SeedData {
  environment_id: string;
  model_id: string;
  zod: ZodDef;
  strokes: Point[][];
  waypoints: { from: Point; to: Point };
}

let api: ApiClient;
let seed: SeedData;

beforeAll(() => {
  api = new ApiClient(process.env.NAVLEARN_TEST_URL!);
  seed = JSON.parse(
    readFileSync(join(process.env.NAVLEARN_TEST_WORKSPACE!, "seed-data.json"), "utf-8"),
  ) as SeedData;
});

function cellOf(geometry: Geometry, p: Point): [number, number] {
  return [
    Math.floor((p[0] - geometry.origin_x_m) / geometry.resolution_m),
    Math.floor((p[1] - geometry.origin_y_m) / geometry.resolution_m),
  ];
}

function zoneHits(geometry: Geometry, avoidance: number[][], points: Point[]): number {
  const cells = new Set(points.map((p) => cellOf(geometry, p).join(",")));
  let hits = 0;
  for (const key of cells) {
    const [x, y] = key.split(",").map(Number);
    if (avoidance[y]?.[x] === 1) hits += 1;
  }
  return hits;
}

describe("operator round trip", () => {
  it("demonstrates, retrains within budget, and replans around the new zone", async () => {
    const state = new ViewState();
    const ui = new Console(api, state);

    await ui.loadEnvironment(seed.environment_id);
    await ui.selectModel(seed.model_id);
    state.waypoints = seed.waypoints;

    const rewardBefore = ui.reward!;
    const plan0 = await ui.replan();
    expect(plan0).not.toBeNull();

    // place the zone over the active route
    await ui.placeZod(seed.zod);
    const avoidance = ui.layers["avoidance"];
    expect(avoidance.cells.flat().reduce((a, b) => a + b, 0)).toBeGreaterThan(0);
    const geometry = ui.environment!.geometry;
    expect(zoneHits(geometry, avoidance.cells, plan0!.points)).toBeGreaterThan(0);

    // draw the four corrective demonstrations through the console's state
    // machine and commit each one
    state.enterMode("demonstrate");
    for (const stroke of seed.strokes) {
      state.beginStroke();
      for (const p of stroke) state.addPoint(p);
      const id = await ui.commitDemonstration();
      expect(id).toMatch(/^demo-/);
    }
    expect(state.committed).toHaveLength(4);

    // 30 s warm retrain; progress must have streamed
    const t0 = Date.now();
    const result = await ui.retrain(30);
    const wall = (Date.now() - t0) / 1000;
    expect(result.status).toBe("done");
    expect(wall).toBeLessThan(45);
    expect(state.jobProgress).not.toBeNull();
    expect(state.jobProgress!.iteration).toBeGreaterThan(0);

    // heatmap refreshed (server-side values actually moved)
    expect(result.reward).not.toBeNull();
    const flatBefore = rewardBefore.values.flat();
    const flatAfter = result.reward!.values.flat();
    expect(flatAfter.length).toBe(flatBefore.length);
    const maxDelta = Math.max(
      ...flatAfter.map((v, i) => Math.abs(v - flatBefore[i])),
    );
    expect(maxDelta).toBeGreaterThan(1e-6);

    // the replanned path avoids the zone entirely
    expect(result.plan).not.toBeNull();
    expect(zoneHits(geometry, avoidance.cells, result.plan!.points)).toBe(0);

    // and the model now records all eight demonstrations
    const model = await api.getModel(seed.model_id);
    expect(model.training.init_mode).toBe("warm");
    expect(model.training.demo_ids.length).toBe(8);
  }, 180_000);

  it("rejects a demonstration drawn through an obstacle with the server reason", async () => {
    const state = new ViewState();
    const ui = new Console(api, state);
    await ui.loadEnvironment(seed.environment_id);
    state.enterMode("demonstrate");
    state.beginStroke();
    // straight into the southern treeline
    state.addPoint([10.0, 11.0]);
    state.addPoint([10.0, 7.0]);
    await expect(ui.commitDemonstration()).rejects.toThrow(/obstacle/);
    expect(state.lastError).toMatch(/obstacle/);
    // the stroke is restored for the operator to adjust
    expect(state.pending).not.toBeNull();
  });

  it("streams MHD between stored trajectories on request", async () => {
    const a = await api.plan(seed.environment_id, seed.waypoints.from, seed.waypoints.to, {
      modelId: seed.model_id,
    });
    const b = await api.plan(seed.environment_id, seed.waypoints.from, seed.waypoints.to, {
      baseline: true,
    });
    const doc = await api.mhd(a.id, b.id);
    expect(doc.mhd_m).toBeGreaterThanOrEqual(0);
    const self = await api.mhd(a.id, a.id);
    expect(self.mhd_m).toBe(0);
  });
});
