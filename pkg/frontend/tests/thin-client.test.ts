import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api";
import { Console } from "../src/controller";
import { ViewState } from "../src/state";
import type { Geometry, PlanDoc, RewardDoc } from "../src/types";

const geometry: Geometry = {
  width: 3,
  height: 2,
  resolution_m: 1,
  origin_x_m: 0,
  origin_y_m: 0,
};

// a wire mock: every displayed value must come back from here untouched
function mockApi(): ApiClient {
  const reward: RewardDoc = {
    model_id: "m",
    geometry,
    values: [
      [1.5, 2.5, 3.5],
      [4.5, 5.5, 6.5],
    ],
  };
  const plan: PlanDoc = {
    id: "traj-ioc-0001",
    provenance: "ioc",
    points: [
      [0.5, 0.5],
      [1.5, 1.5],
    ],
    length_m: Math.SQRT2,
  };
  const api = Object.create(ApiClient.prototype) as ApiClient;
  Object.assign(api, {
    baseUrl: "mock://",
    getEnvironment: async () => ({
      id: "env",
      geometry,
      version: 0,
      layers: ["road"],
      zods: [],
    }),
    getLayer: async (_e: string, kind: string) => ({
      kind,
      geometry,
      cells: [
        [1, 1, 1],
        [0, 0, 0],
      ],
    }),
    getReward: async () => reward,
    plan: async () => plan,
    __reward: reward,
    __plan: plan,
  });
  return api;
}

describe("thin-client contract", () => {
  it("displays reward matrices and plans exactly as served", async () => {
    const api = mockApi() as ApiClient & { __reward: RewardDoc; __plan: PlanDoc };
    const state = new ViewState();
    const ui = new Console(api, state);
    await ui.loadEnvironment("env");
    await ui.selectModel("m");
    // the very objects from the wire, no local recomputation or copying
    expect(ui.reward).toBe(api.__reward);
    state.waypoints = { from: [0.5, 0.5], to: [1.5, 1.5] };
    const plan = await ui.replan();
    expect(plan).toBe(api.__plan);
    expect(ui.plan).toBe(api.__plan);
  });

  it("keeps committed demonstrations across mode changes mid-session", async () => {
    const api = mockApi();
    const state = new ViewState();
    new Console(api, state);
    state.recordCommitted("demo-0001");
    state.enterMode("demonstrate");
    state.beginStroke();
    state.addPoint([1, 1]);
    state.enterMode("place-zod");
    state.enterMode("inspect");
    expect(state.committed).toEqual(["demo-0001"]);
    expect(state.pending).toHaveLength(1);
  });
});
