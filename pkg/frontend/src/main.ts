import { ApiClient } from "./api.js";
import { Console } from "./controller.js";
import { ViewState, type Mode } from "./state.js";
import {
  DEMO_COLOR,
  GT_COLOR,
  PLAN_COLOR,
  drawPolyline,
  drawRewardHeatmap,
  drawTerrain,
  drawZods,
  viewportFor,
  worldToCanvas,
  type Viewport,
} from "./render.js";
import type { Point } from "./types.js";

const api = new ApiClient(
  (window as unknown as { NAVLEARN_URL?: string }).NAVLEARN_URL ??
    "http://127.0.0.1:8765",
);
const state = new ViewState();
const ui = new Console(api, state);

const canvas = document.getElementById("map") as HTMLCanvasElement;
const statusEl = document.getElementById("status")!;
const progressEl = document.getElementById("progress") as HTMLProgressElement;
let vp: Viewport | null = null;

function canvasToWorld(p: Point): Point {
  const g = ui.environment!.geometry;
  const rect = canvas.getBoundingClientRect();
  const x = ((p[0] - rect.left) / vp!.scale) * g.resolution_m + g.origin_x_m;
  const y =
    ((vp!.heightPx - (p[1] - rect.top)) / vp!.scale) * g.resolution_m +
    g.origin_y_m;
  return [x, y];
}

function redraw(): void {
  if (!ui.environment || !vp) return;
  const ctx = canvas.getContext("2d")!;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  drawTerrain(ctx, ui.layers, state.toggles, vp);
  if (state.toggles.reward && ui.reward) {
    drawRewardHeatmap(ctx, ui.reward, vp);
  }
  drawZods(ctx, ui.environment.geometry, vp, ui.environment.zods);
  if (state.toggles.trajectories) {
    if (ui.plan) {
      drawPolyline(ctx, ui.environment.geometry, vp, ui.plan.points, PLAN_COLOR, 3);
    }
    if (state.pending) {
      drawPolyline(ctx, ui.environment.geometry, vp, state.pending, DEMO_COLOR, 2);
    }
    if (state.waypoints) {
      drawPolyline(
        ctx,
        ui.environment.geometry,
        vp,
        [state.waypoints.from, state.waypoints.to],
        GT_COLOR,
        1,
      );
    }
  }
}

function setStatus(text: string): void {
  statusEl.textContent = text;
}

async function boot(): Promise<void> {
  const { environments } = await api.listEnvironments();
  if (environments.length === 0) {
    setStatus("no environments in the workspace");
    return;
  }
  const select = document.getElementById("env-select") as HTMLSelectElement;
  for (const env of environments) {
    const opt = document.createElement("option");
    opt.value = env.id;
    opt.textContent = env.id;
    select.appendChild(opt);
  }
  select.onchange = () => void switchEnv(select.value);
  await switchEnv(environments[0].id);
}

async function switchEnv(id: string): Promise<void> {
  setStatus(`loading ${id}...`);
  await ui.loadEnvironment(id);
  vp = viewportFor(ui.environment!.geometry, canvas.width);
  canvas.height = vp.heightPx;
  setStatus(`environment ${id}`);
  redraw();
}

for (const mode of ["inspect", "demonstrate", "place-zod", "set-waypoints"]) {
  const btn = document.getElementById(`mode-${mode}`);
  if (btn) {
    btn.addEventListener("click", () => {
      state.enterMode(mode as Mode);
      setStatus(`mode: ${mode}`);
    });
  }
}

for (const name of [
  "obstacle",
  "road",
  "grass",
  "avoidance",
  "reward",
  "trajectories",
] as const) {
  const box = document.getElementById(`toggle-${name}`) as HTMLInputElement | null;
  if (box) {
    box.addEventListener("change", () => {
      state.toggleLayer(name);
      redraw();
    });
  }
}

let drawing = false;
let pendingWaypointStart: Point | null = null;

canvas.addEventListener("mousedown", (ev) => {
  if (!ui.environment) return;
  const world = canvasToWorld([ev.clientX, ev.clientY]);
  if (state.mode === "demonstrate") {
    if (state.pending === null) state.beginStroke();
    state.addPoint(world);
    drawing = true;
  } else if (state.mode === "place-zod") {
    void ui
      .placeZod({ center_x_m: world[0], center_y_m: world[1], radius_m: 2.5 })
      .then(redraw);
  } else if (state.mode === "set-waypoints") {
    if (pendingWaypointStart === null) {
      pendingWaypointStart = world;
      setStatus("waypoint start set; click the goal");
    } else {
      state.waypoints = { from: pendingWaypointStart, to: world };
      pendingWaypointStart = null;
      void ui.replan().then(redraw);
    }
  }
});

canvas.addEventListener("mousemove", (ev) => {
  if (!drawing || state.mode !== "demonstrate") return;
  state.addPoint(canvasToWorld([ev.clientX, ev.clientY]));
  redraw();
});

canvas.addEventListener("mouseup", () => {
  drawing = false;
});

document.getElementById("commit-demo")?.addEventListener("click", () => {
  void ui
    .commitDemonstration()
    .then((id) => setStatus(`committed ${id} (${state.committed.length} total)`))
    .catch(() => setStatus(`rejected: ${state.lastError}`))
    .then(redraw);
});

document.getElementById("discard-demo")?.addEventListener("click", () => {
  state.discardPending();
  setStatus("stroke discarded");
  redraw();
});

document.getElementById("retrain")?.addEventListener("click", () => {
  setStatus("training (30 s budget)...");
  const timer = window.setInterval(() => {
    const frac = state.budgetFraction();
    if (frac !== null) progressEl.value = frac;
    if (state.jobProgress) {
      setStatus(
        `training: iteration ${state.jobProgress.iteration}, ` +
          `${state.jobProgress.elapsed_s.toFixed(1)}s / ${state.budgetS}s`,
      );
    }
  }, 250);
  void ui
    .retrain(30)
    .then((result) => {
      setStatus(`training ${result.status}; heatmap refreshed`);
      redraw();
    })
    .catch((e) => setStatus(`training failed: ${e}`))
    .finally(() => window.clearInterval(timer));
});

const modelSelect = document.getElementById("model-select") as HTMLSelectElement | null;
modelSelect?.addEventListener("change", () => {
  void ui.selectModel(modelSelect.value).then(redraw);
});

void boot();

export { api, state, ui, canvasToWorld, worldToCanvas };
