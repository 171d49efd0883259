import { ApiClient, ApiError } from "./api.js";
import { ViewState } from "./state.js";
import type {
  EnvironmentInfo,
  LayerDoc,
  PlanDoc,
  Point,
  RewardDoc,
  ZodDef,
} from "./types.js";

export interface RetrainResult {
  status: string;
  reward: RewardDoc | null;
  plan: PlanDoc | null;
}

/**
 * Orchestrates the on-line loop against the service. The console holds only
 * server responses: layers, reward matrices, plans and metrics are never
 * recomputed locally.
 */
export class Console {
  environment: EnvironmentInfo | null = null;
  layers: Record<string, LayerDoc> = {};
  reward: RewardDoc | null = null;
  plan: PlanDoc | null = null;

  constructor(
    readonly api: ApiClient,
    readonly state: ViewState,
  ) {}

  async loadEnvironment(envId: string): Promise<void> {
    this.environment = await this.api.getEnvironment(envId);
    this.state.environmentId = envId;
    this.layers = {};
    for (const kind of this.environment.layers) {
      this.layers[kind] = await this.api.getLayer(envId, kind);
    }
    if (this.state.selectedModel) {
      this.reward = await this.api.getReward(envId, this.state.selectedModel);
    }
  }

  async selectModel(modelId: string): Promise<void> {
    this.state.selectedModel = modelId;
    if (this.state.environmentId) {
      this.reward = await this.api.getReward(this.state.environmentId, modelId);
    }
  }

  async refreshLayer(kind: string): Promise<void> {
    if (!this.state.environmentId) return;
    this.layers[kind] = await this.api.getLayer(this.state.environmentId, kind);
  }

  /** Add a zone of danger; the server re-rasterizes the avoidance layer. */
  async placeZod(zod: ZodDef): Promise<void> {
    if (!this.environment) throw new Error("no environment loaded");
    const existing = this.environment.zods;
    this.environment = {
      ...this.environment,
      ...(await this.api.putZods(this.environment.id, [...existing, zod])),
      geometry: this.environment.geometry,
      layers: this.environment.layers,
    };
    await this.refreshLayer("avoidance");
  }

  /** Commit the buffered polyline as a demonstration. */
  async commitDemonstration(): Promise<string> {
    if (!this.state.environmentId) throw new Error("no environment loaded");
    const points = this.state.takePending();
    try {
      const ack = await this.api.submitDemonstration(
        this.state.environmentId,
        points,
      );
      this.state.recordCommitted(ack.id);
      this.state.lastError = null;
      return ack.id;
    } catch (e) {
      // surface the server's reason and restore the stroke so the operator
      // can adjust it instead of redrawing from scratch
      if (e instanceof ApiError) {
        this.state.lastError = e.message;
        this.state.beginStroke();
        for (const p of points) this.state.addPoint(p);
      }
      throw e;
    }
  }

  async replan(): Promise<PlanDoc | null> {
    if (
      !this.state.environmentId ||
      !this.state.selectedModel ||
      !this.state.waypoints
    ) {
      return null;
    }
    this.plan = await this.api.plan(
      this.state.environmentId,
      this.state.waypoints.from,
      this.state.waypoints.to,
      { modelId: this.state.selectedModel },
    );
    return this.plan;
  }

  /**
   * Launch a warm-start retrain over the committed demonstrations, stream
   * progress, and on completion refresh the reward heatmap and the active
   * plan. A failed or cancelled job leaves the previous model (and so the
   * previous heatmap) active.
   */
  async retrain(budgetS = 30): Promise<RetrainResult> {
    if (!this.state.selectedModel) throw new Error("no model selected");
    const job = await this.api.submitTrainingJob({
      model_id: this.state.selectedModel,
      demo_ids: [...this.state.committed],
      budget_s: budgetS,
    });
    this.state.jobStarted(job, budgetS);
    let status = job.status;
    for await (const ev of this.api.streamJobEvents(job.id)) {
      if ("status" in ev) {
        status = ev.status;
      } else {
        this.state.updateProgress(ev);
      }
    }
    this.state.jobFinished(status);
    if (status !== "done") {
      return { status, reward: this.reward, plan: this.plan };
    }
    if (this.state.environmentId) {
      this.reward = await this.api.getReward(
        this.state.environmentId,
        this.state.selectedModel,
      );
    }
    const plan = await this.replan();
    return { status, reward: this.reward, plan };
  }

  /** Draw, commit, and retrain in one gesture (budget defaults to 30 s). */
  async demonstrateAndRetrain(
    polyline: Point[],
    budgetS = 30,
  ): Promise<RetrainResult> {
    this.state.enterMode("demonstrate");
    this.state.beginStroke();
    for (const p of polyline) this.state.addPoint(p);
    await this.commitDemonstration();
    return this.retrain(budgetS);
  }
}
