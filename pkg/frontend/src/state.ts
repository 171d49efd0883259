import type { JobSnapshot, Point, ProgressEvent } from "./types.js";

export type Mode = "inspect" | "demonstrate" | "place-zod" | "set-waypoints";

export interface LayerToggles {
  obstacle: boolean;
  road: boolean;
  grass: boolean;
  avoidance: boolean;
  reward: boolean;
  trajectories: boolean;
}

const DEFAULT_TOGGLES: LayerToggles = {
  obstacle: true,
  road: true,
  grass: true,
  avoidance: true,
  reward: true,
  trajectories: true,
};

/**
 * Client-side view state. Demonstrations are buffered locally until the
 * operator explicitly commits them (the dual-trigger analog); at most one
 * polyline is ever pending, and once a demonstration is committed to the
 * server no mode change can lose it.
 */
export class ViewState {
  mode: Mode = "inspect";
  environmentId: string | null = null;
  selectedModel: string | null = null;
  toggles: LayerToggles = { ...DEFAULT_TOGGLES };
  waypoints: { from: Point; to: Point } | null = null;
  lastError: string | null = null;

  private pendingPolyline: Point[] | null = null;
  private committedDemoIds: string[] = [];

  jobProgress: ProgressEvent | null = null;
  jobStatus: string | null = null;
  budgetS: number | null = null;

  enterMode(mode: Mode): void {
    // a pending stroke survives mode changes; only an explicit discard or
    // commit clears it
    this.mode = mode;
  }

  toggleLayer(name: keyof LayerToggles): void {
    this.toggles[name] = !this.toggles[name];
  }

  get pending(): readonly Point[] | null {
    return this.pendingPolyline;
  }

  get committed(): readonly string[] {
    return this.committedDemoIds;
  }

  beginStroke(): void {
    if (this.mode !== "demonstrate") {
      throw new Error("strokes can only start in demonstrate mode");
    }
    if (this.pendingPolyline !== null) {
      throw new Error("a demonstration is already pending; commit or discard it");
    }
    this.pendingPolyline = [];
  }

  addPoint(p: Point): void {
    if (this.pendingPolyline === null) {
      throw new Error("no stroke in progress");
    }
    this.pendingPolyline.push(p);
  }

  discardPending(): void {
    this.pendingPolyline = null;
  }

  /** Hand the buffered polyline to the caller for submission. */
  takePending(): Point[] {
    if (this.pendingPolyline === null || this.pendingPolyline.length < 2) {
      throw new Error("nothing committable: need a pending polyline of >= 2 points");
    }
    const points = this.pendingPolyline;
    this.pendingPolyline = null;
    return points;
  }

  recordCommitted(demoId: string): void {
    this.committedDemoIds.push(demoId);
  }

  updateProgress(ev: ProgressEvent): void {
    this.jobProgress = ev;
  }

  jobStarted(job: JobSnapshot, budgetS: number | null): void {
    this.jobStatus = job.status;
    this.jobProgress = null;
    this.budgetS = budgetS;
  }

  jobFinished(status: string): void {
    this.jobStatus = status;
  }

  /** Elapsed fraction of the training budget, for the progress display. */
  budgetFraction(): number | null {
    if (this.budgetS === null || this.jobProgress === null) return null;
    return Math.min(1, this.jobProgress.elapsed_s / this.budgetS);
  }
}
