import type {
  DemoAck,
  EnvironmentInfo,
  JobSnapshot,
  JobTermination,
  LayerDoc,
  MhdDoc,
  ModelDoc,
  PlanDoc,
  Point,
  ProgressEvent,
  RewardDoc,
  ZodDef,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly slug: string,
    readonly detail: string,
  ) {
    super(`${slug}: ${detail}`);
  }
}

async function parseError(res: Response): Promise<never> {
  let slug = "error";
  let detail = res.statusText;
  try {
    const body = await res.json();
    slug = body.error ?? slug;
    detail = body.detail ?? detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, slug, detail);
}

export interface TrainRequest {
  model_id: string;
  demo_ids: string[];
  schema?: string;
  init?: "auto" | "warm" | "random";
  budget_s?: number | null;
  max_iterations?: number;
  tolerance?: number;
  seed?: number;
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!res.ok) await parseError(res);
    return (await res.json()) as T;
  }

  listEnvironments(): Promise<{ environments: EnvironmentInfo[] }> {
    return this.request("/environments");
  }

  getEnvironment(id: string): Promise<EnvironmentInfo> {
    return this.request(`/environments/${id}`);
  }

  getLayer(envId: string, kind: string): Promise<LayerDoc> {
    return this.request(`/environments/${envId}/layers/${kind}`);
  }

  getReward(envId: string, modelId: string): Promise<RewardDoc> {
    return this.request(
      `/environments/${envId}/reward?model_id=${encodeURIComponent(modelId)}`,
    );
  }

  putZods(envId: string, zods: ZodDef[]): Promise<EnvironmentInfo> {
    return this.request(`/environments/${envId}/zods`, {
      method: "PUT",
      body: JSON.stringify({ zods }),
    });
  }

  submitDemonstration(envId: string, points: Point[]): Promise<DemoAck> {
    return this.request("/demonstrations", {
      method: "POST",
      body: JSON.stringify({ environment_id: envId, points }),
    });
  }

  getModel(id: string): Promise<ModelDoc> {
    return this.request(`/models/${id}`);
  }

  submitTrainingJob(req: TrainRequest): Promise<JobSnapshot> {
    return this.request("/training-jobs", {
      method: "POST",
      body: JSON.stringify(req),
    });
  }

  getJob(id: string): Promise<JobSnapshot> {
    return this.request(`/training-jobs/${id}`);
  }

  cancelJob(id: string): Promise<JobSnapshot> {
    return this.request(`/training-jobs/${id}/cancel`, { method: "POST" });
  }

  async *streamJobEvents(
    id: string,
  ): AsyncGenerator<ProgressEvent | JobTermination> {
    const res = await fetch(`${this.baseUrl}/training-jobs/${id}/events`);
    if (!res.ok || res.body === null) await parseError(res);
    const reader = res.body!.getReader();
    const decoder = new TextDecoder();
    let buffer = "";
    while (true) {
      const { done, value } = await reader.read();
      if (done) break;
      buffer += decoder.decode(value, { stream: true });
      let nl;
      while ((nl = buffer.indexOf("\n")) >= 0) {
        const line = buffer.slice(0, nl).trim();
        buffer = buffer.slice(nl + 1);
        if (line) yield JSON.parse(line);
      }
    }
    if (buffer.trim()) yield JSON.parse(buffer);
  }

  plan(
    envId: string,
    from: Point,
    to: Point,
    opts: { modelId?: string; baseline?: boolean } = {},
  ): Promise<PlanDoc> {
    return this.request("/plans", {
      method: "POST",
      body: JSON.stringify({
        environment_id: envId,
        from,
        to,
        model_id: opts.modelId,
        baseline: opts.baseline ?? false,
      }),
    });
  }

  mhd(a: string, b: string): Promise<MhdDoc> {
    return this.request(`/mhd?a=${encodeURIComponent(a)}&b=${encodeURIComponent(b)}`);
  }
}
