// Wire types mirroring the service's JSON bodies. The console never derives
// these values itself; everything displayed comes from the server.

export type Point = [number, number];

export interface Geometry {
  width: number;
  height: number;
  resolution_m: number;
  origin_x_m: number;
  origin_y_m: number;
}

export interface ZodDef {
  center_x_m: number;
  center_y_m: number;
  radius_m: number;
}

export interface EnvironmentInfo {
  id: string;
  geometry: Geometry;
  version: number;
  layers: string[];
  zods: ZodDef[];
}

export interface LayerDoc {
  kind: string;
  geometry: Geometry;
  cells: number[][];
  unknown?: number[][];
}

export interface RewardDoc {
  model_id: string;
  geometry: Geometry;
  values: number[][];
}

export interface TrainingDoc {
  demo_ids: string[];
  iterations: number;
  final_grad_norm: number;
  init_mode: string;
  stop_reason: string;
}

export interface ModelDoc {
  id: string;
  schema: [string, number][];
  theta: number[];
  training: TrainingDoc;
}

export interface JobSnapshot {
  id: string;
  model_id: string;
  status: string;
  init_mode: string;
  demo_ids: string[];
  error: string | null;
  iterations: number;
  grad_norm: number | null;
  elapsed_s: number;
}

export interface ProgressEvent {
  iteration: number;
  grad_norm: number;
  elapsed_s: number;
  loglik: number;
}

export interface JobTermination {
  status: string;
}

export interface PlanDoc {
  id: string;
  provenance: string;
  points: Point[];
  length_m: number;
}

export interface DemoAck {
  id: string;
  trajectory_id: string;
  cells: [number, number][];
  environment_version: number;
}

export interface MhdDoc {
  a: string;
  b: string;
  mhd_m: number;
  resample_step_m: number;
}
