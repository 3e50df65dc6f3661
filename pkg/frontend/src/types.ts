export type ConstraintKind = 'active' | 'inactive';

export interface Constraint {
  i: number;
  j: number;
  kind: ConstraintKind;
}

export interface GraphPayload {
  edges: [number, number][];
  weights: number[][];
}

export interface Metrics {
  fdr: number;
  tpr: number;
  fpr: number;
  shd: number;
  shd_per_node: number;
  tp: number;
  reversed: number;
  fp: number;
  missing: number;
}

export interface JobProgress {
  outer_iter: number;
  h: number;
  max_violation: number;
  rho: number;
}

export interface JobInfo {
  status: 'queued' | 'running' | 'done' | 'failed';
  error: string | null;
  progress?: JobProgress | null;
}

export interface SessionState {
  id: string;
  d: number;
  n: number;
  busy: boolean;
  steps_completed: number;
  knowledge: Constraint[];
  graph: GraphPayload | null;
  metrics: Metrics | null;
  has_truth: boolean;
  jobs: Record<string, JobInfo>;
  w_thresh: number;
}

export interface HistoryStep {
  step: number;
  knowledge: Constraint[];
  graph: GraphPayload;
  metrics: Metrics | null;
  delta_metrics?: Record<string, number>;
  solver_status: string;
  job_id: string;
}

export interface ApiError {
  code: string;
  message: string;
  detail?: unknown;
}
