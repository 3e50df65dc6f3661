import type { ApiError, Constraint, HistoryStep, JobInfo, SessionState } from './types.js';

export class ServiceError extends Error {
  constructor(
    public status: number,
    public payload: ApiError,
  ) {
    super(payload.message);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(path, {
    headers: { 'Content-Type': 'application/json' },
    ...init,
  });
  const body = await resp.json();
  if (!resp.ok) {
    throw new ServiceError(resp.status, body as ApiError);
  }
  return body as T;
}

export function getSession(id: string): Promise<SessionState> {
  return request(`/sessions/${id}`);
}

export function getHistory(id: string): Promise<{ steps: HistoryStep[] }> {
  return request(`/sessions/${id}/history`);
}

export function getJob(id: string, jobId: string): Promise<JobInfo & { id: string }> {
  return request(`/sessions/${id}/jobs/${jobId}`);
}

export function submitConstraints(
  id: string,
  staged: Constraint[],
): Promise<{ knowledge: Constraint[]; job_id: string | null }> {
  return request(`/sessions/${id}/constraints`, {
    method: 'POST',
    body: JSON.stringify(staged),
  });
}

export function createSession(body: {
  dataset_csv?: string;
  dataset_path?: string;
  truth_edges?: [number, number][];
  seed?: number;
  solver?: Record<string, number>;
}): Promise<{ id: string; job_id: string; n: number; d: number }> {
  return request('/sessions', { method: 'POST', body: JSON.stringify(body) });
}
