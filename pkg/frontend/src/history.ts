import type { HistoryStep } from './types.js';

export interface HistoryRow {
  step: number;
  knowledgeSize: number;
  edgeCount: number;
  addedCount: number;
  removedCount: number;
  // metric columns are present only when the session has a reference graph
  metrics: { fdr: number; tpr: number; fpr: number; shd_per_node: number } | null;
  deltas: Record<string, number> | null;
  solverStatus: string;
}

const METRIC_KEYS = ['fdr', 'tpr', 'fpr', 'shd_per_node'] as const;

/** Lower is better for every delta column except TPR. */
export const DELTA_DESIRABLE_SIGN: Record<string, number> = {
  fdr: -1,
  tpr: +1,
  fpr: -1,
  shd_per_node: -1,
};

export function historyRows(steps: HistoryStep[]): HistoryRow[] {
  return steps.map((step, idx) => {
    const prev = idx > 0 ? new Set(steps[idx - 1].graph.edges.map(([i, j]) => `${i}->${j}`)) : null;
    const cur = new Set(step.graph.edges.map(([i, j]) => `${i}->${j}`));
    let added = 0;
    let removed = 0;
    if (prev) {
      for (const e of cur) if (!prev.has(e)) added++;
      for (const e of prev) if (!cur.has(e)) removed++;
    }
    let metrics: HistoryRow['metrics'] = null;
    if (step.metrics) {
      metrics = {
        fdr: step.metrics.fdr,
        tpr: step.metrics.tpr,
        fpr: step.metrics.fpr,
        shd_per_node: step.metrics.shd_per_node,
      };
    }
    let deltas: Record<string, number> | null = null;
    if (idx > 0 && step.metrics && steps[idx - 1].metrics) {
      deltas = {};
      for (const key of METRIC_KEYS) {
        deltas[key] = step.metrics[key] - steps[idx - 1].metrics![key];
      }
    }
    return {
      step: step.step,
      knowledgeSize: step.knowledge.length,
      edgeCount: step.graph.edges.length,
      addedCount: added,
      removedCount: removed,
      metrics,
      deltas,
      solverStatus: step.solver_status,
    };
  });
}
