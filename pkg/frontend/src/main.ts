import { createSession, getHistory, getSession, submitConstraints, ServiceError } from './api.js';
import { DELTA_DESIRABLE_SIGN, historyRows } from './history.js';
import { pollJob } from './poll.js';
import { renderGraph, renderPairMatrix } from './render.js';
import { StagedConstraints } from './staging.js';
import type { HistoryStep, SessionState } from './types.js';

interface AppState {
  sessionId: string | null;
  session: SessionState | null;
  history: HistoryStep[];
  staging: StagedConstraints;
  message: string;
}

const state: AppState = {
  sessionId: null,
  session: null,
  history: [],
  staging: new StagedConstraints([]),
  message: '',
};

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

async function refresh(): Promise<void> {
  if (!state.sessionId) return;
  state.session = await getSession(state.sessionId);
  state.history = (await getHistory(state.sessionId)).steps;
  state.staging = new StagedConstraints(state.session.knowledge);
  render();
}

function render(): void {
  const session = state.session;
  el('session-info').textContent = session
    ? `session ${session.id} · n=${session.n}, d=${session.d} · ` +
      `${session.steps_completed} fit(s) · ${session.busy ? 'fitting…' : 'idle'}`
    : 'no session';
  el('message').textContent = state.message;

  if (session && session.graph) {
    const previous =
      state.history.length >= 2 ? state.history[state.history.length - 2].graph : null;
    renderGraph(el('graph'), {
      d: session.d,
      graph: session.graph,
      previous,
      staging: state.staging,
    });
  }
  if (session) {
    renderPairMatrix(el('editor'), session.d, state.staging, render);
    renderHistoryTable();
    const apply = el<HTMLButtonElement>('apply');
    apply.disabled = session.busy || state.staging.count === 0;
    apply.textContent =
      state.staging.count > 0 ? `Apply & Refit (${state.staging.count})` : 'Apply & Refit';
    el<HTMLButtonElement>('discard').disabled = state.staging.count === 0;
  }
}

function renderHistoryTable(): void {
  const rows = historyRows(state.history);
  const hasMetrics = rows.some((r) => r.metrics !== null);
  const hasDeltas = rows.length > 1; // a lone baseline has nothing to compare
  const table = document.createElement('table');
  table.className = 'history';
  const head = table.insertRow();
  const cols = ['step', 'knowledge', 'edges'];
  if (hasMetrics) {
    cols.push('FDR', 'TPR', 'FPR', 'SHD/d');
    if (hasDeltas) cols.push('ΔFDR', 'ΔTPR', 'ΔFPR', 'ΔSHD/d');
  } else if (hasDeltas) {
    cols.push('added', 'removed');
  }
  cols.push('status');
  for (const c of cols) {
    const cell = head.insertCell();
    cell.textContent = c;
  }
  for (const row of rows) {
    const tr = table.insertRow();
    const push = (text: string, cls?: string) => {
      const cell = tr.insertCell();
      cell.textContent = text;
      if (cls) cell.className = cls;
    };
    push(String(row.step));
    push(String(row.knowledgeSize));
    push(String(row.edgeCount));
    if (hasMetrics) {
      if (row.metrics) {
        push(row.metrics.fdr.toFixed(3));
        push(row.metrics.tpr.toFixed(3));
        push(row.metrics.fpr.toFixed(3));
        push(row.metrics.shd_per_node.toFixed(3));
      } else {
        push(''); push(''); push(''); push('');
      }
      if (hasDeltas) {
        for (const key of ['fdr', 'tpr', 'fpr', 'shd_per_node']) {
          if (row.deltas && key in row.deltas) {
            const value = row.deltas[key];
            const good = value * DELTA_DESIRABLE_SIGN[key] > 0;
            push(value >= 0 ? `+${value.toFixed(3)}` : value.toFixed(3),
                 value === 0 ? '' : good ? 'delta-good' : 'delta-bad');
          } else {
            push('');
          }
        }
      }
    } else if (hasDeltas) {
      push(row.step === 0 ? '' : String(row.addedCount));
      push(row.step === 0 ? '' : String(row.removedCount));
    }
    push(row.solverStatus);
  }
  el('history').replaceChildren(table);
}

async function applyStaged(): Promise<void> {
  if (!state.sessionId || state.staging.count === 0) return;
  const staged = state.staging.toConstraints();
  state.message = 'submitting constraints…';
  render();
  try {
    const resp = await submitConstraints(state.sessionId, staged);
    if (resp.job_id) {
      state.message = `fit ${resp.job_id} running…`;
      render();
      await pollJob(state.sessionId, resp.job_id, {
        onTick: (job) => {
          if (job.progress) {
            state.message =
              `fit ${resp.job_id} running… outer iteration ` +
              `${job.progress.outer_iter}, h=${job.progress.h.toExponential(1)}`;
            el('message').textContent = state.message;
          }
        },
      });
    }
    state.message = '';
    await refresh();
  } catch (err) {
    // staged edits survive a rejected apply
    state.message =
      err instanceof ServiceError
        ? `${err.payload.code}: ${err.payload.message}`
        : String(err);
    render();
  }
}

async function openSession(): Promise<void> {
  const id = el<HTMLInputElement>('session-id').value.trim();
  if (!id) return;
  state.sessionId = id;
  state.message = '';
  try {
    await refresh();
    const url = new URL(window.location.href);
    url.searchParams.set('session', id);
    window.history.replaceState(null, '', url.toString());
  } catch (err) {
    state.message =
      err instanceof ServiceError
        ? `${err.payload.code}: ${err.payload.message}`
        : String(err);
    render();
  }
}

async function uploadDataset(): Promise<void> {
  const input = el<HTMLInputElement>('dataset-file');
  const file = input.files?.[0];
  if (!file) {
    state.message = 'choose a CSV file first';
    render();
    return;
  }
  const text = await file.text();
  state.message = 'creating session…';
  render();
  try {
    const created = await createSession({ dataset_csv: text, seed: 0 });
    el<HTMLInputElement>('session-id').value = created.id;
    state.sessionId = created.id;
    await pollJob(created.id, created.job_id);
    state.message = '';
    await refresh();
  } catch (err) {
    state.message =
      err instanceof ServiceError
        ? `${err.payload.code}: ${err.payload.message}`
        : String(err);
    render();
  }
}

export function bootstrap(): void {
  el('open').addEventListener('click', () => void openSession());
  el('upload').addEventListener('click', () => void uploadDataset());
  el('apply').addEventListener('click', () => void applyStaged());
  el('discard').addEventListener('click', () => {
    state.staging.clear();
    render();
  });
  el('refresh').addEventListener('click', () => void refresh());
  const params = new URLSearchParams(window.location.search);
  const fromUrl = params.get('session');
  if (fromUrl) {
    el<HTMLInputElement>('session-id').value = fromUrl;
    void openSession();
  }
}

if (typeof document !== 'undefined' && document.getElementById('graph')) {
  bootstrap();
}
