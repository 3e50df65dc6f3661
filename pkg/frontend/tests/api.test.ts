import { afterEach, describe, expect, it, vi } from 'vitest';
import { getSession, ServiceError, submitConstraints } from '../src/api.js';
import { pollJob } from '../src/poll.js';

function mockFetchOnce(status: number, body: unknown): void {
  vi.stubGlobal(
    'fetch',
    vi.fn(async () => ({
      ok: status < 400,
      status,
      json: async () => body,
    })),
  );
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe('api client', () => {
  it('returns parsed session state', async () => {
    mockFetchOnce(200, { id: 'abc', busy: false, steps_completed: 1 });
    const state = await getSession('abc');
    expect(state.id).toBe('abc');
    expect(fetch).toHaveBeenCalledWith('/sessions/abc', expect.anything());
  });

  it('wraps error envelopes in ServiceError', async () => {
    mockFetchOnce(409, { code: 'busy', message: 'a fit is already running' });
    await expect(submitConstraints('abc', [{ i: 0, j: 1, kind: 'active' }]))
      .rejects.toMatchObject({ status: 409, payload: { code: 'busy' } });
  });

  it('posts staged constraints as the request body', async () => {
    mockFetchOnce(200, { knowledge: [], job_id: 'job1' });
    await submitConstraints('abc', [{ i: 1, j: 2, kind: 'inactive' }]);
    const call = vi.mocked(fetch).mock.calls[0];
    expect(call[0]).toBe('/sessions/abc/constraints');
    expect(JSON.parse((call[1] as RequestInit).body as string)).toEqual([
      { i: 1, j: 2, kind: 'inactive' },
    ]);
  });
});

describe('pollJob', () => {
  it('polls until done with backoff', async () => {
    const statuses = ['queued', 'running', 'running', 'done'];
    let call = 0;
    vi.stubGlobal(
      'fetch',
      vi.fn(async () => ({
        ok: true,
        status: 200,
        json: async () => ({ id: 'job1', status: statuses[call++], error: null }),
      })),
    );
    const waits: number[] = [];
    const job = await pollJob('abc', 'job1', {
      initialMs: 100,
      backoff: 2,
      maxMs: 300,
      sleep: async (ms) => {
        waits.push(ms);
      },
    });
    expect(job.status).toBe('done');
    expect(waits).toEqual([100, 200, 300]);
  });

  it('reports progress through onTick', async () => {
    const payloads = [
      { id: 'job1', status: 'running', error: null, progress: { outer_iter: 3, h: 0.01, max_violation: 0, rho: 10 } },
      { id: 'job1', status: 'done', error: null },
    ];
    let call = 0;
    vi.stubGlobal('fetch', vi.fn(async () => ({
      ok: true,
      status: 200,
      json: async () => payloads[call++],
    })));
    const ticks: number[] = [];
    await pollJob('abc', 'job1', {
      sleep: async () => {},
      onTick: (job) => ticks.push(job.progress!.outer_iter),
    });
    expect(ticks).toEqual([3]);
  });

  it('rejects on failed jobs', async () => {
    mockFetchOnce(200, { id: 'job1', status: 'failed', error: 'boom' });
    await expect(pollJob('abc', 'job1', { sleep: async () => {} })).rejects.toThrow('boom');
  });
});
