import { getJob } from './api.js';
import type { JobInfo } from './types.js';

export interface PollOptions {
  initialMs?: number;
  maxMs?: number;
  backoff?: number;
  sleep?: (ms: number) => Promise<void>;
  /** Called with every non-terminal poll result (e.g. to show progress). */
  onTick?: (job: JobInfo) => void;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/**
 * Poll a fit job until it leaves the queue; 1s interval with gentle backoff.
 * Resolves with the terminal job record; rejects when the job failed.
 */
export async function pollJob(
  sessionId: string,
  jobId: string,
  options: PollOptions = {},
): Promise<JobInfo> {
  const sleep = options.sleep ?? defaultSleep;
  let interval = options.initialMs ?? 1000;
  const maxMs = options.maxMs ?? 5000;
  const backoff = options.backoff ?? 1.5;
  for (;;) {
    const job = await getJob(sessionId, jobId);
    if (job.status === 'done') return job;
    if (job.status === 'failed') {
      throw new Error(job.error ?? 'fit failed');
    }
    options.onTick?.(job);
    await sleep(interval);
    interval = Math.min(maxMs, interval * backoff);
  }
}
