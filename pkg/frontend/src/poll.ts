/** Poll a job until it reaches a terminal state. The fetcher is injected
 * so tests can drive the loop with fake timers. */
import type { JobState } from './types.js';

export interface PollOptions {
  intervalMs?: number;
  onUpdate?: (state: JobState) => void;
}

export function pollJob(
  fetchState: (id: string) => Promise<JobState>,
  jobId: string,
  { intervalMs = 2000, onUpdate }: PollOptions = {},
): Promise<JobState> {
  return new Promise((resolve, reject) => {
    const tick = async () => {
      let state: JobState;
      try {
        state = await fetchState(jobId);
      } catch (err) {
        clearInterval(timer);
        reject(err);
        return;
      }
      onUpdate?.(state);
      if (state.status === 'done') {
        clearInterval(timer);
        resolve(state);
      } else if (state.status === 'failed') {
        clearInterval(timer);
        reject(new Error(state.message || `job ${jobId} failed`));
      }
    };
    const timer = setInterval(tick, intervalMs);
    void tick();
  });
}
