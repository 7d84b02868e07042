/**
 * UI session state, derived entirely from API responses. Reloading the
 * page and calling restore() reconstructs the same state from the server.
 */

import { ApiClient, ExecutionRecord, JobStatus, PoolSummary, StepSample, Variant } from "./api";

export interface LibraryFilter {
  level: "textbook" | "lesson" | "all";
  lessonId: string;
  order: "sequence" | "upvotes";
}

export interface UiSessionState {
  pool: PoolSummary | null;
  sessionId: string | null;
  variants: Variant[];
  lastExecution: Record<string, ExecutionRecord>;
  sample: StepSample[];
  sampleSeed: number;
  libraryFilter: LibraryFilter;
  pendingJob: JobStatus | null;
}

export function emptyState(): UiSessionState {
  return {
    pool: null,
    sessionId: null,
    variants: [],
    lastExecution: {},
    sample: [],
    sampleSeed: 0,
    libraryFilter: { level: "textbook", lessonId: "", order: "sequence" },
    pendingJob: null,
  };
}

/** Rebuild variant/execution state from the server (page reload path). */
export async function restore(api: ApiClient, state: UiSessionState, sessionId: string): Promise<void> {
  const session = await api.getSession(sessionId);
  state.sessionId = session.session_id;
  state.pool = await api.getPool(session.pool_id);
  state.variants = session.variants;
  state.lastExecution = {};
  for (const record of session.executions) {
    state.lastExecution[record.variant_label] = record;
  }
}

/** Draw a fresh sample (the dice button); bumps the seed so the set changes. */
export async function resample(
  api: ApiClient,
  state: UiSessionState,
  opts: { scope?: "textbook" | "lesson"; lesson?: string; n?: number } = {},
): Promise<StepSample[]> {
  if (!state.pool) throw new Error("no pool loaded");
  state.sampleSeed += 1;
  const response = await api.sample(state.pool.pool_id, {
    scope: opts.scope,
    lesson: opts.lesson,
    n: opts.n ?? 3,
    seed: state.sampleSeed,
  });
  state.sample = response.step_refs;
  return state.sample;
}
