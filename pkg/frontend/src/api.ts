/**
 * Typed client for the workbench HTTP API. Every UI mutation goes through
 * here; the UI keeps no truth of its own.
 */

export interface PoolSummary {
  pool_id: string;
  textbook_title: string;
  lessons: number;
  problems: number;
  steps: number;
  empty_lessons: string[];
  lesson_list?: LessonSummary[];
}

export interface LessonSummary {
  lesson_id: string;
  title: string;
  problems: number;
  steps: number;
}

export interface StepSample {
  problem_id: string;
  step_id: string;
  key: string;
  problem_body: string;
  step_body: string;
  answer: string;
  answer_type: string;
}

export interface Prompt {
  prompt_id: string;
  author: string;
  level: "textbook" | "lesson";
  lesson_id: string | null;
  body: string;
  parent_id: string | null;
  upvotes: number;
  committed_at: string;
  sequence: number;
}

export interface Variant {
  variant_label: string;
  body: string;
  derived_from: string | null;
  created_at: string;
}

export interface PathwayItem {
  kind: "hint" | "scaffold";
  title: string;
  body: string;
  answer?: string | null;
  answer_type?: string | null;
  choices?: string[] | null;
}

export interface ExecutionOutput {
  kind: "pathway" | "failure";
  items?: PathwayItem[];
  reason?: string;
  raw?: string | null;
  similarity?: number | null;
}

export interface ExecutionRecord {
  execution_id: string;
  variant_label: string;
  prompt_body_snapshot: string;
  sampled_step_refs: string[];
  outputs: Record<string, ExecutionOutput>;
  provider: string;
  started_at: string;
  finished_at: string;
  generation_count: number;
}

export interface DiffSpan {
  index: number;
  text: string;
}

export interface PromptDiff {
  removed: DiffSpan[];
  added: DiffSpan[];
  unchanged_count: number;
}

export interface JobStatus {
  job_id: string;
  state: "running" | "succeeded" | "failed";
  progress: number;
  result: Record<string, unknown> | null;
  error: string | null;
  artifact_available: boolean;
}

export interface SessionState {
  session_id: string;
  pool_id: string;
  author: string;
  variants: Variant[];
  executions: ExecutionRecord[];
}

export interface ValidationIssue {
  severity: "error" | "warning";
  code: string;
  location: string;
  message: string;
}

export interface ValidationReport {
  ok: boolean;
  issues: ValidationIssue[];
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    public base: string = "",
    public user: string = "anonymous",
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "X-User": this.user };
    if (body !== undefined) headers["Content-Type"] = "application/json";
    const response = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = "HttpError";
      let detail = response.statusText;
      try {
        const payload = (await response.json()) as { error?: string; detail?: string };
        code = payload.error ?? code;
        detail = payload.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, code, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("GET", "/health");
  }

  // -- pools --

  ingestPoolCsv(poolId: string, csv: string): Promise<PoolSummary> {
    return this.request("POST", "/pools", { pool_id: poolId, csv });
  }

  ingestPoolUrl(poolId: string, url: string): Promise<PoolSummary> {
    return this.request("POST", "/pools", { pool_id: poolId, url });
  }

  listPools(): Promise<{ pools: PoolSummary[] }> {
    return this.request("GET", "/pools");
  }

  getPool(poolId: string): Promise<PoolSummary> {
    return this.request("GET", `/pools/${encodeURIComponent(poolId)}`);
  }

  sample(
    poolId: string,
    opts: { scope?: "textbook" | "lesson"; lesson?: string; n?: number; seed?: number } = {},
  ): Promise<{ step_refs: StepSample[] }> {
    const params = new URLSearchParams();
    params.set("scope", opts.scope ?? "textbook");
    if (opts.lesson) params.set("lesson", opts.lesson);
    params.set("n", String(opts.n ?? 3));
    params.set("seed", String(opts.seed ?? 0));
    return this.request("GET", `/pools/${encodeURIComponent(poolId)}/sample?${params}`);
  }

  // -- prompt library --

  commitPrompt(input: {
    level: "textbook" | "lesson";
    body: string;
    lesson_id?: string | null;
    parent_id?: string | null;
  }): Promise<Prompt> {
    return this.request("POST", "/prompts", input);
  }

  clonePrompt(
    promptId: string,
    targetLevel: "textbook" | "lesson",
    lessonId?: string | null,
  ): Promise<Prompt> {
    return this.request("POST", `/prompts/${encodeURIComponent(promptId)}/clone`, {
      target_level: targetLevel,
      lesson_id: lessonId ?? null,
    });
  }

  upvotePrompt(promptId: string): Promise<{ prompt_id: string; upvotes: number }> {
    return this.request("POST", `/prompts/${encodeURIComponent(promptId)}/upvote`);
  }

  queryPrompts(filter: {
    level?: "textbook" | "lesson";
    lesson_id?: string;
    order?: "sequence" | "upvotes";
  }): Promise<{ prompts: Prompt[] }> {
    const params = new URLSearchParams();
    if (filter.level) params.set("level", filter.level);
    if (filter.lesson_id) params.set("lesson_id", filter.lesson_id);
    params.set("order", filter.order ?? "sequence");
    return this.request("GET", `/prompts?${params}`);
  }

  // -- scratchpad --

  createSession(poolId: string, baseSeed = 0): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions", { pool_id: poolId, base_seed: baseSeed });
  }

  getSession(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${encodeURIComponent(sessionId)}`);
  }

  createVariant(sessionId: string, body: string, derivedFrom?: string | null): Promise<Variant> {
    return this.request("POST", `/sessions/${encodeURIComponent(sessionId)}/variants`, {
      body,
      derived_from: derivedFrom ?? null,
    });
  }

  execute(input: {
    session_id: string;
    variant_label: string;
    step_refs: string[];
    k?: number;
    provider?: string;
    seed?: number | null;
  }): Promise<ExecutionRecord> {
    return this.request("POST", "/executions", input);
  }

  diff(oldBody: string, newBody: string): Promise<PromptDiff> {
    return this.request("POST", "/diff", { old_body: oldBody, new_body: newBody });
  }

  // -- jobs --

  startGenerateJob(input: {
    pool_id: string;
    prompt_id: string;
    k?: number;
    provider?: string;
    seed?: number;
  }): Promise<{ job_id: string }> {
    return this.request("POST", "/jobs/generate", input);
  }

  getJob(jobId: string): Promise<JobStatus> {
    return this.request("GET", `/jobs/${encodeURIComponent(jobId)}`);
  }

  artifactUrl(jobId: string): string {
    return `${this.base}/jobs/${encodeURIComponent(jobId)}/artifact`;
  }

  async fetchArtifact(jobId: string): Promise<string> {
    const response = await fetch(this.artifactUrl(jobId));
    if (!response.ok) throw new ApiError(response.status, "HttpError", "artifact unavailable");
    return response.text();
  }

  /** Poll a job until it reaches a terminal state; progress is monotone. */
  async pollJob(
    jobId: string,
    opts: { intervalMs?: number; onProgress?: (status: JobStatus) => void; timeoutMs?: number } = {},
  ): Promise<JobStatus> {
    const interval = opts.intervalMs ?? 250;
    const deadline = Date.now() + (opts.timeoutMs ?? 120_000);
    for (;;) {
      const status = await this.getJob(jobId);
      opts.onProgress?.(status);
      if (status.state === "succeeded" || status.state === "failed") return status;
      if (Date.now() > deadline) throw new Error(`job ${jobId} timed out`);
      await new Promise((resolve) => setTimeout(resolve, interval));
    }
  }

  // -- misc --

  validateRaw(raw: string): Promise<ValidationReport> {
    return this.request("POST", "/validate", { raw });
  }

  userStats(): Promise<{ users: Record<string, { executions: number; commits: number }> }> {
    return this.request("GET", "/analytics/users");
  }
}
