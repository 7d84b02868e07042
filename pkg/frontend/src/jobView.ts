/**
 * Batch generation jobs: pick a pool and a committed prompt, launch with a
 * k selector (default 30), watch monotone progress, inspect the validation
 * report, and download the export artifact.
 */

import { ApiClient, JobStatus, Prompt } from "./api";
import { clear, el } from "./dom";
import { UiSessionState } from "./state";

export class JobView {
  readonly root: HTMLElement;
  readonly kInput: HTMLInputElement;
  private promptSelect: HTMLSelectElement;
  private providerInput: HTMLInputElement;
  private progressBar: HTMLElement;
  private statusLine: HTMLElement;
  private reportList: HTMLElement;
  private downloadLink: HTMLAnchorElement;

  constructor(
    private doc: Document,
    private api: ApiClient,
    private state: UiSessionState,
    private onError?: (message: string) => void,
  ) {
    this.root = el(doc, "section", { class: "jobs", id: "jobs" });
    this.promptSelect = el(doc, "select", { id: "job-prompt" });
    this.kInput = el(doc, "input", { id: "job-k", type: "number", min: "1", value: "30" });
    this.providerInput = el(doc, "input", { id: "job-provider", value: "mock" });
    const launch = el(doc, "button", { id: "job-launch" }, ["Generate for whole pool"]);
    launch.addEventListener("click", () => void this.launch());
    this.progressBar = el(doc, "div", { class: "progress-bar", id: "job-progress" });
    this.statusLine = el(doc, "p", { class: "job-status", id: "job-status" }, ["no job running"]);
    this.reportList = el(doc, "ul", { class: "report-list", id: "job-report" });
    this.downloadLink = el(doc, "a", { class: "download", id: "job-download", hidden: "hidden" }, [
      "Download content artifact",
    ]);
    this.root.append(
      el(doc, "h2", {}, ["Batch generation"]),
      el(doc, "div", { class: "job-controls" }, [
        el(doc, "label", {}, ["prompt ", this.promptSelect]),
        el(doc, "label", {}, ["k ", this.kInput]),
        el(doc, "label", {}, ["provider ", this.providerInput]),
        launch,
      ]),
      el(doc, "div", { class: "progress-track" }, [this.progressBar]),
      this.statusLine,
      this.downloadLink,
      this.reportList,
    );
  }

  async refreshPrompts(): Promise<void> {
    const response = await this.api.queryPrompts({ order: "sequence" });
    clear(this.promptSelect);
    for (const prompt of response.prompts) {
      this.promptSelect.append(
        el(this.doc, "option", { value: prompt.prompt_id }, [
          `${prompt.prompt_id} (${prompt.level}, ${prompt.author})`,
        ]),
      );
    }
  }

  private showStatus(status: JobStatus): void {
    this.state.pendingJob = status;
    const percent = Math.round(status.progress * 100);
    this.progressBar.style.width = `${percent}%`;
    this.progressBar.setAttribute("data-progress", String(status.progress));
    this.statusLine.textContent = `${status.state} — ${percent}%${status.error ? ` — ${status.error}` : ""}`;
  }

  async launch(prompt?: Prompt): Promise<JobStatus | null> {
    if (!this.state.pool) {
      this.onError?.("load a pool first");
      return null;
    }
    const promptId = prompt?.prompt_id ?? this.promptSelect.value;
    if (!promptId) {
      this.onError?.("commit a prompt first");
      return null;
    }
    try {
      const { job_id } = await this.api.startGenerateJob({
        pool_id: this.state.pool.pool_id,
        prompt_id: promptId,
        k: Number(this.kInput.value) || 30,
        provider: this.providerInput.value || "mock",
      });
      const final = await this.api.pollJob(job_id, {
        intervalMs: 150,
        onProgress: (status) => this.showStatus(status),
      });
      this.showStatus(final);
      this.renderReport(final);
      if (final.artifact_available) {
        this.downloadLink.href = this.api.artifactUrl(job_id);
        this.downloadLink.removeAttribute("hidden");
        this.downloadLink.setAttribute("download", `${this.state.pool.pool_id}-content.json`);
      }
      return final;
    } catch (error) {
      this.onError?.(error instanceof Error ? error.message : String(error));
      return null;
    }
  }

  private renderReport(status: JobStatus): void {
    clear(this.reportList);
    const result = status.result as
      | { reports?: Record<string, { issues: { severity: string; code: string; location: string; message: string }[] }>; failures?: Record<string, string> }
      | null;
    if (!result) return;
    for (const [step, reason] of Object.entries(result.failures ?? {})) {
      this.reportList.append(
        el(this.doc, "li", { class: "report-error", "data-step": step }, [`${step}: ${reason}`]),
      );
    }
    for (const [step, report] of Object.entries(result.reports ?? {})) {
      for (const issue of report.issues ?? []) {
        this.reportList.append(
          el(this.doc, "li", { class: `report-${issue.severity}`, "data-step": step }, [
            `${step} ${issue.location}: ${issue.code} ${issue.message}`,
          ]),
        );
      }
    }
  }
}
