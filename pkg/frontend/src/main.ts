/**
 * Workbench bootstrap: load a pool (paste a spreadsheet link or CSV),
 * open a scratchpad session, and wire the three panels together.
 */

import { ApiClient, Prompt } from "./api";
import { clear, el } from "./dom";
import { JobView } from "./jobView";
import { LibraryView } from "./libraryView";
import { ScratchpadView } from "./scratchpadView";
import { UiSessionState, emptyState, resample, restore } from "./state";

export interface App {
  state: UiSessionState;
  scratchpad: ScratchpadView;
  library: LibraryView;
  jobs: JobView;
  loadPoolFromUrl(poolId: string, url: string): Promise<void>;
  loadPoolFromCsv(poolId: string, csv: string): Promise<void>;
  commitVariant(label: string, level: "textbook" | "lesson", lessonId?: string) : Promise<Prompt>;
}

export function mountApp(doc: Document, container: HTMLElement, api: ApiClient): App {
  const state = emptyState();
  const errorBox = el(doc, "div", { class: "error-box", id: "error-box" });
  const showError = (message: string) => {
    errorBox.textContent = message;
    errorBox.classList.add("visible");
  };

  const scratchpad = new ScratchpadView(doc, api, state, { onError: showError });
  const library = new LibraryView(
    doc,
    api,
    state,
    (prompt) => {
      // clone into scratchpad: prefill the editor with the library body
      const editor = doc.getElementById("variant-editor") as HTMLTextAreaElement | null;
      if (editor) editor.value = prompt.body;
    },
    showError,
  );
  const jobs = new JobView(doc, api, state, showError);

  const poolIdInput = el(doc, "input", { id: "pool-id", placeholder: "pool id" });
  const poolUrlInput = el(doc, "input", { id: "pool-url", placeholder: "paste a spreadsheet CSV link" });
  const loadButton = el(doc, "button", { id: "load-pool" }, ["Load"]);
  const poolStatus = el(doc, "span", { class: "pool-status", id: "pool-status" }, ["no pool loaded"]);

  async function afterPoolLoad(): Promise<void> {
    if (!state.pool) return;
    poolStatus.textContent =
      `${state.pool.pool_id}: ${state.pool.lessons} lessons, ${state.pool.steps} steps`;
    const session = await api.createSession(state.pool.pool_id);
    state.sessionId = session.session_id;
    await resample(api, state);
    scratchpad.renderSample();
    await library.refresh();
    await jobs.refreshPrompts();
  }

  const app: App = {
    state,
    scratchpad,
    library,
    jobs,
    async loadPoolFromUrl(poolId: string, url: string): Promise<void> {
      state.pool = await api.ingestPoolUrl(poolId, url);
      await afterPoolLoad();
    },
    async loadPoolFromCsv(poolId: string, csv: string): Promise<void> {
      state.pool = await api.ingestPoolCsv(poolId, csv);
      await afterPoolLoad();
    },
    async commitVariant(label, level, lessonId): Promise<Prompt> {
      const variant = state.variants.find((v) => v.variant_label === label);
      if (!variant) throw new Error(`no variant ${label}`);
      const prompt = await api.commitPrompt({
        level,
        body: variant.body,
        lesson_id: lessonId ?? null,
      });
      await library.refresh();
      await jobs.refreshPrompts();
      return prompt;
    },
  };

  loadButton.addEventListener("click", () => {
    const poolId = poolIdInput.value.trim() || "pool";
    void app.loadPoolFromUrl(poolId, poolUrlInput.value.trim()).catch((e) => showError(String(e)));
  });

  clear(container);
  container.append(
    el(doc, "header", { class: "topbar" }, [
      el(doc, "h1", {}, ["Prompt Workbench"]),
      el(doc, "div", { class: "pool-loader" }, [poolIdInput, poolUrlInput, loadButton, poolStatus]),
    ]),
    errorBox,
    scratchpad.root,
    library.root,
    jobs.root,
  );
  return app;
}

// Browser bootstrap; test environments mount explicitly instead.
declare const window: (Window & typeof globalThis) | undefined;
if (typeof window !== "undefined" && typeof document !== "undefined") {
  const container = document.getElementById("app");
  if (container) {
    const api = new ApiClient("", localStorage.getItem("workbench-user") ?? "anonymous");
    const app = mountApp(document, container, api);
    (window as unknown as { workbench: App }).workbench = app;
  }
}
