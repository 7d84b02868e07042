/**
 * Shared prompt library: browse by level/lesson, order by votes or
 * sequence, upvote, and clone into the scratchpad.
 */

import { ApiClient, Prompt } from "./api";
import { clear, el } from "./dom";
import { UiSessionState } from "./state";

export class LibraryView {
  readonly root: HTMLElement;
  private list: HTMLElement;
  private levelTabs: HTMLElement;
  private lessonInput: HTMLInputElement;
  private orderSelect: HTMLSelectElement;

  constructor(
    private doc: Document,
    private api: ApiClient,
    private state: UiSessionState,
    private onCloneIntoScratchpad?: (prompt: Prompt) => void,
    private onError?: (message: string) => void,
  ) {
    this.root = el(doc, "section", { class: "library", id: "library" });
    this.levelTabs = el(doc, "div", { class: "level-tabs" });
    for (const level of ["textbook", "lesson", "all"] as const) {
      const tab = el(doc, "button", { class: "level-tab", "data-level": level }, [level]);
      tab.addEventListener("click", () => {
        this.state.libraryFilter.level = level;
        void this.refresh();
      });
      this.levelTabs.append(tab);
    }
    this.lessonInput = el(doc, "input", { id: "lesson-filter", placeholder: "lesson id (e.g. 2.5)" });
    this.lessonInput.addEventListener("change", () => {
      this.state.libraryFilter.lessonId = this.lessonInput.value.trim();
      void this.refresh();
    });
    this.orderSelect = el(doc, "select", { id: "order-select" });
    this.orderSelect.append(
      el(doc, "option", { value: "sequence" }, ["by sequence"]),
      el(doc, "option", { value: "upvotes" }, ["by upvotes"]),
    );
    this.orderSelect.addEventListener("change", () => {
      this.state.libraryFilter.order = this.orderSelect.value as "sequence" | "upvotes";
      void this.refresh();
    });
    this.list = el(doc, "div", { class: "prompt-list", id: "prompt-list" });
    this.root.append(
      el(doc, "h2", {}, ["Shared prompt library"]),
      el(doc, "div", { class: "library-controls" }, [this.levelTabs, this.lessonInput, this.orderSelect]),
      this.list,
    );
  }

  async refresh(): Promise<Prompt[]> {
    const filter = this.state.libraryFilter;
    try {
      const response = await this.api.queryPrompts({
        level: filter.level === "all" ? undefined : filter.level,
        lesson_id: filter.lessonId || undefined,
        order: filter.order,
      });
      this.render(response.prompts);
      return response.prompts;
    } catch (error) {
      this.onError?.(error instanceof Error ? error.message : String(error));
      return [];
    }
  }

  private render(prompts: Prompt[]): void {
    clear(this.list);
    for (const prompt of prompts) {
      const votes = el(this.doc, "span", { class: "vote-count", "data-prompt": prompt.prompt_id }, [
        String(prompt.upvotes),
      ]);
      const upvote = el(this.doc, "button", { class: "upvote", "data-prompt": prompt.prompt_id }, ["▲"]);
      upvote.addEventListener("click", () => {
        void this.api
          .upvotePrompt(prompt.prompt_id)
          .then((result) => {
            votes.textContent = String(result.upvotes);
          })
          .catch((error) => this.onError?.(String(error)));
      });
      const clone = el(this.doc, "button", { class: "clone", "data-prompt": prompt.prompt_id }, [
        "clone to scratchpad",
      ]);
      clone.addEventListener("click", () => this.onCloneIntoScratchpad?.(prompt));
      this.list.append(
        el(this.doc, "article", { class: "prompt-card", "data-prompt": prompt.prompt_id }, [
          el(this.doc, "header", {}, [
            el(this.doc, "strong", {}, [prompt.prompt_id]),
            ` ${prompt.level}${prompt.lesson_id ? ` · lesson ${prompt.lesson_id}` : ""} · by ${prompt.author} · `,
            upvote,
            votes,
          ]),
          el(this.doc, "pre", { class: "prompt-body" }, [prompt.body]),
          clone,
        ]),
      );
    }
  }
}
