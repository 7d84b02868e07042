/**
 * Scratchpad: variant tabs labeled A, B, C, ..., a dice resample button,
 * per-variant execute buttons pairing each prompt with its outputs side
 * by side, and a red/blue diff toggle against the variant's source.
 */

import { ApiClient, ExecutionOutput, ExecutionRecord } from "./api";
import { renderDiff } from "./diffView";
import { clear, el } from "./dom";
import { UiSessionState, resample } from "./state";

export interface ScratchpadOptions {
  k?: number;
  provider?: string;
  sampleSize?: number;
  onError?: (message: string) => void;
}

export class ScratchpadView {
  readonly root: HTMLElement;
  private variantsRow: HTMLElement;
  private sampleList: HTMLElement;
  private outputsRow: HTMLElement;
  private diffPane: HTMLElement;
  private editor: HTMLTextAreaElement;
  private derivedSelect: HTMLSelectElement;

  constructor(
    private doc: Document,
    private api: ApiClient,
    private state: UiSessionState,
    private options: ScratchpadOptions = {},
  ) {
    this.root = el(doc, "section", { class: "scratchpad", id: "scratchpad" });
    this.editor = el(doc, "textarea", {
      id: "variant-editor",
      placeholder: "Write a prompt for generating hint pathways...",
      rows: "5",
    });
    this.derivedSelect = el(doc, "select", { id: "derived-from" });
    const addButton = el(doc, "button", { id: "add-variant" }, ["Add variant"]);
    addButton.addEventListener("click", () => void this.addVariant());
    const dice = el(doc, "button", { id: "dice", title: "Resample problems" }, ["🎲 Resample"]);
    dice.addEventListener("click", () => void this.rollDice());

    this.variantsRow = el(doc, "div", { class: "variant-row", id: "variant-row" });
    this.sampleList = el(doc, "ul", { class: "sample-list", id: "sample-list" });
    this.outputsRow = el(doc, "div", { class: "outputs-row", id: "outputs-row" });
    this.diffPane = el(doc, "div", { class: "diff-pane", id: "diff-pane" });

    this.root.append(
      el(doc, "h2", {}, ["Scratchpad"]),
      el(doc, "div", { class: "editor-row" }, [
        this.editor,
        el(doc, "div", { class: "editor-controls" }, [
          el(doc, "label", {}, ["derived from ", this.derivedSelect]),
          addButton,
        ]),
      ]),
      this.variantsRow,
      el(doc, "div", { class: "sample-header" }, [el(doc, "h3", {}, ["Sampled steps"]), dice]),
      this.sampleList,
      this.outputsRow,
      this.diffPane,
    );
    this.renderVariants();
    this.renderSample();
  }

  private fail(error: unknown): void {
    const message = error instanceof Error ? error.message : String(error);
    this.options.onError?.(message);
  }

  async addVariant(): Promise<void> {
    if (!this.state.sessionId) return this.fail(new Error("no session"));
    const body = this.editor.value;
    const derived = this.derivedSelect.value || null;
    try {
      const variant = await this.api.createVariant(this.state.sessionId, body, derived);
      this.state.variants.push(variant);
      this.editor.value = "";
      this.renderVariants();
    } catch (error) {
      this.fail(error);
    }
  }

  async rollDice(): Promise<void> {
    try {
      await resample(this.api, this.state, { n: this.options.sampleSize ?? 3 });
      this.renderSample();
    } catch (error) {
      this.fail(error);
    }
  }

  async executeVariant(label: string): Promise<ExecutionRecord | null> {
    if (!this.state.sessionId) {
      this.fail(new Error("no session"));
      return null;
    }
    if (this.state.sample.length === 0) await this.rollDice();
    try {
      const record = await this.api.execute({
        session_id: this.state.sessionId,
        variant_label: label,
        step_refs: this.state.sample.map((s) => s.key),
        k: this.options.k ?? 1,
        provider: this.options.provider ?? "mock",
      });
      this.state.lastExecution[label] = record;
      this.renderOutputs();
      return record;
    } catch (error) {
      this.fail(error);
      return null;
    }
  }

  async toggleDiff(label: string): Promise<void> {
    const variant = this.state.variants.find((v) => v.variant_label === label);
    if (!variant) return;
    if (!variant.derived_from) {
      clear(this.diffPane);
      this.diffPane.append(el(this.doc, "p", {}, [`Variant ${label} has no source to diff against.`]));
      return;
    }
    const source = this.state.variants.find((v) => v.variant_label === variant.derived_from);
    if (!source) return;
    try {
      const diff = await this.api.diff(source.body, variant.body);
      clear(this.diffPane);
      this.diffPane.append(
        el(this.doc, "h3", {}, [`Diff ${variant.derived_from} → ${label}`]),
        renderDiff(this.doc, source.body, diff),
      );
    } catch (error) {
      this.fail(error);
    }
  }

  renderVariants(): void {
    clear(this.variantsRow);
    clear(this.derivedSelect);
    this.derivedSelect.append(el(this.doc, "option", { value: "" }, ["(none)"]));
    for (const variant of this.state.variants) {
      this.derivedSelect.append(
        el(this.doc, "option", { value: variant.variant_label }, [variant.variant_label]),
      );
      const execute = el(
        this.doc,
        "button",
        { class: "variant-button", "data-label": variant.variant_label },
        [variant.variant_label],
      );
      execute.addEventListener("click", () => void this.executeVariant(variant.variant_label));
      const diffToggle = el(
        this.doc,
        "button",
        { class: "diff-toggle", "data-label": variant.variant_label, title: "Diff against source" },
        ["diff"],
      );
      diffToggle.addEventListener("click", () => void this.toggleDiff(variant.variant_label));
      this.variantsRow.append(
        el(this.doc, "div", { class: "variant-card" }, [
          execute,
          el(this.doc, "pre", { class: "variant-body" }, [variant.body]),
          variant.derived_from ? el(this.doc, "small", {}, [`from ${variant.derived_from}`]) : "",
          diffToggle,
        ]),
      );
    }
  }

  renderSample(): void {
    clear(this.sampleList);
    for (const step of this.state.sample) {
      this.sampleList.append(
        el(this.doc, "li", { class: "sample-step", "data-key": step.key }, [
          el(this.doc, "strong", {}, [step.key]),
          ` ${step.problem_body} — ${step.step_body}`,
        ]),
      );
    }
  }

  private renderOutput(output: ExecutionOutput): HTMLElement {
    if (output.kind === "failure") {
      return el(this.doc, "div", { class: "step-output failure" }, [output.reason ?? "failed"]);
    }
    const list = el(this.doc, "ol", { class: "pathway" });
    for (const item of output.items ?? []) {
      const parts: string[] = [`${item.title}: ${item.body}`];
      if (item.kind === "scaffold") {
        parts.push(` [answer: ${item.answer} (${item.answer_type})]`);
      }
      list.append(el(this.doc, "li", { class: `item-${item.kind}` }, parts));
    }
    return el(this.doc, "div", { class: "step-output" }, [list]);
  }

  renderOutputs(): void {
    clear(this.outputsRow);
    for (const variant of this.state.variants) {
      const record = this.state.lastExecution[variant.variant_label];
      if (!record) continue;
      const pane = el(this.doc, "div", {
        class: "output-pane",
        "data-label": variant.variant_label,
      });
      pane.append(
        el(this.doc, "h4", {}, [`Variant ${variant.variant_label}`]),
        el(this.doc, "pre", { class: "prompt-snapshot" }, [record.prompt_body_snapshot]),
      );
      for (const key of record.sampled_step_refs) {
        pane.append(
          el(this.doc, "div", { class: "step-block", "data-key": key }, [
            el(this.doc, "strong", {}, [key]),
            this.renderOutput(record.outputs[key]),
          ]),
        );
      }
      this.outputsRow.append(pane);
    }
  }
}
