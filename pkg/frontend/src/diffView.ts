/**
 * Red/blue iteration diff rendering.
 *
 * The server's diff operation is authoritative: its removed/added spans
 * become the red/blue elements. Unchanged filler sentences come from the
 * same sentence-splitting rule the server uses (break after . ! ?
 * followed by whitespace).
 */

import { PromptDiff } from "./api";
import { el } from "./dom";

export function splitSentences(text: string): string[] {
  return text
    .split(/(?<=[.!?])\s+/)
    .map((piece) => piece.trim())
    .filter((piece) => piece.length > 0);
}

/**
 * Interleave removed (red) and added (blue) spans with the unchanged
 * sentences, in reading order.
 */
export function renderDiff(doc: Document, oldBody: string, diff: PromptDiff): HTMLElement {
  const oldSentences = splitSentences(oldBody);
  const removedByIndex = new Map(diff.removed.map((span) => [span.index, span.text]));
  const addedSorted = [...diff.added].sort((a, b) => a.index - b.index);

  const container = el(doc, "div", { class: "diff-view" });
  let oldIndex = 0;
  let newIndex = 0;
  let addedCursor = 0;
  const total = oldSentences.length + addedSorted.length;
  for (let guard = 0; guard < total + 1; guard++) {
    const nextAdded = addedCursor < addedSorted.length ? addedSorted[addedCursor] : null;
    if (nextAdded !== null && nextAdded.index === newIndex) {
      container.append(el(doc, "span", { class: "added" }, [nextAdded.text]), " ");
      addedCursor += 1;
      newIndex += 1;
      continue;
    }
    if (oldIndex >= oldSentences.length) break;
    if (removedByIndex.has(oldIndex)) {
      container.append(el(doc, "span", { class: "removed" }, [removedByIndex.get(oldIndex)!]), " ");
      oldIndex += 1;
      continue;
    }
    container.append(el(doc, "span", { class: "unchanged" }, [oldSentences[oldIndex]]), " ");
    oldIndex += 1;
    newIndex += 1;
  }
  // trailing additions past the end of the old body
  while (addedCursor < addedSorted.length) {
    container.append(el(doc, "span", { class: "added" }, [addedSorted[addedCursor].text]), " ");
    addedCursor += 1;
  }
  return container;
}

export function removedTexts(view: HTMLElement): string[] {
  return Array.from(view.querySelectorAll("span.removed")).map((s) => s.textContent ?? "");
}

export function addedTexts(view: HTMLElement): string[] {
  return Array.from(view.querySelectorAll("span.added")).map((s) => s.textContent ?? "");
}
