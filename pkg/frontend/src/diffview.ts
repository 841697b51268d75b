/** Render backend diff hunks as colored spans with visible whitespace.
 *
 * Normalization disagreements frequently hinge on spacing, so spaces render
 * as a middle dot and newlines as a pilcrow (plus a real line break).
 */

import type { DiffHunk } from "./types.js";

export function makeWhitespaceVisible(text: string): string {
  return text.replace(/ /g, "·").replace(/\n/g, "¶\n");
}

export function renderHunks(hunks: DiffHunk[], doc: Document): DocumentFragment {
  const fragment = doc.createDocumentFragment();
  for (const hunk of hunks) {
    const span = doc.createElement("span");
    span.className = `hunk ${hunk.kind}`;
    span.textContent = makeWhitespaceVisible(hunk.text);
    fragment.appendChild(span);
  }
  return fragment;
}
