import type { Mode, QueryContext, WireFact } from "./types.js";

export interface ProvenanceHandlers {
  onEntityClick?: (entityId: string) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function entityButton(name: string, id: string, handlers: ProvenanceHandlers): HTMLButtonElement {
  const button = el("button", "entity-link", name);
  button.dataset.entityId = id;
  button.addEventListener("click", () => handlers.onEntityClick?.(id));
  return button;
}

function factRow(fact: WireFact, handlers: ProvenanceHandlers): HTMLLIElement {
  const row = el("li", "fact-row");
  const line = el("span", "fact-text", fact.text);
  line.dataset.factText = fact.text;
  row.append(
    line,
    el("span", "fact-entities", "  "),
    entityButton(fact.subject_name, fact.subject_id, handlers),
    el("span", "fact-predicate", ` ${fact.predicate} `),
    entityButton(fact.object_name, fact.object_id, handlers),
  );
  return row;
}

/**
 * Render the provenance pane for one answer: the graph-fact list and the
 * retrieved chunk cards. Everything shown is lifted verbatim from the
 * service payload; nothing is synthesized client-side.
 */
export function renderProvenance(
  context: QueryContext,
  mode: Mode,
  handlers: ProvenanceHandlers = {},
): HTMLElement {
  const pane = el("section", "provenance");
  if (mode === "base" || (context.facts.length === 0 && context.chunks.length === 0)) {
    const empty = el("p", "provenance-empty", "no retrieval context");
    pane.append(empty);
    return pane;
  }

  if (context.facts.length > 0) {
    pane.append(el("h3", "pane-title", `graph facts (${context.facts.length})`));
    const list = el("ul", "fact-list");
    for (const fact of context.facts) list.append(factRow(fact, handlers));
    pane.append(list);
  }

  if (context.chunks.length > 0) {
    pane.append(el("h3", "pane-title", `retrieved chunks (${context.chunks.length})`));
    const cards = el("div", "chunk-cards");
    for (const chunk of context.chunks) {
      const card = el("article", "chunk-card");
      card.dataset.chunkId = chunk.chunk_id;
      const head = el("header", "chunk-head");
      head.append(
        el("span", "chunk-id", chunk.chunk_id),
        el("span", "chunk-doc", chunk.doc_id),
        el("span", "chunk-span", `[${chunk.span[0]},${chunk.span[1]})`),
        el("span", "chunk-score", chunk.score.toFixed(4)),
      );
      card.append(head, el("p", "chunk-text", chunk.text));
      cards.append(card);
    }
    pane.append(cards);
  }

  if (context.truncation_report.length > 0) {
    const note = el(
      "p",
      "truncation-note",
      `context truncated: ${context.truncation_report.join("; ")}`,
    );
    pane.append(note);
  }
  return pane;
}

/** The chunk ids currently shown, in render order. */
export function shownChunkIds(pane: HTMLElement): string[] {
  return [...pane.querySelectorAll<HTMLElement>(".chunk-card")].map(
    (card) => card.dataset.chunkId ?? "",
  );
}

/** The fact strings currently shown, in render order. */
export function shownFactTexts(pane: HTMLElement): string[] {
  return [...pane.querySelectorAll<HTMLElement>(".fact-text")].map(
    (line) => line.dataset.factText ?? "",
  );
}
