/**
 * Card view models and HTML for each assessment method.
 *
 * Rendering is a pure function of the item plus the current draft, so
 * tests can assert on the controls (a subtopic bundle must expose one
 * yes/no row per sub-question) without a browser.
 */

import { AuditItem, Label } from "./types.js";

export interface ControlSpec {
  /** value submitted when this control fires */
  value: string | number;
  /** keyboard key that triggers it */
  key: string;
  text: string;
  selected: boolean;
  /** for per-subtopic rows: which sub-question the control answers */
  subIndex?: number;
}

export interface CardView {
  itemId: string;
  methodId: string;
  title: string;
  query: string;
  /** the exact question text the judge saw, shown verbatim */
  question: string;
  texts: string[];
  controls: ControlSpec[];
  /** subtopic bundles render one row of controls per sub-question */
  rows: { prompt: string; controls: ControlSpec[] }[];
  hint: string;
}

const METHOD_TITLES: Record<string, string> = {
  binary: "Is the passage relevant?",
  graded: "Rate the passage",
  preference: "Which response is better?",
  subtopic: "Does the passage cover each point?",
};

export function cardView(
  item: AuditItem,
  draft: Label | null,
  subAnswers: (string | null)[],
): CardView {
  const view: CardView = {
    itemId: item.item_id,
    methodId: item.method_id,
    title: METHOD_TITLES[item.method_id] ?? item.method_id,
    query: item.query,
    question: item.question,
    texts: item.texts,
    controls: [],
    rows: [],
    hint: "",
  };

  if (item.method_id === "binary") {
    view.controls = [
      control("relevant", "y", "Relevant", draft),
      control("not_relevant", "n", "Not relevant", draft),
    ];
    view.hint = "y / n to answer, Enter to submit";
  } else if (item.method_id === "graded") {
    const top = item.max_grade ?? 3;
    for (let grade = 0; grade <= top; grade++) {
      view.controls.push(control(grade, String(grade), `Grade ${grade}`, draft));
    }
    view.hint = `0-${top} to answer, Enter to submit`;
  } else if (item.method_id === "preference") {
    view.controls = [
      control("A", "a", "Response A", draft),
      control("B", "b", "Response B", draft),
    ];
    view.hint = "a / b to answer, Enter to submit";
  } else {
    view.rows = item.subtopics.map((prompt, i) => ({
      prompt,
      controls: [
        subControl("yes", "y", "Yes", i, subAnswers[i]),
        subControl("no", "n", "No", i, subAnswers[i]),
      ],
    }));
    view.hint = "arrows to move between rows, y / n to answer, Enter to submit";
  }
  return view;
}

function control(
  value: string | number,
  key: string,
  text: string,
  draft: Label | null,
): ControlSpec {
  return { value, key, text, selected: draft === value };
}

function subControl(
  value: string,
  key: string,
  text: string,
  subIndex: number,
  answer: string | null,
): ControlSpec {
  return { value, key, text, subIndex, selected: answer === value };
}

const escapeHtml = (raw: string): string =>
  raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");

/** Static HTML for one card; event wiring happens in main.ts. */
export function cardHtml(view: CardView, activeRow = 0): string {
  const texts = view.texts
    .map((text, i) => {
      const tag = view.methodId === "preference" ? `<span class="tag">${i === 0 ? "A" : "B"}</span>` : "";
      return `<blockquote class="passage">${tag}${escapeHtml(text)}</blockquote>`;
    })
    .join("\n");

  const buttons = (controls: ControlSpec[]) =>
    controls
      .map(
        (c) =>
          `<button type="button" class="control${c.selected ? " selected" : ""}"` +
          ` data-value="${escapeHtml(String(c.value))}"` +
          (c.subIndex === undefined ? "" : ` data-sub-index="${c.subIndex}"`) +
          `>${escapeHtml(c.text)} <kbd>${escapeHtml(c.key)}</kbd></button>`,
      )
      .join("");

  const body =
    view.rows.length > 0
      ? view.rows
          .map(
            (row, i) =>
              `<div class="sub-row${i === activeRow ? " active" : ""}" data-row="${i}">` +
              `<span class="sub-prompt">${escapeHtml(row.prompt)}</span>${buttons(row.controls)}</div>`,
          )
          .join("\n")
      : `<div class="controls">${buttons(view.controls)}</div>`;

  return `
<article class="card" data-item-id="${escapeHtml(view.itemId)}" data-method="${view.methodId}">
  <h2>${escapeHtml(view.title)}</h2>
  <p class="query">${escapeHtml(view.query)}</p>
  ${texts}
  ${body}
  <details class="verbatim"><summary>question as posed to the judge</summary>
    <pre>${escapeHtml(view.question)}</pre></details>
  <p class="hint">${escapeHtml(view.hint)}</p>
</article>`;
}
