import { describe, expect, it } from "vitest";

import { cardHtml, cardView } from "../src/cards.js";
import {
  binaryItem,
  gradedItem,
  preferenceItem,
  subtopicItem,
} from "./fake-server.js";

const noSubs: (string | null)[] = [];

describe("cardView", () => {
  it("binary cards expose exactly the two verdict controls", () => {
    const view = cardView(binaryItem("relevant").item, null, noSubs);
    expect(view.controls.map((c) => c.value)).toEqual(["relevant", "not_relevant"]);
    expect(view.controls.map((c) => c.key)).toEqual(["y", "n"]);
    expect(view.rows).toEqual([]);
  });

  it("graded cards expose one control per grade up to max_grade", () => {
    const view = cardView(gradedItem(1, 3).item, 2, noSubs);
    expect(view.controls.map((c) => c.value)).toEqual([0, 1, 2, 3]);
    expect(view.controls.filter((c) => c.selected).map((c) => c.value)).toEqual([2]);
  });

  it("preference cards keep the presented text order", () => {
    const swapped = preferenceItem("first", true, ["x text", "y text"]);
    const view = cardView(swapped.item, null, noSubs);
    expect(view.texts).toEqual(["y text", "x text"]);
    expect(view.controls.map((c) => c.value)).toEqual(["A", "B"]);
  });

  it("subtopic bundles render one yes/no row per sub-question", () => {
    const bundle = subtopicItem(["yes", "no", "yes", "no"]);
    const view = cardView(bundle.item, null, [null, null, null, null]);
    expect(view.rows).toHaveLength(4);
    for (const row of view.rows) {
      expect(row.controls.map((c) => c.value)).toEqual(["yes", "no"]);
    }
    expect(view.rows[3].prompt).toContain("The query itself");
    expect(view.controls).toEqual([]);
  });

  it("marks drafted sub-answers selected row by row", () => {
    const bundle = subtopicItem(["yes", "no"]);
    const view = cardView(bundle.item, null, ["no", null]);
    expect(view.rows[0].controls.find((c) => c.value === "no")?.selected).toBe(true);
    expect(view.rows[1].controls.some((c) => c.selected)).toBe(false);
  });
});

describe("cardHtml", () => {
  it("renders a button per control with its shortcut", () => {
    const view = cardView(gradedItem(0, 3).item, null, noSubs);
    const html = cardHtml(view);
    expect(html.match(/button/g)!.length).toBeGreaterThanOrEqual(4);
    expect(html).toContain("<kbd>0</kbd>");
    expect(html).toContain("<kbd>3</kbd>");
  });

  it("escapes passage text", () => {
    const item = binaryItem("relevant", `<script>alert("x")</script>`).item;
    const html = cardHtml(cardView(item, null, noSubs));
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });

  it("shows the verbatim question the judge saw", () => {
    const hidden = binaryItem("relevant");
    const html = cardHtml(cardView(hidden.item, null, noSubs));
    expect(html).toContain("question as posed to the judge");
    expect(html).toContain("Is the passage relevant?");
  });

  it("tags preference passages A and B and highlights the active row", () => {
    const pref = cardHtml(cardView(preferenceItem("first", false).item, null, noSubs));
    expect(pref).toContain(`<span class="tag">A</span>`);
    expect(pref).toContain(`<span class="tag">B</span>`);

    const bundle = subtopicItem(["yes", "no"]);
    const html = cardHtml(cardView(bundle.item, null, [null, null]), 1);
    expect(html).toContain(`class="sub-row" data-row="0"`);
    expect(html).toContain(`class="sub-row active" data-row="1"`);
  });

  it("never contains a judge outcome field", () => {
    for (const hidden of [
      binaryItem("not_relevant"),
      gradedItem(3),
      preferenceItem("second", false),
      subtopicItem(["no", "no"]),
    ]) {
      const html = cardHtml(cardView(hidden.item, null, [null, null]));
      expect(html).not.toContain("llm_outcome");
    }
  });
});
