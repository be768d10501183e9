/**
 * Keyboard-first control mapping.
 *
 * Pure translation from a keypress plus card context to an action; the
 * controller applies it. Shortcuts:
 * - y / n: yes-no answer (binary, or the active subtopic row)
 * - 0..9: grade pick (graded cards)
 * - a / b: preference pick
 * - ArrowUp / ArrowDown: move between subtopic rows
 * - ArrowLeft / ArrowRight: previous / next card
 * - Enter: submit the draft, or dismiss the reveal panel
 * - r: toggle the agreement report view
 */

import { QueuePhase } from "./queue.js";

export type KeyAction =
  | { kind: "draft"; value: string | number }
  | { kind: "subDraft"; index: number; value: "yes" | "no" }
  | { kind: "submit" }
  | { kind: "acknowledge" }
  | { kind: "next" }
  | { kind: "previous" }
  | { kind: "rowUp" }
  | { kind: "rowDown" }
  | { kind: "toggleReport" }
  | { kind: "none" };

export interface KeyContext {
  phase: QueuePhase;
  methodId: string | null;
  maxGrade: number | null;
  activeRow: number;
  rowCount: number;
}

export function keyAction(key: string, context: KeyContext): KeyAction {
  if (key === "r") return { kind: "toggleReport" };
  if (context.phase === "revealing") {
    if (key === "Enter" || key === " ") return { kind: "acknowledge" };
    return { kind: "none" };
  }
  if (context.phase === "done" || context.methodId === null) return { kind: "none" };

  if (key === "Enter") return { kind: "submit" };
  if (key === "ArrowLeft") return { kind: "previous" };
  if (key === "ArrowRight") return { kind: "next" };

  switch (context.methodId) {
    case "binary":
      if (key === "y") return { kind: "draft", value: "relevant" };
      if (key === "n") return { kind: "draft", value: "not_relevant" };
      break;
    case "graded": {
      const grade = Number(key);
      const top = context.maxGrade ?? 3;
      if (/^\d$/.test(key) && grade <= top) return { kind: "draft", value: grade };
      break;
    }
    case "preference":
      if (key === "a") return { kind: "draft", value: "A" };
      if (key === "b") return { kind: "draft", value: "B" };
      break;
    case "subtopic":
      if (key === "y") return { kind: "subDraft", index: context.activeRow, value: "yes" };
      if (key === "n") return { kind: "subDraft", index: context.activeRow, value: "no" };
      if (key === "ArrowUp" && context.activeRow > 0) return { kind: "rowUp" };
      if (key === "ArrowDown" && context.activeRow < context.rowCount - 1)
        return { kind: "rowDown" };
      break;
  }
  return { kind: "none" };
}
