/**
 * Assessment queue state machine.
 *
 * Pure state transitions over the fetched batch: drafts accumulate per
 * item (a subtopic bundle needs one answer per sub-question before it
 * can be submitted), submission hands the label to the API client and
 * stores the reveal for the acknowledgement panel. No DOM in here, so
 * the whole flow is unit-testable.
 */

import { AuditApiClient } from "./api.js";
import { AuditItem, Label, Reveal } from "./types.js";

export interface SubmittedEntry {
  label: Label;
  reveal?: Reveal;
}

export type QueuePhase = "answering" | "revealing" | "done";

export class AssessmentQueue {
  private items: AuditItem[] = [];
  private position = 0;
  private drafts = new Map<string, Label>();
  private subDrafts = new Map<string, (string | null)[]>();
  private submitted = new Map<string, SubmittedEntry>();
  private pendingReveal: Reveal | null = null;

  constructor(
    private readonly client: AuditApiClient,
    public readonly assessorId: string,
  ) {}

  async load(): Promise<number> {
    this.items = await this.client.fetchBatch(this.assessorId);
    this.position = 0;
    return this.items.length;
  }

  /** Restore a batch without a network round trip (tests, refresh). */
  setItems(items: AuditItem[]): void {
    this.items = [...items];
    this.position = 0;
  }

  get phase(): QueuePhase {
    if (this.pendingReveal) return "revealing";
    return this.current() ? "answering" : "done";
  }

  current(): AuditItem | null {
    return this.items[this.position] ?? null;
  }

  remaining(): number {
    return this.items.filter((item) => !this.submitted.has(item.item_id)).length;
  }

  total(): number {
    return this.items.length;
  }

  submittedEntries(): Map<string, SubmittedEntry> {
    return new Map(this.submitted);
  }

  next(): void {
    if (this.items.length === 0) return;
    this.position = Math.min(this.position + 1, this.items.length - 1);
  }

  previous(): void {
    this.position = Math.max(this.position - 1, 0);
  }

  /** Draft a whole-item answer (binary choice, grade, or A/B pick). */
  setDraft(label: Label): void {
    const item = this.current();
    if (!item || item.method_id === "subtopic") return;
    this.drafts.set(item.item_id, label);
  }

  /** Draft one yes/no inside a subtopic bundle. */
  setSubAnswer(index: number, answer: "yes" | "no"): void {
    const item = this.current();
    if (!item || item.method_id !== "subtopic") return;
    const existing =
      this.subDrafts.get(item.item_id) ??
      new Array<string | null>(item.subtopics.length).fill(null);
    if (index < 0 || index >= existing.length) return;
    existing[index] = answer;
    this.subDrafts.set(item.item_id, existing);
  }

  draftFor(item: AuditItem): Label | null {
    if (item.method_id === "subtopic") {
      const answers = this.subDrafts.get(item.item_id);
      if (!answers || answers.some((a) => a === null)) return null;
      return answers as string[];
    }
    return this.drafts.get(item.item_id) ?? null;
  }

  /** Partial sub-answers for rendering, null where unanswered. */
  subAnswersFor(item: AuditItem): (string | null)[] {
    return (
      this.subDrafts.get(item.item_id) ??
      new Array<string | null>(item.subtopics.length).fill(null)
    );
  }

  canSubmit(): boolean {
    const item = this.current();
    if (!item || this.submitted.has(item.item_id)) return false;
    return this.draftFor(item) !== null;
  }

  async submit(): Promise<Reveal | null> {
    const item = this.current();
    if (!item || !this.canSubmit()) return null;
    const label = this.draftFor(item);
    if (label === null) return null;
    const response = await this.client.submitLabel(item.item_id, label, this.assessorId);
    this.submitted.set(item.item_id, { label, reveal: response.reveal });
    this.pendingReveal = response.reveal ?? null;
    if (!this.pendingReveal) this.advancePastSubmitted();
    return response.reveal ?? null;
  }

  /** Dismiss the reveal panel and move to the next unlabeled item. */
  acknowledgeReveal(): void {
    this.pendingReveal = null;
    this.advancePastSubmitted();
  }

  currentReveal(): Reveal | null {
    return this.pendingReveal;
  }

  private advancePastSubmitted(): void {
    const start = this.position;
    for (let step = 0; step < this.items.length; step++) {
      const index = (start + step) % this.items.length;
      if (!this.submitted.has(this.items[index].item_id)) {
        this.position = index;
        return;
      }
    }
    this.position = this.items.length; // everything labeled
  }
}
