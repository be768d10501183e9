/**
 * Payload types for the audit HTTP API.
 *
 * These mirror the JSON the service emits; the UI never sees a judge
 * outcome before the human has submitted (the reveal comes back on the
 * label response, not on the batch).
 */

export type MethodId = "binary" | "graded" | "preference" | "subtopic";

export interface ChoiceSpace {
  kind: "choice";
  options: string[];
}

export interface GradeSpace {
  kind: "grade";
  options: number[];
}

export interface PerSubtopicSpace {
  kind: "per_subtopic";
  options: string[];
  count: number;
}

export type LabelSpace = ChoiceSpace | GradeSpace | PerSubtopicSpace;

/** One blinded audit item as served by GET /api/batch. */
export interface AuditItem {
  item_id: string;
  method_id: MethodId;
  query: string;
  texts: string[];
  question: string;
  max_grade: number | null;
  subtopics: string[];
  sub_questions: string[];
  label_space: LabelSpace;
}

export type Label = string | number | string[];

export interface BatchResponse {
  assessor_id: string;
  items: AuditItem[];
}

/** Post-submission calibration info; absent when the server runs --no-reveal. */
export interface Reveal {
  llm_outcome: string | number | string[];
  match: boolean;
}

export interface LabelResponse {
  status: "ok";
  item_id: string;
  reveal?: Reveal;
}

export interface MethodAgreement {
  n_audited: number;
  n_agree: number;
  agreement: number;
}

export interface AgreementReport {
  per_method: Record<string, MethodAgreement>;
  disagreements: string[];
  embedding_consistency: number | null;
  n_labels: number;
}

const METHOD_IDS: readonly string[] = ["binary", "graded", "preference", "subtopic"];

/** Narrow an arbitrary JSON value to an AuditItem, throwing on junk. */
export function asAuditItem(value: unknown): AuditItem {
  const obj = value as Record<string, unknown>;
  if (
    typeof obj?.item_id !== "string" ||
    typeof obj?.method_id !== "string" ||
    !METHOD_IDS.includes(obj.method_id) ||
    !Array.isArray(obj?.texts) ||
    typeof obj?.question !== "string"
  ) {
    throw new Error(`malformed audit item: ${JSON.stringify(value).slice(0, 120)}`);
  }
  return obj as unknown as AuditItem;
}
