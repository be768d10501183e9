/**
 * Agreement report rendering: per-method table, disagreement ids, and
 * the indirect embedding consistency figure when the server offers one.
 */

import { AgreementReport, Reveal } from "./types.js";

const escapeHtml = (raw: string): string =>
  raw.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");

export function formatFraction(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}

export function formatOutcome(outcome: Reveal["llm_outcome"]): string {
  if (Array.isArray(outcome)) return outcome.join(", ");
  return String(outcome);
}

export function reportHtml(report: AgreementReport): string {
  const methods = Object.keys(report.per_method).sort();
  const rows = methods
    .map((method) => {
      const row = report.per_method[method];
      return (
        `<tr><td>${escapeHtml(method)}</td><td>${row.n_audited}</td>` +
        `<td>${row.n_agree}</td><td>${formatFraction(row.agreement)}</td></tr>`
      );
    })
    .join("\n");

  const table =
    methods.length === 0
      ? `<p class="empty">No labels submitted yet.</p>`
      : `<table class="agreement">
  <thead><tr><th>method</th><th>audited</th><th>agree</th><th>agreement</th></tr></thead>
  <tbody>${rows}</tbody>
</table>`;

  const consistency =
    report.embedding_consistency === null
      ? ""
      : `<p>Embedding ordering matches the human pick on ` +
        `${formatFraction(report.embedding_consistency)} of labeled preference pairs.</p>`;

  const disagreements =
    report.disagreements.length === 0
      ? ""
      : `<h3>Items to revisit</h3><ul>` +
        report.disagreements.map((id) => `<li><code>${escapeHtml(id)}</code></li>`).join("") +
        `</ul>`;

  return `
<section class="report">
  <h2>Agreement report</h2>
  <p>${report.n_labels} label${report.n_labels === 1 ? "" : "s"} collected.</p>
  ${table}
  ${consistency}
  ${disagreements}
</section>`;
}

/** The post-submission panel: what the judge said and whether we matched. */
export function revealHtml(reveal: Reveal): string {
  const verdict = reveal.match ? "You matched the judge." : "You disagreed with the judge.";
  return `
<aside class="reveal ${reveal.match ? "match" : "mismatch"}">
  <p>Judge said: <strong>${escapeHtml(formatOutcome(reveal.llm_outcome))}</strong></p>
  <p>${verdict}</p>
  <p class="hint">Enter to continue</p>
</aside>`;
}
