/**
 * Browser entry point: wires the queue, cards, keyboard map and report
 * view into the DOM. Everything interesting is in the imported modules;
 * this file only touches document.*.
 */

import { AuditApiClient } from "./api.js";
import { cardHtml, cardView } from "./cards.js";
import { keyAction } from "./keys.js";
import { AssessmentQueue } from "./queue.js";
import { reportHtml, revealHtml } from "./report.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const params = new URLSearchParams(window.location.search);
const assessorId = params.get("assessor") ?? window.prompt("Assessor id?") ?? "anonymous";
const token = params.get("token") ?? undefined;

const client = new AuditApiClient({ baseUrl: "", token });
const queue = new AssessmentQueue(client, assessorId);

let activeRow = 0;
let showReport = false;
let statusLine = "";

async function refreshReport(): Promise<string> {
  try {
    return reportHtml(await client.fetchReport());
  } catch (error) {
    return `<p class="error">report unavailable: ${String(error)}</p>`;
  }
}

async function render(): Promise<void> {
  const header = `
<header>
  <h1>Judgment audit</h1>
  <span class="muted">assessor ${assessorId} &middot; ${queue.remaining()} of ${queue.total()} left</span>
  <button type="button" id="toggle-report">report <kbd>r</kbd></button>
</header>`;

  let body: string;
  if (showReport) {
    body = await refreshReport();
  } else if (queue.phase === "done") {
    body = `<section class="done"><h2>All items labeled.</h2>${await refreshReport()}</section>`;
  } else {
    const item = queue.current();
    if (!item) return;
    const view = cardView(item, queue.draftFor(item), queue.subAnswersFor(item));
    body = cardHtml(view, activeRow);
    const reveal = queue.currentReveal();
    if (reveal) body += revealHtml(reveal);
  }

  root!.innerHTML = header + body + (statusLine ? `<p class="status">${statusLine}</p>` : "");
  wireClicks();
}

function wireClicks(): void {
  root!.querySelector("#toggle-report")?.addEventListener("click", () => {
    showReport = !showReport;
    void render();
  });
  root!.querySelectorAll<HTMLButtonElement>("button.control").forEach((button) => {
    button.addEventListener("click", () => {
      const value = button.dataset.value ?? "";
      const subIndex = button.dataset.subIndex;
      if (subIndex !== undefined) {
        queue.setSubAnswer(Number(subIndex), value as "yes" | "no");
        activeRow = Number(subIndex);
      } else {
        const item = queue.current();
        queue.setDraft(item?.method_id === "graded" ? Number(value) : value);
      }
      void render();
    });
  });
}

async function submitCurrent(): Promise<void> {
  try {
    statusLine = "";
    await queue.submit();
  } catch (error) {
    statusLine = `submit failed: ${String(error)}`;
  }
  activeRow = 0;
  void render();
}

document.addEventListener("keydown", (event) => {
  const item = queue.current();
  const action = keyAction(event.key, {
    phase: queue.phase,
    methodId: item?.method_id ?? null,
    maxGrade: item?.max_grade ?? null,
    activeRow,
    rowCount: item?.subtopics.length ?? 0,
  });
  if (action.kind === "none") return;
  event.preventDefault();

  switch (action.kind) {
    case "draft":
      queue.setDraft(action.value);
      break;
    case "subDraft":
      queue.setSubAnswer(action.index, action.value);
      if (activeRow < (item?.subtopics.length ?? 1) - 1) activeRow += 1;
      break;
    case "submit":
      void submitCurrent();
      return;
    case "acknowledge":
      queue.acknowledgeReveal();
      activeRow = 0;
      break;
    case "next":
      queue.next();
      activeRow = 0;
      break;
    case "previous":
      queue.previous();
      activeRow = 0;
      break;
    case "rowUp":
      activeRow -= 1;
      break;
    case "rowDown":
      activeRow += 1;
      break;
    case "toggleReport":
      showReport = !showReport;
      break;
  }
  void render();
});

queue
  .load()
  .then(() => render())
  .catch((error) => {
    root!.innerHTML = `<p class="error">failed to load batch: ${String(error)}</p>`;
  });
