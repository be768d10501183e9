"""
Auditing the judge: stratified sampling, blinded labels, agreement
==================================================================

Every automated judgment is only as trustworthy as its agreement with a
human answering the same question. The audit loop samples records from
the judgment log, strips the model's answer, collects human labels and
reports per-method agreement.
"""

import tempfile
from pathlib import Path

from gireval import (
    AuditStore,
    Judge,
    MockJudgeBackend,
    Query,
    SubtopicList,
    assess_binary,
    assess_graded,
    assess_subtopics,
    audit_report,
    audit_sample,
    record_human_label,
)

# Populate a judgment log: binary and graded calls over a few passages,
# plus one subtopic bundle (a passage checked against each facet of its
# query, and against the query itself).
def reply(request, prompt):
    if request.template_id == "binary":
        return "Relevant" if "whale" in request.bindings["passage"] else "Not relevant"
    if request.template_id == "graded":
        return "2"
    return "Yes" if "filter feeders" in request.bindings["passage"] else "No"


judge = Judge(MockJudgeBackend(reply_fn=reply), model_id="demo-judge")
query = Query("q_whale", "how do baleen whales feed")
passages = [
    "baleen whales are filter feeders straining krill from seawater",
    "the blue whale is the largest animal known to have lived",
    "gray whales migrate along the pacific coast",
    "cormorants dive for fish in coastal waters",
]
for text in passages:
    assess_binary(query, text, judge)
    assess_graded(query, text, judge)
facets = SubtopicList(
    "q_whale", ("What do baleen whales eat?", "How is the food captured?"), "demo-judge"
)
assess_subtopics(query, facets, passages[0], judge)
print(f"judgment log holds {len(judge.log)} records")

# Draw a stratified sample: round-robin across methods, and within each
# method across distinct judge outcomes, so rare labels are not drowned
# out. Same seed, same log -> same batch.
batch = audit_sample(judge.log, n=6, seed=7)
print(f"sampled {len(batch)} items: "
      f"{sorted(item.method_id for item in batch.items)}\n")

store = AuditStore(Path(tempfile.mkdtemp()) / "audit.jsonl")
store.add_batch(batch)

# What the human sees is blinded: the question and texts, never the
# model's answer.
first = batch.items[0]
public = first.to_public_dict()
print("public payload keys:", sorted(public))
assert "llm_outcome" not in public

# Simulate an assessor who mostly agrees but misses one binary call.
disagreed = 0
for item in batch.items:
    if item.method_id == "binary":
        label = item.llm_outcome
        if not disagreed and item.llm_outcome == "relevant":
            label, disagreed = "not_relevant", 1
    elif item.method_id == "graded":
        label = item.llm_outcome
    else:
        label = list(item.llm_outcome)
    record_human_label(store, item.item_id, label, assessor_id="assessor_1")

report = audit_report(store)
print(f"\n{'method':<10}{'audited':>8}{'agree':>7}{'fraction':>10}")
for method, row in sorted(report.per_method.items()):
    print(f"{method:<10}{row['n_audited']:>8}{row['n_agree']:>7}{row['agreement']:>10.2f}")
print(f"\nitems to revisit: {list(report.disagreements)}")
