"""
Validating an assessment method against existing human judgments
================================================================

Before trusting an LLM judge on generated text, check it against the
qrels we already have: for every cross-category document pair of a
query, a sound judge should score the higher tier above the lower one.
"""

from gireval import (
    MockJudgeBackend,
    Judge,
    Qrel,
    QrelSet,
    Query,
    QuerySet,
    partition_categories,
    run_validation,
)

# Two queries, three tiers each. Real corpora attach the passage text to
# each qrel; here a one-line stand-in per document keeps it readable.
docs = {
    "q1": {"good": 3, "ok_a": 1, "ok_b": 1, "bad": 0},
    "q2": {"great": 2, "fine": 1, "junk": 0},
}
truth = {  # what a well-behaved binary judge would say per passage
    "good": "Relevant", "ok_a": "Relevant", "ok_b": "Not relevant",
    "bad": "Not relevant", "great": "Relevant", "fine": "Relevant",
    "junk": "Not relevant",
}

qrels = QrelSet(
    Qrel(qid, did, grade, passage_text=f"text of {did}")
    for qid, grades in docs.items()
    for did, grade in grades.items()
)
queries = QuerySet([Query("q1", "first question"), Query("q2", "second question")])
partition = partition_categories(qrels)

judge = Judge(
    MockJudgeBackend(reply_fn=lambda req, _: truth[req.bindings["passage"].split()[-1]]),
    model_id="demo-judge",
)

summary = run_validation("binary", partition, judge, queries=queries, dataset_id="demo")

print(f"method={summary.method_id} judge={summary.model_id} dataset={summary.dataset_id}\n")
print(f"{'pair':<12}{'agree':>6}{'tie':>6}{'disagree':>9}{'total':>7}")
for pair, counts in summary.by_pair.items():
    print(f"{pair:<12}{counts.agree:>6}{counts.tie:>6}{counts.disagree:>9}{counts.total:>7}")

# Binary collapses the scale, so a judge can be perfectly reasonable and
# still "tie" a Best vs Acceptable pair: both sides look relevant. The
# same happens at the bottom: ok_b was judged not relevant, which ties it
# with the grade-0 doc instead of ranking above it (the Acc/Unacc tie).
# Disagreement, the alarming cell, would need the lower tier strictly
# above the higher one, and this judge never does that.
total_disagree = sum(c.disagree for c in summary.by_pair.values())
print(f"\ndisagreements: {total_disagree}")

# every pair lands in exactly one bucket
for counts in summary.by_pair.values():
    assert counts.agree + counts.tie + counts.disagree + counts.skipped + counts.failed == counts.total
print("conservation holds: every pair is agree, tie, disagree, skipped or failed")
