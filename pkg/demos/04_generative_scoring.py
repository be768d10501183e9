"""
Scoring generated answers, with a liar run as the sanity contrast
=================================================================
"""

import json

from gireval import (
    Judge,
    MockJudgeBackend,
    QuerySet,
    Query,
    build_report,
    generate_responses,
    grade_to_gain,
    report_to_csv,
    report_to_json,
    score_responses_pointwise,
)

queries = QuerySet(
    [
        Query("q1", "how tall is kilimanjaro"),
        Query("q2", "when was the metre first defined"),
        Query("q3", "what do axolotls eat"),
    ]
)

# One backend plays three parts: it answers generation prompts, answers
# liar-mode generation prompts, and grades passages. A liar answer gets
# grade 0 from the "grader"; honest answers get 2 or 3.
def reply(request, prompt):
    if request.template_id == "generate_normal":
        return f"an accurate answer about {request.bindings['query']}"
    if request.template_id == "generate_liar":
        return f"a confident fabrication about {request.bindings['query']}"
    graded = request.bindings["passage"]
    return "0" if "fabrication" in graded else ("3" if "kilimanjaro" in graded else "2")


judge = Judge(MockJudgeBackend(reply_fn=reply), model_id="demo model")

normal = generate_responses(queries, judge, mode="normal")
liar = generate_responses(queries, judge, mode="liar")
print(f"generated {len(normal.responses)} normal + {len(liar.responses)} liar answers")
print(f"liar system id: {liar.responses.system_ids()[0]!r}\n")

# Graded judgments become gains on [0, 1]: exponential in the grade so a
# perfect answer is worth far more than a merely related one.
for g in range(4):
    print(f"grade {g} -> gain {grade_to_gain(g, 3):.4f}")

from gireval.corpus import ResponseSet

combined = ResponseSet(list(normal.responses) + list(liar.responses))
score_sets = score_responses_pointwise("graded", combined, queries, judge)

# Bootstrap resampling turns per-query scores into a mean with a 95%
# interval; identical seeds give identical reports, byte for byte.
report = build_report(score_sets, dataset_id="demo", n_resamples=1000, seed=0)
print()
print(report_to_csv(report))

as_json = json.loads(report_to_json(report))
means = {
    entry["system_id"]: entry["mean"] for entry in as_json["methods"]["graded"]
}
assert means["liar demo model"] < means["demo model"]
print("the liar run scores strictly below the honest run, as it should")
