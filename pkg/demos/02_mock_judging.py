"""
Prompting a judge, parsing replies, and the append-only judgment cache
======================================================================
"""

import tempfile
from pathlib import Path

from gireval import Judge, JudgmentLog, MockJudgeBackend
from gireval.corpus import Query

# Every assessment style is a prompt template with named placeholders.
# The mock backend stands in for a chat-completion API; its reply_fn sees
# the rendered prompt and the request, so demos stay fully offline.

query = Query("geo_1", "what is a geon in psychology")
passage = (
    "Geons are the simple 2D or 3D forms such as cylinders, bricks and "
    "wedges proposed by Biederman as the building blocks of object "
    "recognition."
)


def reply(request, prompt):
    # a real model would read the prompt; the mock keys off the template
    return {
        "binary": "The passage is relevant to the query.",
        "graded": "3 -- it answers the question completely",
    }[request.template_id]


log_path = Path(tempfile.mkdtemp()) / "judgments.jsonl"
backend = MockJudgeBackend(reply_fn=reply)
judge = Judge(backend, model_id="demo-judge", log=JudgmentLog(log_path))

# Peek at what the model actually receives.
request = judge.request("binary", {"query": query.text, "passage": passage})
prompt = judge.render(request)
print("--- rendered binary prompt " + "-" * 30)
print(prompt)
print("-" * 57)

record = judge.judge("binary", {"query": query.text, "passage": passage})
print(f"\nraw reply:      {record.raw_reply!r}")
print(f"parsed outcome: {record.parsed_outcome!r}")

# The graded template also needs the top of the grade scale spelled out.
record = judge.judge(
    "graded", {"query": query.text, "passage": passage, "max_grade": "3"}
)
print(f"graded outcome: {record.parsed_outcome!r}   (grades run 0..3)")

# Judgments are content-addressed: identical (template, bindings, model,
# params) share one record_id, so repeats are free. The log file is
# append-only JSON Lines; a rerun replays it instead of re-asking.
for _ in range(50):
    judge.judge("binary", {"query": query.text, "passage": passage})
print(f"\nbackend calls after 50 repeats: {backend.calls}")

replayed = Judge(
    MockJudgeBackend(default="should never be consulted"),
    model_id="demo-judge",
    log=JudgmentLog(log_path),
)
again = replayed.judge("binary", {"query": query.text, "passage": passage})
print(f"replayed from disk: {again.parsed_outcome!r}")
print(f"log file holds {len(replayed.log)} records: {log_path}")
