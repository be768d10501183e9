"""Acceptance gate: one test per headline guarantee.

Each test wraps its assertions in the ``criterion`` fixture so the run
prints one PASS/FAIL/SKIP line per criterion. The dataset checks need
the public TREC DL passage qrels on disk; when the files are absent
those tests skip with download instructions rather than fake a result.
The live-judge checks are opt-in (marker ``live``) and never gate.
"""

from __future__ import annotations

import itertools
import os
import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from gireval.corpus import (
    Qrel,
    QrelSet,
    Query,
    QuerySet,
    ResponseSet,
    load_qrels,
    load_queries,
    partition_categories,
)
from gireval.geneval import (
    bootstrap_summary,
    build_report,
    generate_responses,
    grade_to_gain,
    report_to_json,
    score_responses_pointwise,
)
from gireval.judge import Judge, HttpJudgeBackend, MockJudgeBackend
from gireval.methods import (
    SubtopicList,
    assess_preference,
    assess_subtopics,
    generate_subtopics,
)
from gireval.validation import CATEGORY_PAIRS, run_validation

# --------------------------------------------------------------- DL data discovery

DL_DIR_VAR = "GIREVAL_DL_QRELS_DIR"
DL_EXPECTED = {"2019": (9260, 43), "2020": (11386, 54)}
DL_SKIP_MSG = (
    "TREC DL passage qrels not found. Download the public files\n"
    "  https://trec.nist.gov/data/deep/2019qrels-pass.txt\n"
    "  https://trec.nist.gov/data/deep/2020qrels-pass.txt\n"
    "into a directory and point {var} at it (or place them under data/ "
    "in the repository root; any filename containing the year and 'qrels' "
    "is recognized).".format(var=DL_DIR_VAR)
)


def find_dl_qrels() -> dict[str, Path] | None:
    roots = []
    if os.environ.get(DL_DIR_VAR):
        roots.append(Path(os.environ[DL_DIR_VAR]))
    roots.append(Path(__file__).resolve().parent.parent / "data")
    for root in roots:
        if not root.is_dir():
            continue
        found = {}
        for path in sorted(root.iterdir()):
            name = path.name.lower()
            if "qrels" not in name:
                continue
            for year in DL_EXPECTED:
                if year in name and year not in found:
                    found[year] = path
        if len(found) == len(DL_EXPECTED):
            return found
    return None


def require_dl_qrels() -> dict[str, Path]:
    paths = find_dl_qrels()
    if paths is None:
        pytest.skip(DL_SKIP_MSG)
    return paths


# --------------------------------------------------------------------- corpus helpers


def corpus_from_grades(grades: dict[str, dict[str, int]]):
    """Build (QuerySet, CategoryPartition) from query -> doc -> grade."""
    qrels = []
    queries = []
    for qid in sorted(grades):
        queries.append(Query(qid, f"question text for {qid}"))
        for did in sorted(grades[qid]):
            qrels.append(
                Qrel(qid, did, grades[qid][did], passage_text=f"passage {qid} {did}")
            )
    partition = partition_categories(QrelSet(qrels), drop_unpartitionable=True)
    return QuerySet(queries), partition


def label_scripted_judge(labels: dict[str, str]) -> Judge:
    """A mock judge answering binary questions by passage text lookup."""

    def reply(request, prompt):
        return labels[request.bindings["passage"]]

    return Judge(MockJudgeBackend(reply_fn=reply), model_id="scripted")


def reference_pair_counts(tiers: dict[str, list[str]], labels: dict[str, int]):
    """Hand enumeration of cross-category agreement, kept separate from
    the library's implementation on purpose."""
    spec = {
        "Best/Acc": ("best", "acceptable"),
        "Best/Unacc": ("best", "unacceptable"),
        "Acc/Unacc": ("acceptable", "unacceptable"),
    }
    counts = {name: {"agree": 0, "tie": 0, "disagree": 0} for name in spec}
    for name, (hi, lo) in spec.items():
        for hi_doc in tiers[hi]:
            for lo_doc in tiers[lo]:
                if labels[hi_doc] > labels[lo_doc]:
                    counts[name]["agree"] += 1
                elif labels[hi_doc] == labels[lo_doc]:
                    counts[name]["tie"] += 1
                else:
                    counts[name]["disagree"] += 1
    return counts


# ------------------------------------------------------------------------- criteria


def test_dataset_fidelity(criterion):
    with criterion(
        "dataset fidelity: DL 2019 = 9260 qrels / 43 queries, "
        "DL 2020 = 11386 / 54, loaded in under 10 s"
    ):
        paths = require_dl_qrels()
        start = time.perf_counter()
        for year, (n_qrels, n_queries) in DL_EXPECTED.items():
            qrels = load_qrels(paths[year])
            assert len(qrels) == n_qrels, f"DL {year}: {len(qrels)} qrels"
            assert len(qrels.query_ids()) == n_queries, (
                f"DL {year}: {len(qrels.query_ids())} queries"
            )
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0, f"loading took {elapsed:.1f} s"


def test_partition_oracle_synthetic(criterion):
    with criterion("partition oracle: 50-query synthetic matches brute force"):
        rng = random.Random(417)
        grades: dict[str, dict[str, int]] = {}
        for i in range(50):
            qid = f"q{i:02d}"
            n_docs = rng.randint(3, 20)
            # roughly a fifth of queries have no relevant doc at all
            pool = [0] if rng.random() < 0.2 else [0, 1, 2, 3]
            grades[qid] = {
                f"d{i:02d}_{j:02d}": rng.choice(pool) for j in range(n_docs)
            }

        qrels = QrelSet(
            Qrel(qid, did, grade)
            for qid, docs in grades.items()
            for did, grade in docs.items()
        )
        partition = partition_categories(qrels, drop_unpartitionable=True)

        reference = {}
        for qid, docs in grades.items():
            top = max(docs.values())
            if top < 1:
                continue
            reference[qid] = {
                "best": sorted(d for d, g in docs.items() if g == top),
                "acceptable": sorted(d for d, g in docs.items() if 0 < g < top),
                "unacceptable": sorted(d for d, g in docs.items() if g == 0),
            }

        assert partition.query_ids() == sorted(reference)
        for cats in partition:
            expected = reference[cats.query_id]
            for tier in ("best", "acceptable", "unacceptable"):
                assert [q.doc_id for q in cats.tier(tier)] == expected[tier], (
                    f"{cats.query_id} {tier}"
                )


def test_partition_invariants_on_dl(criterion):
    with criterion("partition oracle: invariants hold on full DL 2019/2020"):
        paths = require_dl_qrels()
        for year, path in sorted(paths.items()):
            qrels = load_qrels(path)
            partition = partition_categories(qrels, drop_unpartitionable=True)
            partitioned = 0
            for cats in partition:
                assert cats.best, f"DL {year} {cats.query_id}: empty best"
                top = cats.best[0].grade
                assert top >= 1
                assert all(q.grade == top for q in cats.best)
                assert all(0 < q.grade < top for q in cats.acceptable)
                assert all(q.grade == 0 for q in cats.unacceptable)
                docs = [
                    q.doc_id for q in cats.best + cats.acceptable + cats.unacceptable
                ]
                assert len(docs) == len(set(docs)), f"DL {year}: tier overlap"
                assert cats.size == len(qrels.for_query(cats.query_id))
                partitioned += cats.size
            dropped = set(qrels.query_ids()) - set(partition.query_ids())
            dropped_qrels = sum(len(qrels.for_query(q)) for q in dropped)
            assert partitioned + dropped_qrels == len(qrels)


def test_agreement_rule_oracle_exhaustive(criterion):
    with criterion(
        "agreement rule: exhaustive labelings of <= 5 docs match hand enumeration"
    ):
        checked = 0
        for total in range(1, 6):
            for n_best in range(1, total + 1):
                for n_acc in range(total - n_best + 1):
                    n_unacc = total - n_best - n_acc
                    docs = [f"d{i}" for i in range(total)]
                    tiers = {
                        "best": docs[:n_best],
                        "acceptable": docs[n_best : n_best + n_acc],
                        "unacceptable": docs[n_best + n_acc :],
                    }
                    grades = {}
                    grades.update({d: 3 for d in tiers["best"]})
                    grades.update({d: 1 for d in tiers["acceptable"]})
                    grades.update({d: 0 for d in tiers["unacceptable"]})
                    queries, partition = corpus_from_grades({"q1": grades})

                    for bits in itertools.product([0, 1], repeat=total):
                        labels = dict(zip(docs, bits))
                        judge = label_scripted_judge(
                            {
                                f"passage q1 {doc}": "Relevant" if bit else "Not relevant"
                                for doc, bit in labels.items()
                            }
                        )
                        summary = run_validation(
                            "binary", partition, judge, queries=queries
                        )
                        expected = reference_pair_counts(tiers, labels)
                        for pair in CATEGORY_PAIRS:
                            got = summary.by_pair[pair]
                            want = expected[pair]
                            assert (got.agree, got.tie, got.disagree) == (
                                want["agree"],
                                want["tie"],
                                want["disagree"],
                            ), f"{tiers} {labels} {pair}"
                            assert got.skipped == got.failed == 0
                        checked += 1
        assert checked == 702  # sum over shapes of 2^total


def test_agreement_conservation_randomized(criterion):
    with criterion(
        "agreement rule: conservation holds in 1000 randomized corpora"
    ):
        rng = random.Random(99)
        for case in range(1000):
            grades: dict[str, dict[str, int]] = {}
            for q in range(rng.randint(1, 2)):
                qid = f"q{case}_{q}"
                n_docs = rng.randint(1, 5)
                grades[qid] = {
                    f"d{q}_{j}": rng.choice([0, 0, 1, 2, 3]) for j in range(n_docs)
                }
            if all(max(docs.values()) < 1 for docs in grades.values()):
                grades[next(iter(grades))]["d_fix"] = 2
            queries, partition = corpus_from_grades(grades)

            def reply(request, prompt, rng=rng):
                roll = rng.random()
                if roll < 0.05:
                    return "mumble"  # unparseable twice -> failed pair
                return "Relevant" if roll < 0.55 else "Not relevant"

            judge = Judge(MockJudgeBackend(reply_fn=reply), model_id="noisy")
            summary = run_validation("binary", partition, judge, queries=queries)
            for pair, counts in summary.by_pair.items():
                conserved = (
                    counts.agree
                    + counts.tie
                    + counts.disagree
                    + counts.skipped
                    + counts.failed
                )
                assert conserved == counts.total, f"case {case} {pair}"


def test_preference_tie_rule(criterion):
    with criterion(
        "preference: order-swap tie rule on all 4 trial combinations, "
        "antisymmetry over 1000 randomized pairs"
    ):
        query = Query("q1", "which passage answers the question")
        table = {
            ("first", "second"): "A",
            ("second", "first"): "B",
            ("first", "first"): "tie",
            ("second", "second"): "tie",
        }
        for i, ((t1, t2), want) in enumerate(sorted(table.items())):
            replies = iter(
                ["Response 1" if t1 == "first" else "Response 2",
                 "Response 1" if t2 == "first" else "Response 2"]
            )
            judge = Judge(
                MockJudgeBackend(reply_fn=lambda r, p, it=replies: next(it)),
                model_id="combo",
            )
            outcome = assess_preference(query, f"text x{i}", f"text y{i}", judge)
            assert outcome.winner == want, f"trials {(t1, t2)}"
            assert (outcome.trial_1, outcome.trial_2) == (t1, t2)

        rng = random.Random(7)
        for case in range(1000):
            x, y = f"left {case}", f"right {case}"
            vote = {x: rng.choice(["1", "2"]), y: rng.choice(["1", "2"])}

            def reply(request, prompt, vote=vote):
                return f"Response {vote[request.bindings['passage_a']]}"

            judge = Judge(MockJudgeBackend(reply_fn=reply), model_id="anti")
            forward = assess_preference(query, x, y, judge)
            backward = assess_preference(query, y, x, judge)
            flipped = {"A": "B", "B": "A", "tie": "tie"}
            assert backward.winner == flipped[forward.winner], f"case {case}"


def test_subtopic_arithmetic(criterion):
    with criterion(
        "subtopic: score is exactly positives/(n+1) for n in 1..8, "
        "all positive counts"
    ):
        query = Query("q1", "the query under test")
        for n in range(1, 9):
            subtopics = SubtopicList(
                "q1", tuple(f"subtopic {i} of {n}" for i in range(n)), "scripted"
            )
            for positives in range(n + 2):
                answered = 0

                def reply(request, prompt):
                    nonlocal answered
                    answered += 1
                    return "Yes" if answered <= positives else "No"

                judge = Judge(MockJudgeBackend(reply_fn=reply), model_id="scripted")
                score = assess_subtopics(query, subtopics, f"text {n} {positives}", judge)
                assert score.exact == Fraction(positives, n + 1), (n, positives)
                assert score.positives == positives
                assert score.denominator == n + 1
                assert score.value == positives / (n + 1)


def test_gain_mapping(criterion):
    with criterion("gain mapping: grade_to_gain(g, 3) hits {0, 1/7, 3/7, 1}"):
        expected = {0: 0.0, 1: 1 / 7, 2: 3 / 7, 3: 1.0}
        for grade, want in expected.items():
            assert abs(grade_to_gain(grade, 3) - want) < 1e-12, grade


def test_bootstrap_properties(criterion):
    with criterion(
        "bootstrap: zero-width on constants, {0, 0.5, 1} endpoints on [0, 1], "
        "byte-identical reports, < 1 s for 1000 x 54"
    ):
        constant = bootstrap_summary([0.7] * 20, "sys", "binary", seed=5)
        assert constant.ci_low == constant.ci_high == constant.mean
        assert constant.mean == pytest.approx(0.7)

        for seed in range(20):
            summary = bootstrap_summary([0.0, 1.0], "sys", "binary", seed=seed)
            assert summary.ci_low in (0.0, 0.5, 1.0), seed
            assert summary.ci_high in (0.0, 0.5, 1.0), seed

        values = [((i * 37) % 100) / 100 for i in range(54)]

        def report():
            judge = Judge(MockJudgeBackend(default="Relevant"), model_id="m")
            queries = QuerySet(Query(f"q{i}", f"text {i}") for i in range(3))
            responses = generate_responses(queries, judge).responses
            sets = score_responses_pointwise("binary", responses, queries, judge)
            return report_to_json(build_report(sets, dataset_id="d", seed=11))

        assert report() == report()

        start = time.perf_counter()
        timed = bootstrap_summary(values, "sys", "graded", n_resamples=1000, seed=0)
        elapsed = time.perf_counter() - start
        assert timed.n_resamples == 1000
        assert min(values) <= timed.ci_low <= timed.ci_high <= max(values)
        assert elapsed < 1.0, f"bootstrap took {elapsed:.2f} s"


def test_cache_contract(criterion):
    with criterion("cache: 100 duplicate requests reach the backend once"):
        backend = MockJudgeBackend(default="Relevant")
        judge = Judge(backend, model_id="cached")
        bindings = {"query": "the question", "passage": "the passage"}
        outcomes = {judge.judge("binary", bindings).parsed_outcome for _ in range(100)}
        assert outcomes == {"relevant"}
        assert backend.calls == 1
        assert len(judge.log) == 1


# ------------------------------------------------------------------- live, non-gating

LIVE_ENDPOINT_VAR = "GIREVAL_JUDGE_ENDPOINT"
LIVE_MODEL_VAR = "GIREVAL_JUDGE_MODEL"
LIVE_QUERIES_VAR = "GIREVAL_DL_QUERIES"


@pytest.mark.live
def test_live_liar_direction_and_subtopic_counts(criterion):
    with criterion(
        "live (non-gating): liar-mode mean below normal mode; "
        "subtopic counts in [1, 10] with mean in [4, 8]"
    ):
        endpoint = os.environ.get(LIVE_ENDPOINT_VAR)
        queries_path = os.environ.get(LIVE_QUERIES_VAR)
        if not (endpoint and os.environ.get("JUDGE_API_KEY") and queries_path):
            pytest.skip(
                "live check needs JUDGE_API_KEY, a chat endpoint in "
                f"{LIVE_ENDPOINT_VAR}, and DL 2019 query TSV in {LIVE_QUERIES_VAR}"
            )
        all_queries = load_queries(queries_path)
        queries = QuerySet(list(all_queries)[:10])
        model = os.environ.get(LIVE_MODEL_VAR, "gpt-4")
        judge = Judge(HttpJudgeBackend(endpoint), model_id=model)

        normal = generate_responses(queries, judge, mode="normal").responses
        liar = generate_responses(queries, judge, mode="liar").responses
        combined = ResponseSet(list(normal) + list(liar))
        scored = {
            s.system_id: s
            for s in score_responses_pointwise("binary", combined, queries, judge)
        }
        means = {
            sid: sum(score.value for score in s.scores) / len(s.scores)
            for sid, s in scored.items()
            if s.scores
        }
        liar_id = next(sid for sid in means if sid.startswith("liar "))
        normal_id = next(sid for sid in means if not sid.startswith("liar "))
        assert means[liar_id] < means[normal_id], means

        counts = [len(generate_subtopics(q, judge)) for q in queries]
        assert all(1 <= c <= 10 for c in counts), counts
        mean_count = sum(counts) / len(counts)
        assert 4 <= mean_count <= 8, counts
