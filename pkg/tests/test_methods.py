"""Assessment methods over a fixture-driven mock judge."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gireval.corpus import Query
from gireval.judge import Judge, MockJudgeBackend, UnparsableReplyError, load_templates
from gireval.methods import (
    MethodError,
    PreferenceOutcome,
    SubtopicList,
    SubtopicScore,
    SubtopicStore,
    assess_binary,
    assess_graded,
    assess_preference,
    assess_subtopics,
    cosine_similarity,
    generate_subtopics,
    winner_from_trials,
)

TEMPLATES = load_templates()
QUERY = Query(query_id="1105792", text="define: geon")


def make_judge(backend) -> Judge:
    return Judge(backend, model_id="mock-judge", templates=TEMPLATES)


class TestBinary:
    def test_relevant_fixture(self):
        judge = make_judge(MockJudgeBackend(default="Relevant"))
        assert assess_binary(QUERY, "a geon is a basic unit of shape", judge) == "relevant"

    def test_not_relevant_fixture(self):
        judge = make_judge(MockJudgeBackend(default="Not relevant"))
        assert assess_binary(QUERY, "geese migrate in autumn", judge) == "not_relevant"

    def test_empty_text_rejected(self):
        judge = make_judge(MockJudgeBackend(default="Relevant"))
        with pytest.raises(MethodError):
            assess_binary(QUERY, "   ", judge)

    def test_exactly_one_record_logged(self):
        backend = MockJudgeBackend(default="Relevant")
        judge = make_judge(backend)
        assess_binary(QUERY, "some text", judge)
        assert len(judge.log) == 1
        assert backend.calls == 1


class TestGraded:
    def test_grade_three(self):
        judge = make_judge(MockJudgeBackend(default="3"))
        assert assess_graded(QUERY, "text", judge) == 3

    def test_grade_zero(self):
        judge = make_judge(MockJudgeBackend(default="0"))
        assert assess_graded(QUERY, "text", judge) == 0

    def test_no_digit_reply_is_unparsed_error(self):
        judge = make_judge(MockJudgeBackend(default="perfect"))
        with pytest.raises(UnparsableReplyError):
            assess_graded(QUERY, "text", judge)

    def test_prompt_contains_grade_definitions(self):
        request = make_judge(MockJudgeBackend(default="1")).request(
            "graded", {"query": "q", "passage": "p", "max_grade": "3"}
        )
        prompt = TEMPLATES["graded"].render(request.bindings)
        for word in ("Irrelevant", "Related", "Highly relevant", "Perfectly relevant"):
            assert word in prompt


FIG1_STYLE_REPLY = "\n".join(
    f'<subtopic number="{i}">question {i}</subtopic>' for i in range(1, 8)
)


class TestGenerateSubtopics:
    def test_seven_subtopics_from_tagged_reply(self):
        judge = make_judge(MockJudgeBackend(default=FIG1_STYLE_REPLY))
        result = generate_subtopics(QUERY, judge)
        assert len(result) == 7
        assert result.query_id == QUERY.query_id
        assert result.model_id == "mock-judge"

    def test_store_round_trip(self, tmp_path):
        path = tmp_path / "subtopics.jsonl"
        judge = make_judge(MockJudgeBackend(default=FIG1_STYLE_REPLY))
        generated = generate_subtopics(QUERY, judge, store=SubtopicStore(path))

        reloaded = SubtopicStore(path).get(QUERY.query_id, "mock-judge")
        assert reloaded == generated

    def test_generation_is_one_shot_per_query_and_model(self, tmp_path):
        path = tmp_path / "subtopics.jsonl"
        store = SubtopicStore(path)
        judge = make_judge(MockJudgeBackend(default=FIG1_STYLE_REPLY))
        first = generate_subtopics(QUERY, judge, store=store)

        # a second judge would answer differently, but the stored list wins
        other = make_judge(MockJudgeBackend(default="1. different\n2. list"))
        second = generate_subtopics(QUERY, other, store=store)
        assert second == first

    def test_curated_edits_survive(self, tmp_path):
        path = tmp_path / "subtopics.jsonl"
        store = SubtopicStore(path)
        store.put(
            SubtopicList(QUERY.query_id, ("human curated question",), "mock-judge")
        )
        judge = make_judge(MockJudgeBackend(default=FIG1_STYLE_REPLY))
        result = generate_subtopics(QUERY, judge, store=store)
        assert result.subtopics == ("human curated question",)

    def test_regenerate_flag_overwrites(self, tmp_path):
        path = tmp_path / "subtopics.jsonl"
        store = SubtopicStore(path)
        store.put(SubtopicList(QUERY.query_id, ("stale",), "mock-judge"))
        judge = make_judge(MockJudgeBackend(default=FIG1_STYLE_REPLY))
        result = generate_subtopics(QUERY, judge, store=store, regenerate=True)
        assert len(result) == 7
        assert SubtopicStore(path).get(QUERY.query_id, "mock-judge") == result

    def test_list_invariants(self):
        with pytest.raises(MethodError):
            SubtopicList("q", (), "m")
        with pytest.raises(MethodError):
            SubtopicList("q", ("fine", "  "), "m")


def subtopic_reply_fn(yes_questions):
    """Reply yes for listed subtopic strings, no otherwise."""

    def reply(request, prompt):
        return "Yes" if request.bindings["subtopic"] in yes_questions else "No"

    return reply


class TestAssessSubtopics:
    def test_three_of_five_plus_query_yes_is_four_sixths(self):
        subtopics = SubtopicList(QUERY.query_id, tuple(f"s{i}" for i in range(5)), "m")
        yes = {"s0", "s1", "s2", f"The query itself: {QUERY.text}"}
        backend = MockJudgeBackend(reply_fn=subtopic_reply_fn(yes))
        judge = make_judge(backend)
        score = assess_subtopics(QUERY, subtopics, "text", judge)
        assert score.positives == 4
        assert score.denominator == 6
        assert score.exact == Fraction(4, 6)
        assert score.value == pytest.approx(4 / 6)
        assert backend.calls == 6

    def test_all_no_is_zero(self):
        subtopics = SubtopicList(QUERY.query_id, ("s0", "s1"), "m")
        judge = make_judge(MockJudgeBackend(default="No"))
        score = assess_subtopics(QUERY, subtopics, "text", judge)
        assert score.positives == 0
        assert score.value == 0.0

    def test_all_yes_seven_subtopics_is_one(self):
        subtopics = SubtopicList(QUERY.query_id, tuple(f"s{i}" for i in range(7)), "m")
        judge = make_judge(MockJudgeBackend(default="Yes"))
        score = assess_subtopics(QUERY, subtopics, "text", judge)
        assert score.positives == 8
        assert score.denominator == 8
        assert score.value == 1.0

    def test_exactly_n_plus_one_records(self):
        subtopics = SubtopicList(QUERY.query_id, ("s0", "s1", "s2"), "m")
        judge = make_judge(MockJudgeBackend(default="Yes"))
        assess_subtopics(QUERY, subtopics, "text", judge)
        assert len(judge.log) == 4

    def test_unparseable_subquestion_flags_partial(self):
        subtopics = SubtopicList(QUERY.query_id, ("good", "bad"), "m")

        def reply(request, prompt):
            return "Yes" if request.bindings["subtopic"] != "bad" else "???"

        judge = make_judge(MockJudgeBackend(reply_fn=reply))
        score = assess_subtopics(QUERY, subtopics, "text", judge)
        assert score.partial
        assert score.failures == 1
        assert score.positives == 2  # "good" and the query restatement
        assert score.denominator == 3

    def test_concurrent_execution_matches_serial(self):
        subtopics = SubtopicList(QUERY.query_id, tuple(f"s{i}" for i in range(6)), "m")
        yes = {"s1", "s3", "s5"}
        serial = assess_subtopics(
            QUERY, subtopics, "text",
            make_judge(MockJudgeBackend(reply_fn=subtopic_reply_fn(yes))),
        )
        threaded = assess_subtopics(
            QUERY, subtopics, "text",
            make_judge(MockJudgeBackend(reply_fn=subtopic_reply_fn(yes))),
            max_workers=4,
        )
        assert serial == threaded

    def test_score_invariants(self):
        with pytest.raises(MethodError):
            SubtopicScore(positives=5, denominator=4)
        with pytest.raises(MethodError):
            SubtopicScore(positives=-1, denominator=4)
        with pytest.raises(MethodError):
            SubtopicScore(positives=3, denominator=4, failures=2)

    @given(st.integers(min_value=1, max_value=12))
    def test_value_non_decreasing_in_positives(self, n_subtopics):
        denominator = n_subtopics + 1
        values = [SubtopicScore(p, denominator).value for p in range(denominator + 1)]
        assert values == sorted(values)
        assert values[0] == 0.0
        assert values[-1] == 1.0


def preference_reply_fn(first_when_a_first, first_when_b_first):
    """Script the two orientations: bindings carry which text is passage_a."""

    def reply(request, prompt):
        if request.bindings["passage_a"] == "text A":
            return "Response 1" if first_when_a_first else "Response 2"
        return "Response 1" if first_when_b_first else "Response 2"

    return reply


class TestPreference:
    def run(self, trial_1_first: bool, trial_2_first: bool) -> PreferenceOutcome:
        backend = MockJudgeBackend(
            reply_fn=preference_reply_fn(trial_1_first, trial_2_first)
        )
        judge = make_judge(backend)
        outcome = assess_preference(QUERY, "text A", "text B", judge)
        assert backend.calls == 2
        return outcome

    def test_a_wins_both_orderings(self):
        outcome = self.run(trial_1_first=True, trial_2_first=False)
        assert outcome.winner == "A"
        assert (outcome.trial_1, outcome.trial_2) == ("first", "second")

    def test_b_wins_both_orderings(self):
        outcome = self.run(trial_1_first=False, trial_2_first=True)
        assert outcome.winner == "B"

    def test_position_bias_first_slot_is_tie(self):
        assert self.run(trial_1_first=True, trial_2_first=True).winner == "tie"

    def test_position_bias_second_slot_is_tie(self):
        assert self.run(trial_1_first=False, trial_2_first=False).winner == "tie"

    def test_identical_texts_tie_with_zero_calls(self):
        backend = MockJudgeBackend(default="Response 1")
        judge = make_judge(backend)
        outcome = assess_preference(QUERY, "same words", "same words", judge)
        assert outcome.winner == "tie"
        assert outcome.trial_1 is None and outcome.trial_2 is None
        assert backend.calls == 0
        assert len(judge.log) == 0

    def test_empty_side_rejected(self):
        judge = make_judge(MockJudgeBackend(default="Response 1"))
        with pytest.raises(MethodError):
            assess_preference(QUERY, "", "text B", judge)

    @given(st.booleans(), st.booleans())
    def test_antisymmetry_under_operand_swap(self, a_first_reply, b_first_reply):
        # scripted single-trial outcomes keyed by which text sits in slot 1
        def reply(request, prompt):
            if request.bindings["passage_a"] == "text A":
                return "Response 1" if a_first_reply else "Response 2"
            return "Response 1" if b_first_reply else "Response 2"

        forward = assess_preference(
            QUERY, "text A", "text B", make_judge(MockJudgeBackend(reply_fn=reply))
        )
        backward = assess_preference(
            QUERY, "text B", "text A", make_judge(MockJudgeBackend(reply_fn=reply))
        )
        expected = {"A": "B", "B": "A", "tie": "tie"}[forward.winner]
        assert backward.winner == expected

    def test_outcome_invariant_enforced(self):
        with pytest.raises(MethodError):
            PreferenceOutcome(winner="A", trial_1="first", trial_2="first")
        with pytest.raises(MethodError):
            PreferenceOutcome(winner="B", trial_1=None, trial_2=None)
        with pytest.raises(MethodError):
            PreferenceOutcome(winner="A", trial_1="first", trial_2=None)

    def test_winner_rule_table(self):
        assert winner_from_trials("first", "second") == "A"
        assert winner_from_trials("second", "first") == "B"
        assert winner_from_trials("first", "first") == "tie"
        assert winner_from_trials("second", "second") == "tie"


class TestCosine:
    def test_identity(self):
        v = np.array([0.3, -1.2, 2.0])
        assert cosine_similarity(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine_similarity(
            np.array([1.0, 0.0]), np.array([0.0, 5.0])
        ) == pytest.approx(0.0, abs=1e-12)

    def test_antipodal(self):
        v = np.array([1.0, 2.0, 3.0])
        assert cosine_similarity(v, -v) == pytest.approx(-1.0, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(MethodError):
            cosine_similarity(np.ones(3), np.ones(4))

    def test_zero_vector(self):
        with pytest.raises(MethodError):
            cosine_similarity(np.zeros(3), np.ones(3))

    @given(
        st.lists(st.floats(-10, 10), min_size=3, max_size=3),
        st.lists(st.floats(-10, 10), min_size=3, max_size=3),
        st.floats(0.001, 1000),
    )
    def test_scale_invariance(self, u, v, a):
        u, v = np.array(u), np.array(v)
        if np.linalg.norm(u) < 1e-6 or np.linalg.norm(v) < 1e-6:
            return
        assert cosine_similarity(a * u, v) == pytest.approx(
            cosine_similarity(u, v), abs=1e-9
        )

    def test_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            u, v = rng.standard_normal(8), rng.standard_normal(8)
            assert -1.0 <= cosine_similarity(u, v) <= 1.0
