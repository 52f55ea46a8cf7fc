import pytest

from judgemeta.benchmark import Constructed, EvaluationScale, Source, Target
from judgemeta.client import ScriptedClient, ScriptRule
from judgemeta.judge import (
    A_BETTER,
    B_BETTER,
    EQUAL,
    EvalRunError,
    InsufficientSamplesError,
    JudgeConfig,
    judge_compare,
    judge_rating,
    judge_score,
    run_global_eval,
    run_local_eval,
    write_run_records,
)
from judgemeta.registry import get_aspect
from conftest import (
    comparing_client,
    err_count_comparing_client,
    first_position_biased_client,
    make_global_bench,
    make_local_bench,
    rating_client,
    scoring_client,
)

COHERENCE = get_aspect("summeval", "coherence")
SOURCE = Source("s0", "an article")


def target(text, tid="t0"):
    return Target(tid, "s0", text, Constructed(0, ()))


class TestJudgeConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            JudgeConfig(n_samples=0)
        with pytest.raises(ValueError):
            JudgeConfig(n_samples=3, min_valid_samples=4)
        with pytest.raises(ValueError):
            JudgeConfig(min_valid_samples=0)


class TestJudgeScore:
    def test_mean_of_valid_samples(self):
        client = ScriptedClient([ScriptRule(
            ["Score: 6", "Score: 7", "not parseable", "Score: 8"],
            contains="### Your Evaluation",
        )])
        cfg = JudgeConfig(mode="score", n_samples=4, min_valid_samples=3)
        out = judge_score(target("text"), SOURCE, COHERENCE, "summeval", cfg,
                          client)
        assert out.aggregate == pytest.approx(7.0)
        assert out.valid_count == 3
        assert out.key == "t0"
        assert len(out.samples) == 4

    def test_parse_retries_refill_failed_slots(self):
        client = ScriptedClient([ScriptRule(
            ["garbage", "Score: 5"], contains="### Your Evaluation",
        )])
        cfg = JudgeConfig(mode="score", n_samples=1, min_valid_samples=1,
                          parse_retries=1)
        out = judge_score(target("text"), SOURCE, COHERENCE, "summeval", cfg,
                          client)
        assert out.aggregate == 5.0
        assert [s.parsed for s in out.samples] == [None, 5.0]

    def test_insufficient_valid_samples(self):
        client = ScriptedClient([ScriptRule("nonsense",
                                            contains="### Your Evaluation")])
        cfg = JudgeConfig(mode="score", n_samples=3, min_valid_samples=2)
        with pytest.raises(InsufficientSamplesError):
            judge_score(target("text"), SOURCE, COHERENCE, "summeval", cfg,
                        client)

    def test_mode_guard(self):
        cfg = JudgeConfig(mode="rating")
        with pytest.raises(ValueError):
            judge_score(target("x"), SOURCE, COHERENCE, "summeval", cfg,
                        ScriptedClient())

    def test_score_range_flows_into_prompt_and_parser(self):
        seen = {}

        def respond(req):
            seen["prompt"] = req.prompt
            return "Score: 42"

        client = ScriptedClient([ScriptRule(respond, contains="Score")])
        cfg = JudgeConfig(mode="score", score_min=1, score_max=100,
                          n_samples=1, min_valid_samples=1)
        out = judge_score(target("x"), SOURCE, COHERENCE, "summeval", cfg,
                          client)
        assert "from 1 to 100" in seen["prompt"]
        assert out.aggregate == 42.0


class TestJudgeRating:
    def test_mode_aggregation_with_low_tie_break(self):
        client = ScriptedClient([ScriptRule(
            ["Rating: 4", "Rating: 2", "Rating: 4", "Rating: 2"],
            contains="### Your Evaluation",
        )])
        cfg = JudgeConfig(mode="rating", n_samples=4, min_valid_samples=4)
        out = judge_rating(target("text"), SOURCE, COHERENCE, "summeval", cfg,
                           client)
        assert out.aggregate == 2

    def test_native_scale_rescaling(self):
        client = ScriptedClient([ScriptRule("Rating: 7",
                                            contains="### Your Evaluation")])
        cfg = JudgeConfig(mode="rating", n_samples=2, min_valid_samples=2,
                          native_scale=EvaluationScale(1, 10))
        out = judge_rating(target("text"), SOURCE, COHERENCE, "summeval", cfg,
                           client)
        # 7 on 1-10 maps to 3.67 on 1-5, rounded to 4
        assert out.aggregate == 4

    def test_out_of_scale_samples_are_invalid(self):
        client = ScriptedClient([ScriptRule(
            ["Rating: 9", "Rating: 3", "Rating: 3"],
            contains="### Your Evaluation",
        )])
        cfg = JudgeConfig(mode="rating", n_samples=3, min_valid_samples=2)
        out = judge_rating(target("text"), SOURCE, COHERENCE, "summeval", cfg,
                           client)
        assert out.aggregate == 3
        assert out.valid_count == 2


class TestJudgeCompare:
    def _cfg(self, n_samples=2):
        return JudgeConfig(mode="compare", n_samples=n_samples,
                           min_valid_samples=1)

    def test_neutral_preference_recovered(self):
        client = comparing_client({"good": 1.0, "bad": 0.0})
        out = judge_compare(target("good", "a"), target("bad", "b"), SOURCE,
                            COHERENCE, "summeval", self._cfg(), client)
        assert out.aggregate == A_BETTER
        assert out.key == "a|b"
        out = judge_compare(target("bad", "a"), target("good", "b"), SOURCE,
                            COHERENCE, "summeval", self._cfg(), client)
        assert out.aggregate == B_BETTER

    def test_position_bias_cancels_to_equal(self):
        client = first_position_biased_client()
        out = judge_compare(target("x", "a"), target("y", "b"), SOURCE,
                            COHERENCE, "summeval", self._cfg(), client)
        assert out.aggregate == EQUAL
        # half the normalized verdicts say A, half say B
        assert out.valid_count == 4

    def test_swapped_ordering_issues_both_prompts(self):
        prompts = []

        def respond(req):
            prompts.append(req.prompt)
            return "Judgment: A = B"

        client = ScriptedClient([ScriptRule(respond, contains="Judgment")])
        judge_compare(target("first text", "a"), target("second text", "b"),
                      SOURCE, COHERENCE, "summeval", self._cfg(1), client)
        assert len(prompts) == 2
        assert "### Summary A ###\nfirst text" in prompts[0]
        assert "### Summary A ###\nsecond text" in prompts[1]

    def test_strict_majority_required(self):
        # normalized votes split 1 A / 1 B / 2 equal -> no strict majority
        client = ScriptedClient([ScriptRule(
            ["Judgment: A > B", "Judgment: A = B"], contains="Judgment",
        )])
        out = judge_compare(target("x", "a"), target("y", "b"), SOURCE,
                            COHERENCE, "summeval", self._cfg(), client)
        assert out.aggregate == EQUAL

    def test_cross_source_pair_rejected(self):
        other = Target("z", "s9", "text", Constructed(0, ()))
        with pytest.raises(ValueError, match="share a source"):
            judge_compare(target("x"), other, SOURCE, COHERENCE, "summeval",
                          self._cfg(), ScriptedClient())

    def test_unparseable_verdicts_can_exhaust_minimum(self):
        client = ScriptedClient([ScriptRule("mumble", contains="Judgment")])
        with pytest.raises(InsufficientSamplesError):
            judge_compare(target("x", "a"), target("y", "b"), SOURCE,
                          COHERENCE, "summeval", self._cfg(), client)


class TestRunGlobalEval:
    def _rating_table(self, bench):
        return {
            t.text: r
            for sid in bench.entries
            for r, targets in bench.entries[sid].items()
            for t in targets
        }

    def test_oracle_rater_scores_cem_one(self, small_aspect):
        bench = make_global_bench(small_aspect, n_sources=2, per_rating=2)
        client = rating_client(self._rating_table(bench))
        cfg = JudgeConfig(mode="rating", n_samples=1, min_valid_samples=1)
        result = run_global_eval(bench, cfg, client)
        assert result.cem_score == 1.0
        assert result.confusion_matrix.total == 12
        assert not result.failed_targets
        assert len(result.outputs) == 12

    def test_failures_over_tolerance_raise(self, small_aspect):
        bench = make_global_bench(small_aspect, n_sources=1, per_rating=1)
        table = self._rating_table(bench)
        broken = dict(table)
        broken[bench.entries["s0"][1][0].text] = "x"  # unparseable rating
        client = rating_client(broken)
        cfg = JudgeConfig(mode="rating", n_samples=1, min_valid_samples=1)
        with pytest.raises(EvalRunError):
            run_global_eval(bench, cfg, client)
        cfg = JudgeConfig(mode="rating", n_samples=1, min_valid_samples=1,
                          failure_tolerance=0.5)
        result = run_global_eval(bench, cfg, client)
        assert result.failed_targets == ["s0:r1:0"]


class TestRunLocalEval:
    def test_score_mode_with_oracle_scorer(self, small_aspect):
        bench = make_local_bench(small_aspect, n_sources=2, length=4)
        scores = {
            t.text: 10 - 2 * t.provenance.error_count
            for seq in bench.sequences.values()
            for t in seq
        }
        client = scoring_client(scores)
        cfg = JudgeConfig(mode="score", n_samples=1, min_valid_samples=1)
        result = run_local_eval(bench, cfg, client)
        assert result.adjacent_accuracy == 1.0
        assert result.grid.offset_accuracy(1) == 1.0
        assert len(result.scores) == 8

    def test_compare_mode_adjacent_pairs(self, small_aspect):
        bench = make_local_bench(small_aspect, n_sources=2, length=4)
        texts = {
            t.id: t.text + " " + "[err] " * t.provenance.error_count
            for seq in bench.sequences.values()
            for t in seq
        }
        for sid, seq in bench.sequences.items():
            bench.sequences[sid] = [
                Target(t.id, t.source_id, texts[t.id], t.provenance)
                for t in seq
            ]
        client = err_count_comparing_client()
        cfg = JudgeConfig(mode="compare", n_samples=1, min_valid_samples=1)
        result = run_local_eval(bench, cfg, client, pair_offset=1)
        assert result.accuracy == 1.0
        assert list(result.per_offset_accuracy) == [1]
        assert len(result.verdicts) == 6  # 3 adjacent pairs x 2 sources
        result = run_local_eval(bench, cfg, client, pair_offset=None)
        assert sorted(result.per_offset_accuracy) == [1, 2, 3]
        assert result.accuracy == 1.0

    def test_unknown_mode_rejected(self, small_aspect):
        bench = make_local_bench(small_aspect)
        cfg = JudgeConfig(mode="rating")
        with pytest.raises(ValueError):
            run_local_eval(bench, cfg, ScriptedClient())


class TestRunRecords:
    def test_round_trippable_json_lines(self, small_aspect, tmp_path):
        import json

        bench = make_local_bench(small_aspect, n_sources=1, length=4)
        scores = {
            t.text: 9.0 - t.provenance.error_count
            for t in bench.sequences["s0"]
        }
        cfg = JudgeConfig(mode="score", n_samples=2, min_valid_samples=1)
        result = run_local_eval(bench, cfg, scoring_client(scores))
        path = tmp_path / "run.jsonl"
        write_run_records(path, result.outputs)
        records = [json.loads(line) for line in path.read_text().splitlines()]
        assert [r["key"] for r in records] == [t.id for t in
                                               bench.sequences["s0"]]
        assert all(len(r["samples"]) == 2 for r in records)
        assert records[0]["aggregate"] == 9.0
