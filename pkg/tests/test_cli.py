import json
import re

import pytest

from judgemeta.benchmark import save_benchmark
from judgemeta.cli import main
from conftest import make_global_bench, make_local_bench

RATING_RESPONSE = "Analysis: ok.\nRating: {}"
SCORE_RESPONSE = "Analysis: ok.\nScore: {}"


def write_script(path, patterns):
    path.write_text(json.dumps({"patterns": patterns}))
    return str(path)


def rating_patterns(bench):
    return [
        {
            "contains": t.text,
            "responses": RATING_RESPONSE.format(rating),
        }
        for sid in bench.entries
        for rating, targets in bench.entries[sid].items()
        for t in targets
    ]


def score_patterns(bench, best=10, step=2):
    seen = []
    for seq in bench.sequences.values():
        for t in seq:
            seen.append({
                "contains": t.text,
                "responses": SCORE_RESPONSE.format(
                    best - step * t.provenance.error_count
                ),
            })
    return seen


def pair_patterns(texts_by_quality):
    """Ordered-pair verdict rules from a {text: quality} table."""
    rules = []
    for a, qa in texts_by_quality.items():
        for b, qb in texts_by_quality.items():
            if a == b:
                continue
            verdict = "A > B" if qa > qb else ("A < B" if qa < qb else "A = B")
            rules.append({
                "pattern": (
                    r" A ###\n" + re.escape(a) + r"\n\n### \w+ B ###\n"
                    + re.escape(b) + r"\n"
                ),
                "responses": f"Analysis: ok.\nJudgment: {verdict}",
            })
    return rules


@pytest.fixture
def global_setup(small_aspect, tmp_path):
    bench = make_global_bench(small_aspect, n_sources=2, per_rating=1)
    bench_path = tmp_path / "global.jsonl"
    save_benchmark(bench, bench_path)
    script = write_script(tmp_path / "script.json", rating_patterns(bench))
    return bench, str(bench_path), script, tmp_path


@pytest.fixture
def local_setup(small_aspect, tmp_path):
    bench = make_local_bench(small_aspect, n_sources=2, length=4)
    bench_path = tmp_path / "local.jsonl"
    save_benchmark(bench, bench_path)
    return bench, str(bench_path), tmp_path


class TestJudgeGlobal:
    def test_perfect_rater_and_reports(self, global_setup):
        bench, bench_path, script, tmp = global_setup
        out = tmp / "run.jsonl"
        code = main([
            "judge-global", "--benchmark", bench_path, "--out", str(out),
            "--scripted", script, "--n-samples", "1",
            "--min-valid-samples", "1",
            "--report-prefix", str(tmp / "report"),
            "--manifest", str(tmp / "manifest.json"),
        ])
        assert code == 0
        records = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(records) == 6
        cem_payload = json.loads((tmp / "report.cem.json").read_text())
        assert cem_payload == {"cem": 1.0}
        assert (tmp / "report.confusion.csv").exists()
        manifest = json.loads((tmp / "manifest.json").read_text())
        assert manifest["command"] == "judge-global"
        assert len(manifest["usage"]) == 6
        assert "judge_rating" in manifest["template_digests"]

    def test_metrics_recomputes_offline(self, global_setup):
        bench, bench_path, script, tmp = global_setup
        out = tmp / "run.jsonl"
        main([
            "judge-global", "--benchmark", bench_path, "--out", str(out),
            "--scripted", script, "--n-samples", "1",
            "--min-valid-samples", "1",
        ])
        metrics_out = tmp / "metrics.json"
        code = main([
            "metrics", "--benchmark", bench_path, "--run", str(out),
            "--kind", "global", "--out", str(metrics_out),
        ])
        assert code == 0
        payload = json.loads(metrics_out.read_text())
        assert payload["cem"] == 1.0

    def test_config_file_supplies_options(self, global_setup):
        bench, bench_path, script, tmp = global_setup
        config = tmp / "config.json"
        config.write_text(json.dumps({
            "judge-global": {
                "benchmark": bench_path,
                "out": str(tmp / "run.jsonl"),
                "scripted": script,
                "n_samples": 1,
                "min_valid_samples": 1,
            }
        }))
        assert main(["judge-global", "--config", str(config)]) == 0
        assert (tmp / "run.jsonl").exists()


class TestJudgeLocal:
    def test_score_mode(self, local_setup):
        bench, bench_path, tmp = local_setup
        script = write_script(tmp / "script.json", score_patterns(bench))
        out = tmp / "run.jsonl"
        code = main([
            "judge-local", "--benchmark", bench_path, "--out", str(out),
            "--scripted", script, "--n-samples", "1",
            "--min-valid-samples", "1",
            "--report-prefix", str(tmp / "report"),
        ])
        assert code == 0
        accuracy = json.loads((tmp / "report.accuracy.json").read_text())
        assert accuracy == {"adjacent_accuracy": 1.0}
        grid = json.loads((tmp / "report.grid.json").read_text())
        assert grid["type"] == "pair_accuracy_grid"

    def test_compare_mode_via_judge_compare_command(self, local_setup):
        bench, bench_path, tmp = local_setup
        qualities = {
            t.text: -t.provenance.error_count
            for seq in bench.sequences.values()
            for t in seq
        }
        script = write_script(tmp / "script.json", pair_patterns(qualities))
        out = tmp / "run.jsonl"
        code = main([
            "judge-compare", "--benchmark", bench_path, "--out", str(out),
            "--scripted", script, "--n-samples", "1",
            "--min-valid-samples", "1",
            "--report-prefix", str(tmp / "report"),
        ])
        assert code == 0
        accuracy = json.loads((tmp / "report.accuracy.json").read_text())
        assert accuracy["compare_accuracy"] == 1.0
        assert accuracy["per_offset"] == {"1": 1.0}

    def test_metrics_local_kind(self, local_setup):
        bench, bench_path, tmp = local_setup
        script = write_script(tmp / "script.json", score_patterns(bench))
        out = tmp / "run.jsonl"
        main([
            "judge-local", "--benchmark", bench_path, "--out", str(out),
            "--scripted", script, "--n-samples", "1",
            "--min-valid-samples", "1",
        ])
        metrics_out = tmp / "metrics.json"
        code = main([
            "metrics", "--benchmark", bench_path, "--run", str(out),
            "--kind", "local", "--out", str(metrics_out),
        ])
        assert code == 0
        payload = json.loads(metrics_out.read_text())
        assert payload["adjacent_accuracy"] == 1.0
        assert len(payload["grid"]) == 6

    def test_sweep_ranges(self, local_setup):
        bench, bench_path, tmp = local_setup
        script = write_script(tmp / "script.json",
                              score_patterns(bench, best=4, step=1))
        out = tmp / "sweep.csv"
        code = main([
            "sweep-ranges", "--benchmark", bench_path, "--out", str(out),
            "--scripted", script, "--ranges", "5,10", "--max-offset", "3",
            "--n-samples", "1", "--min-valid-samples", "1",
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "score_max,offset,accuracy"
        # 2 ranges x 3 offsets, all perfect
        assert len(lines) == 7
        assert all(line.endswith("1.0000") for line in lines[1:])


class TestAnchorCommands:
    def _candidates_file(self, tmp_path):
        lines = []
        for r in (1, 2, 3):
            for i in range(2):
                lines.append(json.dumps({
                    "source_id": "s0",
                    "source_text": "article zero",
                    "target_id": f"cand{r}.{i}",
                    "target_text": ("anchor " + "[err] " * (3 - r) + f"v{i}").strip(),
                    "human_ratings": [r, r, r],
                    "llm_ratings": [r, r],
                }))
        path = tmp_path / "candidates.jsonl"
        path.write_text("\n".join(lines) + "\n")
        return str(path)

    def test_select_then_estimate(self, tmp_path):
        candidates = self._candidates_file(tmp_path)
        anchors_out = tmp_path / "anchors.jsonl"
        code = main([
            "select-anchors", "--task", "summeval", "--aspect", "coherence",
            "--candidates", candidates, "--out", str(anchors_out),
            "--per-rating-count", "2",
        ])
        # summeval scale is 1-5 and the file only covers 1-3
        assert code == 2

        # Rebuild the anchors on the narrower 1-3 scale via the library.
        from judgemeta.anchoring import (
            AnchorCandidate, AnchorSet, save_anchor_sets,
        )
        from judgemeta.benchmark import (
            EvaluationScale, HumanAnnotated, Source, Target,
        )
        sets = {}
        for r in (1, 2, 3):
            members = []
            for i in range(2):
                text = ("anchor " + "[err] " * (3 - r) + f"v{i}").strip()
                members.append(AnchorCandidate(
                    Target(f"cand{r}.{i}", "s0", text,
                           HumanAnnotated((r, r, r))),
                    (r, r),
                ))
            sets[r] = AnchorSet(r, members)
        save_anchor_sets(sets, {"s0": Source("s0", "article zero")},
                         "summeval", "coherence", EvaluationScale(1, 3),
                         anchors_out)

        targets = tmp_path / "targets.jsonl"
        targets.write_text(json.dumps({
            "source_id": "s0",
            "source_text": "article zero",
            "target_id": "new1",
            "target_text": "candidate [err] fresh",
        }) + "\n")
        qualities = {}
        for r in (1, 2, 3):
            for i in range(2):
                text = ("anchor " + "[err] " * (3 - r) + f"v{i}").strip()
                qualities[text] = -(3 - r)
        qualities["candidate [err] fresh"] = -1
        script = write_script(tmp_path / "script.json",
                              pair_patterns(qualities))
        estimates_out = tmp_path / "estimates.jsonl"
        code = main([
            "estimate", "--task", "summeval", "--aspect", "coherence",
            "--anchors", str(anchors_out), "--targets", str(targets),
            "--out", str(estimates_out), "--scripted", script,
        ])
        assert code == 0
        record = json.loads(estimates_out.read_text().splitlines()[0])
        assert record == {
            "target_id": "new1",
            "rating": 2,
            "scores": {"1": -1.0, "2": 2.0, "3": -1.0},
        }


class TestConstructCommands:
    def test_construct_local(self, tmp_path):
        sources = tmp_path / "sources.jsonl"
        sources.write_text(
            json.dumps({"id": "s0", "text": "article zero"}) + "\n"
        )
        ref_short = "base summary"
        ref_long = "base summary with more words attached"
        chain = [ref_long]
        for step in range(1, 4):
            chain.append(chain[-1] + " [err]")
        patterns = [{
            "contains": "Write a summary",
            "responses": [ref_short, ref_long],
        }]
        for current, following in zip(chain, chain[1:]):
            patterns.append({
                "pattern": r"### Original Summary ###\n"
                + re.escape(current) + r"\n",
                "responses": (
                    f"### Modified Summary ###\n{following}\n\n"
                    "### Location of New Error ###\nspot\n"
                ),
            })
        script = write_script(tmp_path / "script.json", patterns)
        out = tmp_path / "local.jsonl"
        code = main([
            "construct-local", "--task", "summeval", "--aspect", "coherence",
            "--sources", str(sources), "--out", str(out),
            "--scripted", script, "--n-reference-samples", "2",
            "--sequence-length", "4",
        ])
        assert code == 0
        from judgemeta.benchmark import load_benchmark

        bench = load_benchmark(out, "local")
        assert [t.text for t in bench.sequences["s0"]] == chain

    def test_construct_global(self, tmp_path):
        from judgemeta.anchoring import (
            AnchorCandidate, AnchorSet, save_anchor_sets,
        )
        from judgemeta.benchmark import (
            EvaluationScale, HumanAnnotated, Source, Target,
        )

        sources = tmp_path / "sources.jsonl"
        sources.write_text(
            json.dumps({"id": "s0", "text": "article zero"}) + "\n"
        )
        anchor_texts = {}
        sets = {}
        for r in (1, 2, 3):
            text = ("anchor reference" + " [err]" * (3 - r)).strip()
            anchor_texts[text] = -(3 - r)
            sets[r] = AnchorSet(r, [AnchorCandidate(
                Target(f"anchor{r}", "s0", text, HumanAnnotated((r, r))),
                (r, r),
            )])
        anchors = tmp_path / "anchors.jsonl"
        save_anchor_sets(sets, {"s0": Source("s0", "article zero")},
                         "summeval", "coherence", EvaluationScale(1, 3),
                         anchors)

        ref = "generated summary with plenty of detail words"
        ref_b = "generated summary shorter"
        patterns = [
            {"contains": "Write a summary", "responses": [ref, ref_b]},
            {
                "pattern": r"\*\*1 non-overlapping errors\*\*",
                "responses": (
                    f"### Modified Summary ###\n{ref} [err]\n\n"
                    "### Location of Errors ###\nspot\n"
                ),
            },
            {
                "pattern": r"\*\*2 non-overlapping errors\*\*",
                "responses": (
                    f"### Modified Summary ###\n{ref} [err] [err]\n\n"
                    "### Location of Errors ###\n1. one\n2. two\n"
                ),
            },
        ]
        qualities = dict(anchor_texts)
        qualities[f"{ref} [err]"] = -1
        qualities[f"{ref} [err] [err]"] = -2
        patterns.extend(pair_patterns(qualities))
        script = write_script(tmp_path / "script.json", patterns)
        out = tmp_path / "global.jsonl"
        code = main([
            "construct-global", "--task", "summeval", "--aspect", "coherence",
            "--sources", str(sources), "--anchors", str(anchors),
            "--out", str(out), "--scripted", script,
            "--n-reference-samples", "2", "--targets-per-rating", "1",
        ])
        assert code == 0
        from judgemeta.benchmark import load_benchmark

        bench = load_benchmark(out, "global")
        assert [t.text for t in bench.entries["s0"][3]] == [ref]
        assert bench.entries["s0"][2][0].text == f"{ref} [err]"
        assert bench.entries["s0"][1][0].text == f"{ref} [err] [err]"


class TestRank:
    def test_rank_command(self, tmp_path):
        results = tmp_path / "results.json"
        results.write_text(json.dumps({
            "a": {"b1": {"x": 0.9}},
            "b": {"b1": {"x": 0.4}},
        }))
        out = tmp_path / "rank.csv"
        assert main(["rank", "--results", str(results),
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[1].startswith("a,")
        assert (tmp_path / "rank.csv.json").exists()


class TestExitCodes:
    def test_missing_required_option(self, capsys):
        assert main(["judge-global"]) == 2
        assert "requires" in capsys.readouterr().err

    def test_scripted_miss_is_runtime_error(self, global_setup, capsys):
        bench, bench_path, _, tmp = global_setup
        empty_script = write_script(tmp / "empty.json", [])
        code = main([
            "judge-global", "--benchmark", bench_path,
            "--out", str(tmp / "run.jsonl"), "--scripted", empty_script,
            "--n-samples", "1", "--min-valid-samples", "1",
        ])
        assert code == 3

    def test_bad_benchmark_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"kind": "local"}\n')
        code = main([
            "judge-global", "--benchmark", str(bad),
            "--out", str(tmp_path / "o"), "--scripted",
            write_script(tmp_path / "s.json", []),
        ])
        assert code == 2
