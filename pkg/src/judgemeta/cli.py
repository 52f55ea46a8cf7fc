"""Command-line entry point binding the pipeline stages into reproducible runs.

Each command is a thin wrapper over the library, reads/writes only declared
files, validates its configuration before any network activity, and writes a
manifest capturing the fully resolved parameters, template digests, and
usage. With a warm cache, rerunning a command issues zero live calls.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from . import prompts
from .anchoring import (
    AnchorCandidate,
    AnchorSelectionConfig,
    estimate_rating,
    load_anchor_sets,
    make_judge_comparator,
    save_anchor_sets,
    select_anchors,
)
from .benchmark import (
    EvaluationScale,
    HumanAnnotated,
    Source,
    Target,
    load_benchmark,
    save_benchmark,
)
from .client import (
    CachedClient,
    ClientError,
    ScriptedClient,
    UsageTracker,
    usage_report,
)
from .construction import ConstructionConfig, assemble_global, assemble_local
from .judge import JudgeConfig, run_global_eval, run_local_eval, write_run_records
from .metrics import adjacent_pairwise_accuracy, cem, confusion, pair_accuracy_grid
from .registry import get_aspect
from .report import emit, rank_evaluators

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    pass


def _load_config_section(path: str | None, command: str) -> dict:
    if not path:
        return {}
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return data.get(command, {})


def _merged(args: argparse.Namespace, section: dict, keys: list[str]) -> dict:
    """Config-file values overridden by explicit command-line flags."""
    out = dict(section)
    for key in keys:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            out[key] = value
    return out


def _build_client(options: dict, tracker: UsageTracker):
    scripted = options.get("scripted")
    if scripted:
        client = ScriptedClient.from_file(scripted, tracker=tracker)
    else:
        from .client import HttpClient

        client = HttpClient(tracker=tracker)
    cache_dir = options.get("cache_dir")
    if cache_dir:
        client = CachedClient(client, cache_dir)
    return client


def _template_digests(task: str) -> dict[str, str]:
    digests = {}
    for template_id in (
        "reference",
        "inject_simultaneous",
        "inject_iterative",
        "judge_score",
        "judge_rating",
        "judge_compare",
    ):
        text = prompts.get_template(task, template_id)
        digests[template_id] = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return digests


def _write_manifest(path: str | None, command: str, options: dict,
                    tracker: UsageTracker, task: str | None = None) -> None:
    if not path:
        return
    manifest = {
        "command": command,
        "options": {k: v for k, v in sorted(options.items())},
        "usage": tracker.to_manifest(),
    }
    if task:
        manifest["template_digests"] = _template_digests(task)
    Path(path).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _read_sources(path: str) -> list[Source]:
    sources = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            record = json.loads(line)
            sources.append(
                Source(record["id"], record["text"], record.get("addition"))
            )
    return sources


# ---------------------------------------------------------------------------
# Commands


def cmd_construct_global(args) -> int:
    section = _load_config_section(args.config, "construct-global")
    options = _merged(args, section, [
        "task", "aspect", "sources", "anchors", "out", "scripted", "cache_dir",
        "seed", "targets_per_rating", "n_reference_samples", "manifest",
    ])
    for required in ("task", "aspect", "sources", "anchors", "out"):
        if not options.get(required):
            raise ConfigError(f"construct-global requires --{required}")
    tracker = UsageTracker()
    client = _build_client(options, tracker)
    cfg = ConstructionConfig(
        task=options["task"],
        aspect=options["aspect"],
        seed=int(options.get("seed", 0)),
        targets_per_rating=int(options.get("targets_per_rating", 2)),
        n_reference_samples=int(options.get("n_reference_samples", 10)),
    )
    anchor_sets, anchor_sources, header = load_anchor_sets(options["anchors"])
    scale = EvaluationScale(header["scale_min"], header["scale_max"])
    aspect = get_aspect(cfg.task, cfg.aspect, scale=scale)
    sources = _read_sources(options["sources"])
    judge_cfg = JudgeConfig(
        model=cfg.comparator_model, mode="compare", n_samples=1, min_valid_samples=1
    )
    source_lookup = {s.id: s for s in sources} | anchor_sources
    tracker.stage = "rating_estimation"
    comparator = make_judge_comparator(
        cfg.task, aspect, judge_cfg, client, source_lookup
    )
    tracker.stage = "construction"
    bench, coverage = assemble_global(
        sources, aspect, cfg, anchor_sets, comparator, client
    )
    save_benchmark(bench, options["out"])
    if coverage.partial:
        print(f"partial benchmark: {len(coverage.unfilled)} unfilled slots",
              file=sys.stderr)
        for slot in coverage.unfilled:
            print(f"  {slot}", file=sys.stderr)
    _write_manifest(options.get("manifest"), "construct-global", options,
                    tracker, cfg.task)
    return EXIT_OK


def cmd_construct_local(args) -> int:
    section = _load_config_section(args.config, "construct-local")
    options = _merged(args, section, [
        "task", "aspect", "sources", "out", "scripted", "cache_dir", "seed",
        "sequence_length", "n_reference_samples", "manifest",
    ])
    for required in ("task", "aspect", "sources", "out"):
        if not options.get(required):
            raise ConfigError(f"construct-local requires --{required}")
    tracker = UsageTracker(stage="construction")
    client = _build_client(options, tracker)
    cfg = ConstructionConfig(
        task=options["task"],
        aspect=options["aspect"],
        seed=int(options.get("seed", 0)),
        sequence_length=int(options.get("sequence_length", 4)),
        n_reference_samples=int(options.get("n_reference_samples", 10)),
    )
    aspect = get_aspect(cfg.task, cfg.aspect)
    bench = assemble_local(_read_sources(options["sources"]), aspect, cfg, client)
    save_benchmark(bench, options["out"])
    _write_manifest(options.get("manifest"), "construct-local", options,
                    tracker, cfg.task)
    return EXIT_OK


def cmd_select_anchors(args) -> int:
    section = _load_config_section(args.config, "select-anchors")
    options = _merged(args, section, [
        "task", "aspect", "candidates", "out", "per_rating_count", "manifest",
    ])
    for required in ("task", "aspect", "candidates", "out"):
        if not options.get(required):
            raise ConfigError(f"select-anchors requires --{required}")
    aspect = get_aspect(options["task"], options["aspect"])
    candidates = []
    sources = {}
    for line in Path(options["candidates"]).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        sid = record["source_id"]
        sources.setdefault(
            sid, Source(sid, record["source_text"], record.get("addition"))
        )
        target = Target(
            record["target_id"], sid, record["target_text"],
            HumanAnnotated(tuple(record["human_ratings"])),
        )
        candidates.append(AnchorCandidate(target, tuple(record["llm_ratings"])))
    cfg = AnchorSelectionConfig(
        per_rating_count=int(options.get("per_rating_count", 5))
    )
    anchor_sets = select_anchors(candidates, cfg, aspect.scale)
    save_anchor_sets(
        anchor_sets, sources, options["task"], options["aspect"],
        aspect.scale, options["out"],
    )
    tracker = UsageTracker()
    _write_manifest(options.get("manifest"), "select-anchors", options, tracker)
    return EXIT_OK


def cmd_estimate(args) -> int:
    section = _load_config_section(args.config, "estimate")
    options = _merged(args, section, [
        "task", "aspect", "anchors", "targets", "out", "scripted", "cache_dir",
        "manifest",
    ])
    for required in ("task", "aspect", "anchors", "targets", "out"):
        if not options.get(required):
            raise ConfigError(f"estimate requires --{required}")
    tracker = UsageTracker(stage="rating_estimation")
    client = _build_client(options, tracker)
    anchor_sets, anchor_sources, header = load_anchor_sets(options["anchors"])
    scale = EvaluationScale(header["scale_min"], header["scale_max"])
    aspect = get_aspect(options["task"], options["aspect"], scale=scale)
    judge_cfg = JudgeConfig(mode="compare", n_samples=1, min_valid_samples=1)
    lines_out = []
    sources = dict(anchor_sources)
    for line in Path(options["targets"]).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        sid = record["source_id"]
        sources.setdefault(
            sid, Source(sid, record["source_text"], record.get("addition"))
        )
        comparator = make_judge_comparator(
            options["task"], aspect, judge_cfg, client, sources
        )
        from .benchmark import Constructed

        target = Target(
            record["target_id"], sid, record["target_text"], Constructed(0, ())
        )
        estimate = estimate_rating(target, anchor_sets, comparator, scale)
        lines_out.append(json.dumps(
            {
                "target_id": target.id,
                "rating": estimate.rating,
                "scores": {str(r): s for r, s in sorted(estimate.scores.items())},
            },
            sort_keys=True,
        ))
    Path(options["out"]).write_text("\n".join(lines_out) + "\n", encoding="utf-8")
    _write_manifest(options.get("manifest"), "estimate", options, tracker)
    return EXIT_OK


def _judge_options(args, command: str) -> dict:
    section = _load_config_section(args.config, command)
    return _merged(args, section, [
        "benchmark", "out", "model", "scripted", "cache_dir", "n_samples",
        "min_valid_samples", "manifest", "report_prefix", "mode",
    ])


def cmd_judge_global(args) -> int:
    options = _judge_options(args, "judge-global")
    for required in ("benchmark", "out"):
        if not options.get(required):
            raise ConfigError(f"judge-global requires --{required}")
    tracker = UsageTracker(stage="judging")
    client = _build_client(options, tracker)
    bench = load_benchmark(options["benchmark"], "global")
    cfg = JudgeConfig(
        model=options.get("model", "judge"),
        mode="rating",
        n_samples=int(options.get("n_samples", 10)),
        min_valid_samples=int(options.get("min_valid_samples", 6)),
    )
    result = run_global_eval(bench, cfg, client)
    write_run_records(options["out"], result.outputs)
    prefix = options.get("report_prefix")
    if prefix:
        emit(result.confusion_matrix, "structured", f"{prefix}.confusion.json")
        emit(result.confusion_matrix, "tabular", f"{prefix}.confusion.csv")
        Path(f"{prefix}.cem.json").write_text(
            json.dumps({"cem": round(result.cem_score, 4)}) + "\n", encoding="utf-8"
        )
    _write_manifest(options.get("manifest"), "judge-global", options,
                    tracker, bench.task)
    return EXIT_OK


def cmd_judge_local(args) -> int:
    options = _judge_options(args, "judge-local")
    for required in ("benchmark", "out"):
        if not options.get(required):
            raise ConfigError(f"judge-local requires --{required}")
    mode = options.get("mode", "score")
    if mode not in ("score", "compare"):
        raise ConfigError(f"judge-local mode must be score or compare, got {mode!r}")
    tracker = UsageTracker(stage="judging")
    client = _build_client(options, tracker)
    bench = load_benchmark(options["benchmark"], "local")
    cfg = JudgeConfig(
        model=options.get("model", "judge"),
        mode=mode,
        n_samples=int(options.get("n_samples", 10)),
        min_valid_samples=int(options.get("min_valid_samples", 6)),
    )
    result = run_local_eval(bench, cfg, client)
    write_run_records(options["out"], result.outputs)
    prefix = options.get("report_prefix")
    if prefix:
        if mode == "score":
            emit(result.grid, "structured", f"{prefix}.grid.json")
            emit(result.grid, "tabular", f"{prefix}.grid.csv")
            Path(f"{prefix}.accuracy.json").write_text(
                json.dumps({"adjacent_accuracy": round(result.adjacent_accuracy, 4)})
                + "\n", encoding="utf-8",
            )
        else:
            Path(f"{prefix}.accuracy.json").write_text(
                json.dumps(
                    {
                        "compare_accuracy": round(result.accuracy, 4),
                        "per_offset": {
                            str(k): round(v, 4)
                            for k, v in result.per_offset_accuracy.items()
                        },
                    },
                    sort_keys=True,
                ) + "\n",
                encoding="utf-8",
            )
    _write_manifest(options.get("manifest"), "judge-local", options,
                    tracker, bench.task)
    return EXIT_OK


def cmd_judge_compare(args) -> int:
    args.mode = "compare"
    return cmd_judge_local(args)


def cmd_metrics(args) -> int:
    """Recompute metrics offline from persisted run records plus a benchmark."""
    section = _load_config_section(args.config, "metrics")
    options = _merged(args, section, ["benchmark", "run", "kind", "out"])
    for required in ("benchmark", "run", "kind", "out"):
        if not options.get(required):
            raise ConfigError(f"metrics requires --{required}")
    kind = options["kind"]
    bench = load_benchmark(options["benchmark"], kind)
    aggregates = {}
    for line in Path(options["run"]).read_text(encoding="utf-8").splitlines():
        if line.strip():
            record = json.loads(line)
            aggregates[record["key"]] = record["aggregate"]
    if kind == "global":
        gold, pred = [], []
        for rating, target in bench.all_targets():
            if target.id in aggregates:
                gold.append(rating)
                pred.append(int(aggregates[target.id]))
        payload = {
            "cem": round(cem(gold, pred, bench.aspect.scale), 4),
            "confusion": confusion(gold, pred, bench.aspect.scale).counts.tolist(),
        }
    else:
        scores = {k: float(v) for k, v in aggregates.items()}
        grid = pair_accuracy_grid(bench.sequences, scores)
        payload = {
            "adjacent_accuracy": round(
                adjacent_pairwise_accuracy(bench.sequences, scores), 4
            ),
            "grid": [
                {"low_errors": low, "high_errors": high, "wins": w, "total": t}
                for (low, high), (w, t) in sorted(grid.cells.items())
            ],
        }
    Path(options["out"]).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return EXIT_OK


def cmd_rank(args) -> int:
    section = _load_config_section(args.config, "rank")
    options = _merged(args, section, ["results", "out"])
    for required in ("results", "out"):
        if not options.get(required):
            raise ConfigError(f"rank requires --{required}")
    results = json.loads(Path(options["results"]).read_text(encoding="utf-8"))
    reports = rank_evaluators(results)
    emit(reports, "tabular", options["out"])
    emit(reports, "structured", str(options["out"]) + ".json")
    return EXIT_OK


def cmd_sweep_ranges(args) -> int:
    """Scoring-range sweep over pair-difference levels on a local benchmark."""
    section = _load_config_section(args.config, "sweep-ranges")
    options = _merged(args, section, [
        "benchmark", "out", "model", "scripted", "cache_dir", "ranges",
        "max_offset", "n_samples", "min_valid_samples", "manifest",
    ])
    for required in ("benchmark", "out"):
        if not options.get(required):
            raise ConfigError(f"sweep-ranges requires --{required}")
    ranges = [int(r) for r in str(options.get("ranges", "5,10,100")).split(",")]
    max_offset = int(options.get("max_offset", 5))
    tracker = UsageTracker(stage="judging")
    client = _build_client(options, tracker)
    bench = load_benchmark(options["benchmark"], "local")
    rows = ["score_max,offset,accuracy"]
    for score_max in ranges:
        cfg = JudgeConfig(
            model=options.get("model", "judge"),
            mode="score",
            score_min=1,
            score_max=score_max,
            n_samples=int(options.get("n_samples", 10)),
            min_valid_samples=int(options.get("min_valid_samples", 6)),
        )
        result = run_local_eval(bench, cfg, client)
        for k in range(1, max_offset + 1):
            try:
                accuracy = result.grid.offset_accuracy(k)
            except ValueError:
                continue
            rows.append(f"{score_max},{k},{accuracy:.4f}")
    Path(options["out"]).write_text("\n".join(rows) + "\n", encoding="utf-8")
    _write_manifest(options.get("manifest"), "sweep-ranges", options,
                    tracker, bench.task)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="judgemeta",
        description="Dual-perspective meta-evaluation pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, flags):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file with per-command sections")
        for flag in flags:
            p.add_argument(f"--{flag}")
        p.set_defaults(fn=fn)
        return p

    add("construct-global", cmd_construct_global, [
        "task", "aspect", "sources", "anchors", "out", "scripted", "cache-dir",
        "seed", "targets-per-rating", "n-reference-samples", "manifest",
    ])
    add("construct-local", cmd_construct_local, [
        "task", "aspect", "sources", "out", "scripted", "cache-dir", "seed",
        "sequence-length", "n-reference-samples", "manifest",
    ])
    add("select-anchors", cmd_select_anchors, [
        "task", "aspect", "candidates", "out", "per-rating-count", "manifest",
    ])
    add("estimate", cmd_estimate, [
        "task", "aspect", "anchors", "targets", "out", "scripted", "cache-dir",
        "manifest",
    ])
    add("judge-global", cmd_judge_global, [
        "benchmark", "out", "model", "scripted", "cache-dir", "n-samples",
        "min-valid-samples", "manifest", "report-prefix",
    ])
    add("judge-local", cmd_judge_local, [
        "benchmark", "out", "model", "scripted", "cache-dir", "n-samples",
        "min-valid-samples", "manifest", "report-prefix", "mode",
    ])
    add("judge-compare", cmd_judge_compare, [
        "benchmark", "out", "model", "scripted", "cache-dir", "n-samples",
        "min-valid-samples", "manifest", "report-prefix",
    ])
    add("metrics", cmd_metrics, ["benchmark", "run", "kind", "out"])
    add("rank", cmd_rank, ["results", "out"])
    add("sweep-ranges", cmd_sweep_ranges, [
        "benchmark", "out", "model", "scripted", "cache-dir", "ranges",
        "max-offset", "n-samples", "min-valid-samples", "manifest",
    ])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ClientError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
