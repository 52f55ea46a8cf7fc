"""Dual-perspective meta-evaluation of NLG evaluators.

Global perspective: coarse ratings scored as ordinal classification with a
closeness-weighted measure. Local perspective: fine quality orderings scored
by pairwise comparison accuracy. Includes automatic benchmark construction
via controlled error injection and an LLM judging harness with deterministic
scripted clients.
"""

from .aggregation import (
    consistency_filter,
    mean_aggregate,
    mode_aggregate,
    rescale_rating,
)
from .anchoring import (
    AnchorCandidate,
    AnchorSelectionConfig,
    AnchorSet,
    anchor_consistency_score,
    calibrate_error_counts,
    estimate_rating,
    select_anchors,
)
from .benchmark import (
    Aspect,
    BenchmarkError,
    Constructed,
    EvaluationScale,
    GlobalBenchmark,
    HumanAnnotated,
    InjectedError,
    LocalBenchmark,
    Source,
    SubAspect,
    Target,
    load_benchmark,
    save_benchmark,
)
from .client import (
    CachedClient,
    CompletionRequest,
    CompletionResponse,
    CountingClient,
    HttpClient,
    ScriptRule,
    ScriptedClient,
    UsageTracker,
    request_digest,
    usage_report,
)
from .construction import (
    ConstructionConfig,
    assemble_global,
    assemble_local,
    build_local_sequence,
    draw_subaspects,
    generate_references,
    inject_global,
    select_diverse,
)
from .judge import (
    JudgeConfig,
    JudgeOutput,
    judge_compare,
    judge_rating,
    judge_score,
    run_global_eval,
    run_local_eval,
)
from .metrics import (
    ConfusionMatrix,
    PairAccuracyGrid,
    adjacent_pairwise_accuracy,
    cem,
    confusion,
    grouped_correlation,
    pair_accuracy_grid,
    pearson,
    prox,
    spearman,
)
from .registry import get_aspect, get_subaspects, load_registry_override
from .report import EvaluatorReport, emit, rank_evaluators, read_structured

__version__ = "0.1.0"
