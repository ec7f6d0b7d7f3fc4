"""Black-box word-substitution adversarial attacks on text classifiers:
sememe-matched candidate sets searched with a discrete particle swarm
optimizer (plus genetic, greedy and exhaustive baselines), a victim wire
protocol, and a deterministic evaluation harness."""

from . import errors
from .kernels import available_backends, get_backend, set_backend
from .lexicon import Lexicon, LexiconEntry, WordSense, lexicon_stats, load_lexicon, substitutes
from .metrics import (
    AttackRecord,
    BenchmarkConfig,
    Report,
    budget_sweep,
    cross_evaluate,
    export_jsonl,
    replay_deviation,
    run_benchmark,
)
from .optim import (
    ALGORITHMS,
    AttackResult,
    AttackStatus,
    ExhaustiveParams,
    GeneticParams,
    GreedyParams,
    PsoParams,
    exhaustive_search,
    genetic_attack,
    greedy_attack,
    pso_attack,
    run_attack,
)
from .space import (
    SearchSpace,
    Sentence,
    SpaceConfig,
    Token,
    build_space,
    load_corpus,
    load_plain,
    modification_rate,
    render,
)
from .victim import BagOfWordsVictim, RemoteVictim, Victim, VictimManifest, load_victim

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AttackRecord",
    "AttackResult",
    "AttackStatus",
    "BagOfWordsVictim",
    "BenchmarkConfig",
    "ExhaustiveParams",
    "GeneticParams",
    "GreedyParams",
    "Lexicon",
    "LexiconEntry",
    "PsoParams",
    "RemoteVictim",
    "Report",
    "SearchSpace",
    "Sentence",
    "SpaceConfig",
    "Token",
    "Victim",
    "VictimManifest",
    "WordSense",
    "available_backends",
    "budget_sweep",
    "build_space",
    "cross_evaluate",
    "errors",
    "exhaustive_search",
    "export_jsonl",
    "genetic_attack",
    "get_backend",
    "greedy_attack",
    "lexicon_stats",
    "load_corpus",
    "load_lexicon",
    "load_plain",
    "load_victim",
    "modification_rate",
    "pso_attack",
    "render",
    "replay_deviation",
    "run_attack",
    "run_benchmark",
    "set_backend",
    "substitutes",
    "__version__",
]
