"""Benchmark harness: filters a tagged corpus to attackable instances, runs
deterministically seeded attacks, and aggregates per-algorithm reports.

Budget sweeps run every (max_iters, pop_size) grid point as an independent
set of attacks sharing the same per-instance seeds: iteration-dependent
schedules see their real horizon, and algorithms whose loops do not depend on
the horizon (the genetic baseline) extend shorter runs draw for draw.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from statistics import fmean

import numpy as np

from .errors import (
    ConfigError,
    EmptyAfterFilter,
    LabelMismatch,
    NoCandidates,
    ParseError,
)
from .optim import ALGORITHMS, AttackStatus, run_attack
from .space import SpaceConfig, build_space

DEFAULT_SWEEP_ITERS = (2, 5, 10, 20)
DEFAULT_SWEEP_POPS = (4, 8, 16, 32, 60)

# record fields, in export order
_EXPORT_FIELDS = (
    "id", "original", "adversarial", "orig_label", "target_label",
    "status", "mod_rate", "queries", "iterations", "seed", "algorithm",
    "target_prob",
)


@dataclass(frozen=True)
class BenchmarkConfig:
    sample_size: int | None = None
    length_bounds: tuple[int, int] = (10, 100)
    max_mod_rate: float = 0.25
    algorithms: tuple[str, ...] = ("pso",)
    budget_sweep: tuple[tuple[int, ...], tuple[int, ...]] | None = None
    seed: int = 0
    workers: int = 1
    pop_size: int | None = None
    max_iters: int | None = None
    query_budget: int | None = None
    grammar_cmd: str | None = None
    fluency_cmd: str | None = None

    def __post_init__(self):
        if self.sample_size is not None and self.sample_size < 1:
            raise ConfigError(f"sample_size must be >= 1, got {self.sample_size}")
        lo, hi = self.length_bounds
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad length bounds {self.length_bounds}")
        if not self.algorithms:
            raise ConfigError("no algorithms configured")
        for algo in self.algorithms:
            if algo not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {algo!r}; expected one of {sorted(ALGORITHMS)}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass(frozen=True)
class AttackRecord:
    """One attempted instance, as exported (None fields serialize as null)."""

    id: int
    original: str
    adversarial: str | None
    orig_label: int | None
    target_label: int | None
    status: str
    mod_rate: float | None
    queries: int
    iterations: int
    seed: int
    algorithm: str
    target_prob: float | None

    def to_json(self) -> str:
        return json.dumps({name: getattr(self, name) for name in _EXPORT_FIELDS})


@dataclass(frozen=True)
class AlgorithmReport:
    algorithm: str
    attempted: int
    successes: int
    success_rate: float            # percentage over attempted
    mean_mod_rate: float | None    # over successes
    mean_queries: float
    mean_iterations: float
    transfer_accuracy: float | None = None
    mean_grammar_score: float | None = None
    mean_fluency_score: float | None = None


@dataclass(frozen=True)
class Report:
    algorithms: dict[str, AlgorithmReport]
    attempted: int
    corpus_size: int
    records: tuple[AttackRecord, ...] = field(repr=False, default=())


def instance_seed(seed: int, instance_id: int) -> int:
    return int(np.random.SeedSequence([seed, instance_id]).generate_state(1)[0])


def eligible_instances(corpus, victim, cfg: BenchmarkConfig):
    """(id, sentence) pairs the harness attacks: labeled, length in bounds,
    and classified correctly by the victim; optionally downsampled."""
    lo, hi = cfg.length_bounds
    pared = [
        (i, s) for i, s in enumerate(corpus)
        if s.label is not None and lo <= len(s.tokens) <= hi
    ]
    if pared:
        texts = [" ".join(s.surfaces()) for _, s in pared]
        contexts = [None if s.context is None else " ".join(s.context) for _, s in pared]
        if all(c is None for c in contexts):
            contexts = None
        probs = victim.predict_batch(texts, contexts)
        preds = np.argmax(probs, axis=1)
        pared = [(i, s) for (i, s), p in zip(pared, preds) if int(p) == s.label]
    if not pared:
        raise EmptyAfterFilter("no correctly classified in-bounds labeled instances")
    if cfg.sample_size is not None and cfg.sample_size < len(pared):
        rng = np.random.default_rng(cfg.seed)
        keep = rng.choice(len(pared), size=cfg.sample_size, replace=False)
        pared = [pared[k] for k in sorted(keep)]
    return pared


def _params_for(algo: str, cfg: BenchmarkConfig, max_iters=None, pop_size=None):
    param_type, _ = ALGORITHMS[algo]
    kwargs = {"max_mod_rate": cfg.max_mod_rate, "query_budget": cfg.query_budget}
    if algo in ("pso", "genetic"):
        n = pop_size if pop_size is not None else cfg.pop_size
        t = max_iters if max_iters is not None else cfg.max_iters
        if n is not None:
            kwargs["pop_size"] = n
        if t is not None:
            kwargs["max_iters"] = t
    return param_type(**kwargs)


def _attack_one(instance, lexicon, victim, cfg: BenchmarkConfig, algo: str, params):
    inst_id, sentence = instance
    seed = instance_seed(cfg.seed, inst_id)
    original = " ".join(sentence.surfaces())
    try:
        space = build_space(
            sentence, lexicon, victim_vocab=victim.vocab,
            cfg=SpaceConfig(length_bounds=cfg.length_bounds),
        )
    except NoCandidates:
        record = AttackRecord(
            id=inst_id, original=original, adversarial=None,
            orig_label=sentence.label, target_label=None,
            status=AttackStatus.INFEASIBLE.value, mod_rate=None,
            queries=0, iterations=0, seed=seed, algorithm=algo, target_prob=None,
        )
        return record, None
    result = run_attack(algo, space, victim, target=None, params=params, seed=seed)
    record = AttackRecord(
        id=inst_id,
        original=original,
        adversarial=" ".join(result.adversarial.surfaces()) if result.success else None,
        orig_label=result.orig_label,
        target_label=result.target,
        status=result.status.value,
        mod_rate=result.mod_rate if result.success else None,
        queries=result.queries,
        iterations=result.iterations,
        seed=seed,
        algorithm=algo,
        target_prob=result.target_prob if result.success else None,
    )
    return record, result


def _attack_all(instances, lexicon, victim, cfg: BenchmarkConfig, algo: str, params):
    """(record, result) per instance, ordered by instance id."""
    def one(instance):
        return _attack_one(instance, lexicon, victim, cfg, algo, params)

    if cfg.workers == 1:
        return [one(inst) for inst in instances]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(one, instances))


def _run_scorer(cmd: str, sentences) -> list[float]:
    """External scorer protocol: one sentence per stdin line, one real number
    per stdout line."""
    proc = subprocess.run(
        shlex.split(cmd), input="\n".join(sentences) + "\n",
        capture_output=True, text=True,
    )
    if proc.returncode != 0:
        raise ConfigError(f"scorer {cmd!r} exited with {proc.returncode}")
    try:
        scores = [float(line) for line in proc.stdout.splitlines() if line.strip()]
    except ValueError as exc:
        raise ConfigError(f"scorer {cmd!r} emitted a non-numeric line") from exc
    if len(scores) != len(sentences):
        raise ConfigError(f"scorer {cmd!r} returned {len(scores)} scores for {len(sentences)} sentences")
    return scores


def _aggregate(algo: str, records, cfg: BenchmarkConfig | None = None) -> AlgorithmReport:
    wins = [r for r in records if r.status == AttackStatus.SUCCESS.value]
    grammar = fluency = None
    if cfg is not None and wins:
        adv = [r.adversarial for r in wins]
        if cfg.grammar_cmd:
            grammar = fmean(_run_scorer(cfg.grammar_cmd, adv))
        if cfg.fluency_cmd:
            fluency = fmean(_run_scorer(cfg.fluency_cmd, adv))
    return AlgorithmReport(
        algorithm=algo,
        attempted=len(records),
        successes=len(wins),
        success_rate=100.0 * len(wins) / len(records),
        mean_mod_rate=fmean(r.mod_rate for r in wins) if wins else None,
        mean_queries=fmean(r.queries for r in records),
        mean_iterations=fmean(r.iterations for r in records),
        mean_grammar_score=grammar,
        mean_fluency_score=fluency,
    )


def run_benchmark(corpus, lexicon, victim, cfg: BenchmarkConfig) -> Report:
    """Attack every eligible instance with each configured algorithm."""
    corpus = list(corpus)
    instances = eligible_instances(corpus, victim, cfg)
    reports = {}
    records: list[AttackRecord] = []
    for algo in cfg.algorithms:
        params = _params_for(algo, cfg)
        pairs = _attack_all(instances, lexicon, victim, cfg, algo, params)
        algo_records = [rec for rec, _ in pairs]
        records.extend(algo_records)
        reports[algo] = _aggregate(algo, algo_records, cfg)
    return Report(
        algorithms=reports,
        attempted=len(instances),
        corpus_size=len(corpus),
        records=tuple(records),
    )


def budget_sweep(corpus, lexicon, victim, cfg: BenchmarkConfig) -> dict:
    """(max_iters, pop_size) -> Report over the configured grid for the
    population-based algorithms.  Every grid point is an independent run so
    iteration-dependent schedules see their real horizon."""
    grid = cfg.budget_sweep if cfg.budget_sweep is not None else (DEFAULT_SWEEP_ITERS, DEFAULT_SWEEP_POPS)
    iter_grid = tuple(sorted({int(t) for t in grid[0]}))
    pop_grid = tuple(sorted({int(n) for n in grid[1]}))
    if not iter_grid or not pop_grid:
        return {}
    algos = tuple(a for a in cfg.algorithms if a in ("pso", "genetic")) or ("pso", "genetic")

    corpus = list(corpus)
    instances = eligible_instances(corpus, victim, cfg)
    out = {}
    for t in iter_grid:
        for n in pop_grid:
            algo_records = {}
            for algo in algos:
                params = _params_for(algo, cfg, max_iters=t, pop_size=n)
                pairs = _attack_all(instances, lexicon, victim, cfg, algo, params)
                algo_records[algo] = [rec for rec, _ in pairs]
            out[(t, n)] = Report(
                algorithms={a: _aggregate(a, recs, cfg) for a, recs in algo_records.items()},
                attempted=len(instances),
                corpus_size=len(corpus),
                records=tuple(rec for a in algos for rec in algo_records[a]),
            )
    return out


# ------------------------------------------------------------------ transfer ----


def parse_export(source) -> list[dict]:
    """Records from an adversarial export: a JSONL path or pre-parsed dicts."""
    if isinstance(source, (str, Path)):
        lines = Path(source).read_text(encoding="utf-8").splitlines()
        records = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{source}: line {lineno}: {exc}") from None
            if not isinstance(obj, dict):
                raise ParseError(f"{source}: line {lineno}: expected an object")
            records.append(obj)
        return records
    return [dict(r) for r in source]


def cross_evaluate(adv_file, other_victim) -> float:
    """Percentage of successful adversarial examples that ``other_victim``
    still classifies as the original label (low = transferable)."""
    records = [r for r in parse_export(adv_file) if r.get("status") == AttackStatus.SUCCESS.value]
    if not records:
        raise EmptyAfterFilter("export holds no successful adversarial examples")
    texts = []
    labels = []
    for r in records:
        text, label = r.get("adversarial"), r.get("orig_label")
        if not isinstance(text, str) or not isinstance(label, int):
            raise ParseError(f"record {r.get('id')}: missing adversarial text or orig_label")
        if not 0 <= label < other_victim.num_labels:
            raise LabelMismatch(f"record {r.get('id')}: label {label} outside the victim's {other_victim.num_labels} labels")
        texts.append(text)
        labels.append(label)
    preds = np.argmax(other_victim.predict_batch(texts), axis=1)
    return 100.0 * float(np.mean(preds == np.asarray(labels)))


def replay_deviation(adv_file, victim) -> float:
    """Max |stored − recomputed| target probability over successful records;
    exported examples must replay within 1e-9 on built-in victims.  Only
    context-free instances are exported with enough state to replay."""
    records = [r for r in parse_export(adv_file) if r.get("status") == AttackStatus.SUCCESS.value]
    if not records:
        return 0.0
    probs = victim.predict_batch([r["adversarial"] for r in records])
    worst = 0.0
    for row, r in zip(probs, records):
        worst = max(worst, abs(float(row[r["target_label"]]) - r["target_prob"]))
    return worst


# ------------------------------------------------------------------- writers ----


def _report_obj(report: Report) -> dict:
    algos = {}
    for name, a in report.algorithms.items():
        algos[name] = {
            "attempted": a.attempted,
            "successes": a.successes,
            "success_rate": a.success_rate,
            "mean_mod_rate": a.mean_mod_rate,
            "mean_queries": a.mean_queries,
            "mean_iterations": a.mean_iterations,
            "transfer_accuracy": a.transfer_accuracy,
            "grammar_score": a.mean_grammar_score,
            "fluency_score": a.mean_fluency_score,
        }
    return {"attempted": report.attempted, "corpus_size": report.corpus_size, "algorithms": algos}


def report_json(report: Report) -> str:
    return json.dumps(_report_obj(report), indent=1, sort_keys=True) + "\n"


def _fmt(value, spec: str) -> str:
    return "null" if value is None else format(value, spec)


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(header)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.rjust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


_REPORT_HEADER = ["algorithm", "attempted", "successes", "success%", "mod_rate", "queries", "iters", "transfer%", "grammar", "fluency"]


def _report_row(a: AlgorithmReport) -> list[str]:
    return [
        a.algorithm,
        str(a.attempted),
        str(a.successes),
        format(a.success_rate, ".2f"),
        _fmt(a.mean_mod_rate, ".4f"),
        _fmt(a.mean_queries, ".1f"),
        _fmt(a.mean_iterations, ".2f"),
        _fmt(a.transfer_accuracy, ".2f"),
        _fmt(a.mean_grammar_score, ".4f"),
        _fmt(a.mean_fluency_score, ".4f"),
    ]


def report_text(report: Report) -> str:
    rows = [_report_row(report.algorithms[name]) for name in report.algorithms]
    return _table(_REPORT_HEADER, rows)


def sweep_json(sweep: dict) -> str:
    grid = []
    for (t, n) in sorted(sweep):
        grid.append({
            "max_iters": t,
            "pop_size": n,
            "algorithms": _report_obj(sweep[(t, n)])["algorithms"],
        })
    return json.dumps({"grid": grid}, indent=1, sort_keys=True) + "\n"


def sweep_text(sweep: dict) -> str:
    rows = []
    for (t, n) in sorted(sweep):
        for name in sweep[(t, n)].algorithms:
            rows.append([str(t), str(n)] + _report_row(sweep[(t, n)].algorithms[name]))
    return _table(["max_iters", "pop_size"] + _REPORT_HEADER, rows)


def export_jsonl(records) -> str:
    return "".join(r.to_json() + "\n" for r in records)
