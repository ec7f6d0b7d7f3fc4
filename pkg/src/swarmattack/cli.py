"""Command-line entry point.

Exit codes: 0 attack succeeded / command completed, 1 attack finished without
an adversarial example (exhausted or infeasible input), 2 configuration or
input error, 3 victim connection failure.

A TOML config file (``--config`` or the SWARMATTACK_CONFIG env var) supplies
defaults in sections named after the parameter types they fill ([pso],
[genetic], [greedy], [exhaustive], [benchmark], [run], [sweep]); every key
has a flag twin and flags win.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import tomli

from .errors import (
    ConfigError,
    ConnectFailed,
    EmptyAfterFilter,
    EmptyCorpus,
    HandshakeMismatch,
    LabelMismatch,
    LengthOutOfBounds,
    NoCandidates,
    ParseError,
    PreconditionViolated,
    ProtocolError,
    SpaceTooLarge,
    Timeout,
    ValidationError,
)
from .lexicon import lexicon_stats, load_lexicon
from .metrics import (
    DEFAULT_SWEEP_ITERS,
    DEFAULT_SWEEP_POPS,
    BenchmarkConfig,
    budget_sweep,
    cross_evaluate,
    export_jsonl,
    report_json,
    report_text,
    run_benchmark,
    sweep_json,
    sweep_text,
)
from .optim import ALGORITHMS, run_attack
from .space import SpaceConfig, build_space, load_corpus, load_plain
from .victim import load_victim

EXIT_OK = 0
EXIT_NO_ATTACK = 1
EXIT_CONFIG = 2
EXIT_CONNECT = 3

_NO_ATTACK_ERRORS = (NoCandidates, PreconditionViolated, LengthOutOfBounds)
_CONNECT_ERRORS = (ConnectFailed, Timeout, HandshakeMismatch, ProtocolError, LabelMismatch)
_CONFIG_ERRORS = (
    ConfigError, ParseError, ValidationError, EmptyCorpus, EmptyAfterFilter,
    SpaceTooLarge, OSError,
)


def _dispatch(body) -> None:
    try:
        code = body()
    except _NO_ATTACK_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_NO_ATTACK
    except _CONNECT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_CONNECT
    except _CONFIG_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_CONFIG
    sys.exit(code)


def _load_config(path: str | None) -> dict:
    if path is None:
        path = os.environ.get("SWARMATTACK_CONFIG") or None
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _pick(cfg: dict, section: str, key: str, flag, default=None):
    """Effective setting: flag beats config file beats default."""
    if flag is not None:
        return flag
    sec = cfg.get(section)
    if isinstance(sec, dict) and key in sec:
        return sec[key]
    return default


def _require(value, flag_name: str):
    if value is None:
        raise ConfigError(f"missing required option {flag_name}")
    return value


def _build_params(algo: str, cfg: dict, pop, iters, max_mod, budget):
    if algo not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algo!r}; expected one of {sorted(ALGORITHMS)}")
    param_type, _ = ALGORITHMS[algo]
    section = cfg.get(algo)
    kwargs = dict(section) if isinstance(section, dict) else {}
    if pop is not None and algo in ("pso", "genetic"):
        kwargs["pop_size"] = pop
    if iters is not None and algo in ("pso", "genetic"):
        kwargs["max_iters"] = iters
    if max_mod is not None:
        kwargs["max_mod_rate"] = max_mod
    if budget is not None:
        kwargs["query_budget"] = budget
    try:
        return param_type(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad [{algo}] settings: {exc}") from None


def _parse_sweep(text: str | None):
    """Grid syntax: ``T1,T2,...:N1,N2,...``; either side empty keeps its
    default (iters 2,5,10,20; pops 4,8,16,32,60)."""
    if text is None or text == "default":
        return (DEFAULT_SWEEP_ITERS, DEFAULT_SWEEP_POPS)
    t_part, _, n_part = text.partition(":")
    try:
        iters = tuple(int(x) for x in t_part.split(",") if x.strip())
        pops = tuple(int(x) for x in n_part.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"bad sweep grid {text!r}; expected T1,T2,...:N1,N2,...") from None
    return (iters or DEFAULT_SWEEP_ITERS, pops or DEFAULT_SWEEP_POPS)


def _load_sentences(path: str, plain: bool):
    return load_plain(path, assume_content=True) if plain else load_corpus(path)


@click.group()
@click.version_option(package_name="swarmattack")
def main() -> None:
    """Word-substitution adversarial attacks on black-box text classifiers."""


_config_option = click.option("--config", "config_path", default=None, help="TOML config file (or SWARMATTACK_CONFIG).")
_lexicon_option = click.option("--lexicon", "lexicon_path", default=None, help="Substitution lexicon file.")
_victim_option = click.option("--victim", "victim_spec", default=None, help="builtin:bow:FILE | exec:CMD | http(s)://URL")


@main.command("attack")
@_config_option
@_lexicon_option
@_victim_option
@click.option("--algo", default=None, help="pso | genetic | greedy | exhaustive")
@click.option("--seed", type=int, default=None)
@click.option("--pop", type=int, default=None, help="Population size.")
@click.option("--iters", type=int, default=None, help="Iteration budget.")
@click.option("--max-mod", type=float, default=None, help="Modification-rate cap.")
@click.option("--budget", type=int, default=None, help="Query budget.")
@click.option("--target", type=int, default=None, help="Target label id (default: best wrong label).")
@click.option("--text-file", "text_file", default=None, help="Input sentence file (first sentence is attacked).")
@click.option("--plain", is_flag=True, help="Treat the input as untagged plain text.")
@click.option("--out", "out_path", default=None, help="Also write the result JSON to this file.")
def cmd_attack(config_path, lexicon_path, victim_spec, algo, seed, pop, iters,
               max_mod, budget, target, text_file, plain, out_path):
    """Attack one sentence and print the result as JSON."""

    def body() -> int:
        cfg = _load_config(config_path)
        lex = load_lexicon(_require(_pick(cfg, "run", "lexicon", lexicon_path), "--lexicon"))
        spec = _require(_pick(cfg, "run", "victim", victim_spec), "--victim")
        algorithm = _pick(cfg, "run", "algo", algo, "pso")
        the_seed = int(_pick(cfg, "run", "seed", seed, 0))
        params = _build_params(algorithm, cfg, pop, iters, max_mod, budget)
        sentences = _load_sentences(_require(_pick(cfg, "run", "text_file", text_file), "--text-file"), plain)
        if not sentences:
            raise EmptyCorpus(f"{text_file}: no sentences")
        sentence = sentences[0]
        with load_victim(spec) as victim:
            space = build_space(sentence, lex, victim_vocab=victim.vocab,
                                cfg=SpaceConfig(assume_content=plain))
            result = run_attack(algorithm, space, victim, target=target,
                                params=params, seed=the_seed)
        obj = {
            "status": result.status.value,
            "original": " ".join(sentence.surfaces()),
            "adversarial": " ".join(result.adversarial.surfaces()) if result.adversarial else None,
            "orig_label": result.orig_label,
            "target_label": result.target,
            "target_prob": result.target_prob,
            "mod_rate": result.mod_rate,
            "queries": result.queries,
            "iterations": result.iterations,
            "seed": result.seed,
            "algorithm": result.algorithm,
        }
        text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
        click.echo(text, nl=False)
        if out_path is not None:
            Path(out_path).write_text(text, encoding="utf-8")
        return EXIT_OK if result.success else EXIT_NO_ATTACK

    _dispatch(body)


@main.command("bench")
@_config_option
@_lexicon_option
@_victim_option
@click.option("--corpus", "corpus_path", default=None, help="Tagged JSONL corpus.")
@click.option("--algo", "algos", multiple=True, help="Algorithm; repeat for several.")
@click.option("--seed", type=int, default=None)
@click.option("--pop", type=int, default=None)
@click.option("--iters", type=int, default=None)
@click.option("--max-mod", type=float, default=None)
@click.option("--budget", type=int, default=None)
@click.option("--sample", type=int, default=None, help="Attack only this many eligible instances.")
@click.option("--workers", type=int, default=None, help="Parallel attack workers (default 1).")
@click.option("--out", "out_dir", default=None, help="Output directory (default .).")
@click.option("--sweep", "sweep_grid", is_flag=False, flag_value="default", default=None,
              help="Run a (T,N) budget sweep; optional grid T1,..:N1,..")
def cmd_bench(config_path, lexicon_path, victim_spec, corpus_path, algos, seed,
              pop, iters, max_mod, budget, sample, workers, out_dir, sweep_grid):
    """Benchmark algorithms over a corpus; write report and export files."""

    def body() -> int:
        cfg = _load_config(config_path)
        lex = load_lexicon(_require(_pick(cfg, "run", "lexicon", lexicon_path), "--lexicon"))
        spec = _require(_pick(cfg, "run", "victim", victim_spec), "--victim")
        corpus = load_corpus(_require(_pick(cfg, "run", "corpus", corpus_path), "--corpus"))
        bench_section = cfg.get("benchmark") if isinstance(cfg.get("benchmark"), dict) else {}
        algorithms = tuple(algos) or tuple(bench_section.get("algorithms", ())) or ("pso",)
        sweep_cfg = _pick(cfg, "sweep", "grid", sweep_grid)
        bench = BenchmarkConfig(
            sample_size=_pick(cfg, "benchmark", "sample_size", sample),
            length_bounds=tuple(bench_section.get("length_bounds", (10, 100))),
            max_mod_rate=_pick(cfg, "benchmark", "max_mod_rate", max_mod, 0.25),
            algorithms=algorithms,
            budget_sweep=None if sweep_cfg is None else _parse_sweep(sweep_cfg),
            seed=int(_pick(cfg, "run", "seed", seed, 0)),
            workers=int(_pick(cfg, "benchmark", "workers", workers, 1)),
            pop_size=pop if pop is not None else bench_section.get("pop_size"),
            max_iters=iters if iters is not None else bench_section.get("max_iters"),
            query_budget=budget if budget is not None else bench_section.get("query_budget"),
            grammar_cmd=bench_section.get("grammar_cmd"),
            fluency_cmd=bench_section.get("fluency_cmd"),
        )
        out = Path(_pick(cfg, "run", "out", out_dir, "."))
        out.mkdir(parents=True, exist_ok=True)
        with load_victim(spec) as victim:
            if sweep_cfg is not None:
                sweep = budget_sweep(corpus, lex, victim, bench)
                (out / "sweep.json").write_text(sweep_json(sweep), encoding="utf-8")
                (out / "sweep.txt").write_text(sweep_text(sweep), encoding="utf-8")
                click.echo(sweep_text(sweep), nl=False)
            else:
                report = run_benchmark(corpus, lex, victim, bench)
                (out / "report.json").write_text(report_json(report), encoding="utf-8")
                (out / "report.txt").write_text(report_text(report), encoding="utf-8")
                (out / "export.jsonl").write_text(export_jsonl(report.records), encoding="utf-8")
                click.echo(report_text(report), nl=False)
        return EXIT_OK

    _dispatch(body)


@main.command("transfer")
@_config_option
@_victim_option
@click.option("--adv", "adv_path", default=None, help="Adversarial export file (JSONL).")
def cmd_transfer(config_path, victim_spec, adv_path):
    """Score exported adversarial examples against another victim."""

    def body() -> int:
        cfg = _load_config(config_path)
        spec = _require(_pick(cfg, "run", "victim", victim_spec), "--victim")
        adv = _require(_pick(cfg, "run", "adv", adv_path), "--adv")
        with load_victim(spec) as victim:
            accuracy = cross_evaluate(adv, victim)
        click.echo(json.dumps({"transfer_accuracy": accuracy}, sort_keys=True))
        return EXIT_OK

    _dispatch(body)


@main.command("space")
@_config_option
@_lexicon_option
@_victim_option
@click.option("--text-file", "text_file", default=None, help="Input sentence file (first sentence is shown).")
@click.option("--plain", is_flag=True, help="Treat the input as untagged plain text.")
def cmd_space(config_path, lexicon_path, victim_spec, text_file, plain):
    """Print the candidate substitute sets for one sentence."""

    def body() -> int:
        cfg = _load_config(config_path)
        lex = load_lexicon(_require(_pick(cfg, "run", "lexicon", lexicon_path), "--lexicon"))
        spec = _pick(cfg, "run", "victim", victim_spec)
        sentences = _load_sentences(_require(_pick(cfg, "run", "text_file", text_file), "--text-file"), plain)
        if not sentences:
            raise EmptyCorpus(f"{text_file}: no sentences")
        sentence = sentences[0]
        vocab = None
        if spec is not None:
            with load_victim(spec) as victim:
                vocab = victim.vocab
        space = build_space(sentence, lex, victim_vocab=vocab,
                            cfg=SpaceConfig(assume_content=plain))
        obj = {
            "size": space.size,
            "positions": [
                {"index": d, "original": cands[0], "candidates": list(cands[1:])}
                for d, cands in enumerate(space.candidates)
                if len(cands) > 1
            ],
        }
        click.echo(json.dumps(obj, indent=1, sort_keys=True))
        return EXIT_OK

    _dispatch(body)


@main.command("lexstats")
@_config_option
@_lexicon_option
@click.option("--corpus", "corpus_path", default=None, help="Tagged JSONL corpus.")
def cmd_lexstats(config_path, lexicon_path, corpus_path):
    """Report substitute-set sizes over a corpus."""

    def body() -> int:
        cfg = _load_config(config_path)
        lex = load_lexicon(_require(_pick(cfg, "run", "lexicon", lexicon_path), "--lexicon"))
        corpus = load_corpus(_require(_pick(cfg, "run", "corpus", corpus_path), "--corpus"))
        stats = lexicon_stats(lex, corpus)
        obj = {
            "mean": stats.mean,
            "occurrences": stats.occurrences,
            "histogram": {str(k): v for k, v in stats.histogram.items()},
        }
        click.echo(json.dumps(obj, indent=1, sort_keys=True))
        return EXIT_OK

    _dispatch(body)


if __name__ == "__main__":
    main()
