"""Protocol round-trip conformance: the attack toolkit driving this server
over stdio must reproduce its built-in victim's benchmark results exactly.
"""

import json
import shlex
import sys
from pathlib import Path

import pytest

pytest.importorskip("victim_bridge")
swarmattack = pytest.importorskip("swarmattack")

from swarmattack import synth  # noqa: E402 -- after the skip guards
from swarmattack.metrics import (  # noqa: E402
    BenchmarkConfig,
    export_jsonl,
    report_json,
    run_benchmark,
)
from swarmattack.lexicon import load_lexicon  # noqa: E402
from swarmattack.space import load_corpus  # noqa: E402
from swarmattack.victim import builtin_bow, load_victim  # noqa: E402

DATA = Path(__file__).resolve().parents[2] / "data"


def bridge_spec(weights_path) -> str:
    cmd = f"{sys.executable} -m victim_bridge --model bow:{weights_path} --stdio"
    assert shlex.split(cmd)[0] == sys.executable
    return f"exec:{cmd}"


def run_pair(corpus, lexicon, weights_path, cfg):
    """The same benchmark against the built-in scorer and the served one."""
    with builtin_bow(weights_path) as local:
        local_report = run_benchmark(corpus, lexicon, local, cfg)
    with load_victim(bridge_spec(weights_path)) as remote:
        remote_report = run_benchmark(corpus, lexicon, remote, cfg)
    return local_report, remote_report


def assert_conformant(local_report, remote_report):
    assert report_json(remote_report) == report_json(local_report)
    local_lines = export_jsonl(local_report.records).splitlines()
    remote_lines = export_jsonl(remote_report.records).splitlines()
    assert len(remote_lines) == len(local_lines)
    for a, b in zip(local_lines, remote_lines):
        ra, rb = json.loads(a), json.loads(b)
        pa, pb = ra.pop("target_prob"), rb.pop("target_prob")
        assert rb == ra  # texts, labels, status, queries: identical
        if pa is None:
            assert pb is None
        else:
            assert abs(pb - pa) <= 1e-9


def test_small_suite_roundtrip(tmp_path):
    world, sentences = synth.make_small_suite()
    weights = tmp_path / "w.json"
    weights.write_text(synth.weights_json(world))
    cfg = BenchmarkConfig(length_bounds=(5, 8), sample_size=30,
                          algorithms=("pso", "genetic", "greedy"), seed=0)
    local_report, remote_report = run_pair(sentences, world.lexicon, weights, cfg)
    assert local_report.algorithms["pso"].successes > 0
    assert_conformant(local_report, remote_report)


def test_shipped_toy_corpus_roundtrip():
    corpus = load_corpus(DATA / "toy_corpus.jsonl")
    lexicon = load_lexicon(DATA / "toy.lex")
    cfg = BenchmarkConfig(sample_size=20, algorithms=("pso",),
                          max_iters=5, pop_size=8, seed=0)
    local_report, remote_report = run_pair(
        corpus, lexicon, DATA / "bow_weights.json", cfg)
    assert_conformant(local_report, remote_report)


def test_manifest_matches_builtin(tmp_path):
    world, _ = synth.make_small_suite()
    weights = tmp_path / "w.json"
    weights.write_text(synth.weights_json(world))
    local = builtin_bow(weights)
    remote = load_victim(bridge_spec(weights))
    try:
        assert remote.labels == local.labels
        assert remote.vocab == local.vocab
        assert remote.manifest.digest == local.manifest.digest
    finally:
        remote.close()
