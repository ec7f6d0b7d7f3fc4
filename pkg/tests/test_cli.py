"""Command-line surface: exit codes, JSON shapes, config-file precedence and
byte-stable benchmark outputs."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from swarmattack import synth
from swarmattack.cli import _parse_sweep, main
from swarmattack.errors import ConfigError
from swarmattack.metrics import DEFAULT_SWEEP_ITERS, DEFAULT_SWEEP_POPS
from swarmattack.space import load_corpus

DATA = Path(__file__).resolve().parents[1] / "data"


def classify(world, sentence):
    cap = int(0.25 * len(sentence.tokens) + 1e-9)
    words = [t.surface for t in sentence.tokens if t.surface in world.units]
    return synth.classify_sentence(world, words, cap)


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    # the shipped toy benchmark doubles as the CLI fixture corpus
    root = tmp_path_factory.mktemp("cli")
    world = synth.make_bench_world()
    corpus = load_corpus(DATA / "toy_corpus.jsonl")
    feasible = load_corpus(DATA / "sample_sentence.jsonl")[0]
    infeasible = next(s for s in corpus if classify(world, s)[1] is None)

    paths = {
        "root": root,
        "lexicon": DATA / "toy.lex",
        "weights": DATA / "bow_weights.json",
        "corpus": DATA / "toy_corpus.jsonl",
        "one": DATA / "sample_sentence.jsonl",
        "none": root / "none.jsonl",
        "plain": root / "plain.txt",
        "oov": root / "oov.jsonl",
        "short": root / "short.jsonl",
        "config": root / "cfg.toml",
    }
    paths["none"].write_text(synth.corpus_jsonl([infeasible]))
    paths["plain"].write_text(" ".join(t.surface for t in feasible.tokens) + "\n")
    oov = {"tokens": [{"w": f"z{i}", "lemma": f"z{i}", "pos": "noun"}
                      for i in range(12)], "label": 0}
    paths["oov"].write_text(json.dumps(oov) + "\n")
    short = {"tokens": [{"w": "a", "lemma": "a", "pos": "noun"}] * 5, "label": 0}
    paths["short"].write_text(json.dumps(short) + "\n")
    paths["config"].write_text(
        "[run]\n"
        f'lexicon = "{paths["lexicon"]}"\n'
        f'victim = "builtin:bow:{paths["weights"]}"\n'
        'algo = "pso"\n'
        "seed = 3\n"
        "[benchmark]\n"
        "sample_size = 6\n"
    )
    paths["victim"] = f"builtin:bow:{paths['weights']}"
    return paths


def run(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env)


ATTACK_KEYS = {
    "status", "original", "adversarial", "orig_label", "target_label",
    "target_prob", "mod_rate", "queries", "iterations", "seed", "algorithm",
}


# ------------------------------------------------------------------- attack ----


def test_attack_success(files, tmp_path):
    out = tmp_path / "result.json"
    res = run("attack", "--lexicon", files["lexicon"], "--victim", files["victim"],
              "--text-file", files["one"], "--algo", "exhaustive", "--out", out)
    assert res.exit_code == 0
    obj = json.loads(res.output)
    assert set(obj) == ATTACK_KEYS
    assert obj["status"] == "success"
    assert obj["algorithm"] == "exhaustive"
    assert obj["adversarial"] != obj["original"]
    assert obj["mod_rate"] <= 0.25
    assert obj["target_prob"] > 0.5
    assert out.read_text() == res.output


def test_attack_exhausted_exits_1(files):
    res = run("attack", "--lexicon", files["lexicon"], "--victim", files["victim"],
              "--text-file", files["none"], "--algo", "greedy")
    assert res.exit_code == 1
    obj = json.loads(res.output)
    assert obj["status"] == "exhausted"
    # a best-effort sentence may be carried, but it never flips the label
    assert obj["target_prob"] is None or obj["target_prob"] < 0.5


def test_attack_plain_text(files):
    res = run("attack", "--lexicon", files["lexicon"], "--victim", files["victim"],
              "--text-file", files["plain"], "--plain", "--algo", "exhaustive")
    assert res.exit_code == 0
    assert json.loads(res.output)["status"] == "success"


def test_attack_no_substitutable_words_exits_1(files):
    res = run("attack", "--lexicon", files["lexicon"], "--victim", files["victim"],
              "--text-file", files["oov"])
    assert res.exit_code == 1
    assert "error:" in res.stderr


def test_attack_short_sentence_exits_1(files):
    res = run("attack", "--lexicon", files["lexicon"], "--victim", files["victim"],
              "--text-file", files["short"])
    assert res.exit_code == 1


def test_missing_required_option_exits_2(files):
    res = run("attack", "--victim", files["victim"], "--text-file", files["one"])
    assert res.exit_code == 2
    assert "--lexicon" in res.stderr


def test_missing_lexicon_file_exits_2(files):
    res = run("attack", "--lexicon", files["root"] / "absent.lex",
              "--victim", files["victim"], "--text-file", files["one"])
    assert res.exit_code == 2


def test_unknown_algorithm_exits_2(files):
    res = run("attack", "--lexicon", files["lexicon"], "--victim", files["victim"],
              "--text-file", files["one"], "--algo", "anneal")
    assert res.exit_code == 2


def test_bad_config_file_exits_2(files, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[run\n")
    res = run("attack", "--config", bad, "--text-file", files["one"])
    assert res.exit_code == 2


def test_unreachable_victim_exits_3(files):
    res = run("attack", "--lexicon", files["lexicon"],
              "--victim", "exec:/no/such/binary",
              "--text-file", files["one"])
    assert res.exit_code == 3


# ------------------------------------------------------------------- config ----


def test_config_file_supplies_defaults(files):
    res = run("attack", "--config", files["config"], "--text-file", files["one"])
    assert res.exit_code == 0
    obj = json.loads(res.output)
    assert obj["algorithm"] == "pso"
    assert obj["seed"] == 3


def test_flags_beat_config(files):
    res = run("attack", "--config", files["config"], "--text-file", files["one"],
              "--algo", "exhaustive", "--seed", "9")
    obj = json.loads(res.output)
    assert obj["algorithm"] == "exhaustive"
    assert obj["seed"] == 9


def test_config_env_var(files):
    res = run("attack", "--text-file", files["one"],
              env={"SWARMATTACK_CONFIG": str(files["config"])})
    assert res.exit_code == 0
    assert json.loads(res.output)["algorithm"] == "pso"


def test_parse_sweep_grammar():
    assert _parse_sweep(None) == (DEFAULT_SWEEP_ITERS, DEFAULT_SWEEP_POPS)
    assert _parse_sweep("default") == (DEFAULT_SWEEP_ITERS, DEFAULT_SWEEP_POPS)
    assert _parse_sweep("2,5:4,8") == ((2, 5), (4, 8))
    assert _parse_sweep(":8") == (DEFAULT_SWEEP_ITERS, (8,))
    assert _parse_sweep("2:") == ((2,), DEFAULT_SWEEP_POPS)
    with pytest.raises(ConfigError):
        _parse_sweep("two:4")


# -------------------------------------------------------------------- bench ----


def bench_args(files, out_dir, *extra):
    return ("bench", "--config", files["config"], "--corpus", files["corpus"],
            "--victim", files["victim"], "--out", out_dir, *extra)


def test_bench_outputs_are_byte_stable(files, tmp_path):
    args = ("--algo", "pso", "--iters", "5", "--pop", "8", "--sample", "6",
            "--seed", "0")
    for name in ("a", "b"):
        res = run(*bench_args(files, tmp_path / name, *args))
        assert res.exit_code == 0
    for name in ("report.json", "report.txt", "export.jsonl"):
        first = (tmp_path / "a" / name).read_bytes()
        assert first == (tmp_path / "b" / name).read_bytes()
        assert first
    obj = json.loads((tmp_path / "a" / "report.json").read_text())
    assert obj["attempted"] == 6
    assert set(obj["algorithms"]) == {"pso"}
    assert len((tmp_path / "a" / "export.jsonl").read_text().splitlines()) == 6


def test_bench_sweep_files(files, tmp_path):
    res = run(*bench_args(files, tmp_path, "--sweep", "2:4", "--sample", "4",
                          "--algo", "pso"))
    assert res.exit_code == 0
    obj = json.loads((tmp_path / "sweep.json").read_text())
    assert [(g["max_iters"], g["pop_size"]) for g in obj["grid"]] == [(2, 4)]
    assert (tmp_path / "sweep.txt").read_text() == res.output


def test_bench_missing_corpus_exits_2(files, tmp_path):
    res = run("bench", "--config", files["config"], "--out", tmp_path)
    assert res.exit_code == 2
    assert "--corpus" in res.stderr


# ----------------------------------------------------------- transfer/space ----


def test_transfer_against_attacked_victim(files, tmp_path):
    res = run(*bench_args(files, tmp_path, "--algo", "greedy", "--sample", "8"))
    assert res.exit_code == 0
    res = run("transfer", "--victim", files["victim"],
              "--adv", tmp_path / "export.jsonl")
    assert res.exit_code == 0
    assert json.loads(res.output) == {"transfer_accuracy": 0.0}


def test_space_command(files):
    res = run("space", "--lexicon", files["lexicon"], "--victim", files["victim"],
              "--text-file", files["one"])
    assert res.exit_code == 0
    obj = json.loads(res.output)
    assert obj["size"] >= 2
    assert obj["positions"]
    for pos in obj["positions"]:
        assert set(pos) == {"index", "original", "candidates"}
        assert pos["original"] not in pos["candidates"]
    unfiltered = run("space", "--lexicon", files["lexicon"],
                     "--text-file", files["one"])
    assert unfiltered.exit_code == 0
    assert json.loads(unfiltered.output)["size"] >= obj["size"]


def test_lexstats_command(files):
    res = run("lexstats", "--lexicon", files["lexicon"], "--corpus", files["corpus"])
    assert res.exit_code == 0
    obj = json.loads(res.output)
    assert set(obj) == {"mean", "occurrences", "histogram"}
    assert obj["occurrences"] > 0
    assert obj["mean"] > 0


def test_version_flag():
    res = run("--version")
    assert res.exit_code == 0
    assert "version" in res.output
