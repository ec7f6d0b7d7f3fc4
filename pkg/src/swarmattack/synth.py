"""Deterministic toy worlds: substitution lexicons, bag-of-words victims and
labeled corpora built together so every instance's attack difficulty is known
by construction.

Words are grouped into substitution clusters (same POS and sememe set, so
cluster members substitute for each other) and carry antisymmetric per-label
weights that are integer multiples of 0.05.  Working in integer units makes
margins exact: a sentence's label, its minimum flip edit count r* and hence
its feasibility under the modification cap can be classified without float
comparisons.  Drafts whose optimal edit prefix lands exactly on the margin
are rejected, so classification never depends on argmax tie-breaking or
float residue.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .lexicon import LEXICON_HEADER, Lexicon, LexiconEntry, WordSense
from .space import Sentence, SpaceConfig, Token, build_space
from .victim import BagOfWordsVictim

UNIT = 0.05
LABELS = ("neg", "pos")

BENCH_SEED = 230907
SMALL_SEED = 140611
BENCH_QUOTAS = {"easy": 170, "medium": 75, "hard": 25, "infeasible": 30}
SMALL_COUNT = 200

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"
_POS_CYCLE = ("noun", "verb", "adj", "adv")

# one cluster is built per (pattern, sign) pair, so every magnitude exists in
# both label directions regardless of seed
_BENCH_PATTERNS = (
    [(5, -5)] * 4          # flip pairs: drop 10, the lone substitute flips
    + [(5, -5, 5, 5)] * 3  # needle flips: drop 10 hidden among same-unit decoys
    + [(6, -6, -4)] * 2    # asymmetric flips: drop up to 12
    + [(7, 7)] * 2         # drop-free margin bulk
    + [(4, 4)] * 3
    + [(2, 2, 2)] * 4
    + [(1, -1)] * 3        # weak words: drop 2
    + [(3, -2, 0)] * 3     # soft clusters: neutrals with small drops
    + [(6, 2)] * 2         # skewed: drop 4
)

_SMALL_PATTERNS = (
    [(3, -3)] * 2          # flip pairs: drop 6
    + [(2, 2)] * 2
    + [(7, 7)]
    + [(4, 4)]
    + [(1, -1)]
    + [(2, 0, -1)] * 2
)


@dataclass(frozen=True)
class Cluster:
    pos: str
    sememes: tuple[str, ...]
    members: tuple[str, ...]
    units: tuple[int, ...]
    hidden: tuple[bool, ...]

    def visible(self):
        return [(w, u) for w, u, h in zip(self.members, self.units, self.hidden) if not h]


@dataclass(frozen=True)
class ToyWorld:
    labels: tuple[str, ...]
    clusters: tuple[Cluster, ...]
    function_words: tuple[str, ...]
    lexicon: Lexicon
    units: dict[str, int]            # visible (victim-known) words only
    cluster_of: dict[str, Cluster]

    def weights_obj(self) -> dict:
        weights = {w: [round(u * UNIT, 2), round(-u * UNIT, 2)] for w, u in sorted(self.units.items())}
        return {"labels": list(self.labels), "weights": weights}

    def victim(self) -> BagOfWordsVictim:
        obj = self.weights_obj()
        return BagOfWordsVictim(labels=obj["labels"], weights=obj["weights"])

    def vocab(self) -> frozenset:
        return frozenset(self.units)


def build_toy_space(world: ToyWorld, sentence: Sentence, length_bounds=None):
    """Space for one toy sentence with the victim's vocabulary filter applied,
    mirroring the margin classifier's view of substitutable positions."""
    cfg = SpaceConfig(length_bounds=length_bounds)
    return build_space(sentence, world.lexicon, victim_vocab=world.vocab(), cfg=cfg)


# -------------------------------------------------------------- generation ----


def _make_words(rng: np.random.Generator, count: int, used: set) -> list[str]:
    words = []
    while len(words) < count:
        n_syll = 2 + int(rng.integers(0, 2))
        w = "".join(
            _CONSONANTS[int(rng.integers(len(_CONSONANTS)))] + _VOWELS[int(rng.integers(len(_VOWELS)))]
            for _ in range(n_syll)
        )
        if w not in used:
            used.add(w)
            words.append(w)
    return words


def _build_world(rng: np.random.Generator, patterns, n_function: int, n_hidden: int) -> ToyWorld:
    used: set = set()
    clusters = []
    hidden_left = n_hidden
    idx = 0
    for pattern in patterns:
        for sign in (1, -1):
            units = [sign * u for u in pattern]
            members = _make_words(rng, len(units), used)
            hidden = [False] * len(units)
            # a hidden member mirrors the lowest unit: it widens the lexicon's
            # substitute sets without entering the victim's vocabulary
            if hidden_left > 0 and len(set(units)) > 1:
                members += _make_words(rng, 1, used)
                units = units + [min(units)]
                hidden.append(True)
                hidden_left -= 1
            clusters.append(
                Cluster(
                    pos=_POS_CYCLE[idx % len(_POS_CYCLE)],
                    sememes=(f"k{idx:03d}a", f"k{idx:03d}b"),
                    members=tuple(members),
                    units=tuple(units),
                    hidden=tuple(hidden),
                )
            )
            idx += 1

    function_words = tuple(_make_words(rng, n_function, used))

    entries = {}
    units_map = {}
    cluster_of = {}
    for cluster in clusters:
        sense_sememes = frozenset(cluster.sememes)
        for word, unit, hid in zip(cluster.members, cluster.units, cluster.hidden):
            entries[word] = LexiconEntry(
                word=word,
                lemma=word,
                senses=(WordSense(lemma=word, pos=cluster.pos, sememes=sense_sememes),),
                forms={},
            )
            cluster_of[word] = cluster
            if not hid:
                units_map[word] = unit
    return ToyWorld(
        labels=LABELS,
        clusters=tuple(clusters),
        function_words=function_words,
        lexicon=Lexicon(entries),
        units=units_map,
        cluster_of=cluster_of,
    )


def _pool(world: ToyWorld, want) -> list[str]:
    """Visible words whose (own unit, max drop when the margin sign is +1)
    satisfies the predicate; deterministic order."""
    out = []
    for w, u in sorted(world.units.items()):
        others = [mu for m, mu in world.cluster_of[w].visible() if m != w]
        if not others:
            continue
        if want(u, u - min(others)):
            out.append(w)
    return out


# ------------------------------------------------------------ classification ----


def classify_sentence(world: ToyWorld, content_words, cap: int):
    """Exact label and minimum flip edit count for a draft sentence.

    Returns (label, r_star) with r_star None when no <= cap edit combination
    flips the victim, or None when the draft must be rejected (zero margin,
    an optimal edit prefix landing exactly on the margin, or no substitutable
    position).
    """
    sigma = sum(world.units.get(w, 0) for w in content_words)
    if sigma == 0:
        return None
    sign = 1 if sigma > 0 else -1
    label = 0 if sigma > 0 else 1
    margin = abs(sigma)

    drops = []
    substitutable = 0
    for w in content_words:
        cluster = world.cluster_of.get(w)
        if cluster is None:
            continue
        others = [mu for m, mu in cluster.visible() if m != w]
        if not others:
            continue
        substitutable += 1
        best = max(sign * (world.units.get(w, 0) - mu) for mu in others)
        if best > 0:
            drops.append(best)
    if substitutable == 0:
        return None
    drops.sort(reverse=True)

    prefix = 0
    for r, d in enumerate(drops[:cap], start=1):
        prefix += d
        if prefix == margin:
            return None
        if prefix >= margin + 1:
            return label, r
    return label, None


# ----------------------------------------------------------------- assembly ----


def _draft_content(rng: np.random.Generator, flip_pool_seq, fill: int, n_neutral: int,
                   n_pads: int, pure_pools, neutral_pool) -> list[str]:
    """Content words for one draft: one flip word per pool in
    ``flip_pool_seq``, drop-free pure words summing exactly to ``fill`` units,
    neutral flavor words, and ``n_pads`` cancelling +2/-2 pairs that only
    widen the search space."""
    words = [pool[int(rng.integers(len(pool)))] for pool in flip_pool_seq]
    rem = fill
    if rem % 2 != 0:
        sign = 1 if rem > 0 else -1
        pool = pure_pools[(sign, 7)]
        words.append(pool[int(rng.integers(len(pool)))])
        rem -= sign * 7
    while rem != 0:
        sign = 1 if rem > 0 else -1
        mag = 4 if abs(rem) >= 4 and rng.integers(0, 2) == 0 else 2
        pool = pure_pools[(sign, mag)]
        words.append(pool[int(rng.integers(len(pool)))])
        rem -= sign * mag
    for _ in range(n_neutral):
        words.append(neutral_pool[int(rng.integers(len(neutral_pool)))])
    for _ in range(n_pads):
        words.append(pure_pools[(1, 2)][int(rng.integers(len(pure_pools[(1, 2)])))])
        words.append(pure_pools[(-1, 2)][int(rng.integers(len(pure_pools[(-1, 2)])))])
    return words


def _assemble(rng: np.random.Generator, world: ToyWorld, content, label: int, total_len: int) -> Sentence:
    pairs = [(w, world.cluster_of[w].pos) for w in content]
    for _ in range(total_len - len(content)):
        w = world.function_words[int(rng.integers(len(world.function_words)))]
        pairs.append((w, "other"))
    order = rng.permutation(len(pairs))
    tokens = tuple(Token(surface=pairs[i][0], lemma=pairs[i][0], pos=pairs[i][1]) for i in order)
    return Sentence(tokens=tokens, label=label)


def _signed_pures(pure_pools: dict, direction: int) -> dict:
    if direction > 0:
        return pure_pools
    return {(s, mag): pure_pools[(-s, mag)] for (s, mag) in pure_pools}


# ---------------------------------------------------------------- benchmark ----


def make_bench_world(seed: int = BENCH_SEED) -> ToyWorld:
    return _build_world(np.random.default_rng(seed), _BENCH_PATTERNS, n_function=40, n_hidden=6)


def make_benchmark(seed: int = BENCH_SEED, quotas: dict | None = None):
    """The shipped toy benchmark: a world plus a corpus with a fixed mix of
    1-edit, 2-edit, 3-edit and infeasible instances (default 170/75/25/30)."""
    rng = np.random.default_rng(seed)
    world = _build_world(rng, _BENCH_PATTERNS, n_function=40, n_hidden=6)
    quotas = dict(quotas if quotas is not None else BENCH_QUOTAS)

    flip_pools = _flip_pools(world, unit=5, drop=10)
    pure_pools = _pure_pools(world)
    neutral_pool = _pool(world, lambda u, d: u == 0)

    # recipe: (flip pool per edit, margin range, length range, r*, pad pairs)
    recipes = {
        "easy": (("easy",), (4, 9), (10, 24), 1, 0),
        "medium": (("easy", "easy"), (11, 19), (10, 24), 2, 0),
        "hard": (("needle", "easy", "easy"), (21, 29), (14, 24), 3, 2),
        "infeasible": ((), (7, 14), (10, 24), None, 0),
    }

    order = [cls for cls in ("easy", "medium", "hard", "infeasible") for _ in range(quotas[cls])]
    rng.shuffle(order)
    sentences = []
    for cls in order:
        kinds, margins, lengths, wanted, n_pads = recipes[cls]
        sentences.append(
            _draw_instance(rng, world, flip_pools, pure_pools, neutral_pool,
                           flip_unit=5, flip_kinds=kinds, margins=margins,
                           lengths=lengths, wanted=wanted, max_neutral=2, n_pads=n_pads)
        )
    return world, sentences


def _pure_pools(world: ToyWorld) -> dict:
    return {
        (s, mag): _pool(world, lambda u, d, s=s, mag=mag: u == s * mag and d <= 0)
        for s in (1, -1)
        for mag in (2, 4, 7)
    }


def _flip_pools(world: ToyWorld, unit: int, drop: int) -> dict:
    """Margin supporters whose best substitute drops the margin by exactly
    ``drop`` units, split by how findable that substitute is: "easy" words
    where every candidate flips, "needle" words where exactly one candidate
    among three or more does.  Keyed by margin direction."""
    pools = {"easy": {1: [], -1: []}, "needle": {1: [], -1: []}}
    for w, u in sorted(world.units.items()):
        if abs(u) != unit:
            continue
        sign = 1 if u > 0 else -1
        others = [mu for m, mu in world.cluster_of[w].visible() if m != w]
        if not others:
            continue
        drops = [sign * (u - mu) for mu in others]
        if max(drops) != drop:
            continue
        useful = sum(1 for d in drops if d == drop)
        if useful == len(others):
            pools["easy"][sign].append(w)
        elif useful == 1 and len(others) >= 3:
            pools["needle"][sign].append(w)
    return pools


def _draw_instance(rng, world, flip_pools, pure_pools, neutral_pool, *, flip_unit,
                   flip_kinds, margins, lengths, wanted, max_neutral, n_pads=0,
                   pad_content=False):
    """Sample drafts until one classifies exactly as ``wanted`` r* edits.
    ``flip_kinds`` names the pool (key of ``flip_pools``) for each flip."""
    m_lo, m_hi = margins
    d_lo, d_hi = lengths
    while True:
        margin = int(rng.integers(m_lo, m_hi + 1))
        direction = 1 if rng.integers(0, 2) == 0 else -1
        fill = direction * (margin - flip_unit * len(flip_kinds))
        n_neutral = int(rng.integers(0, max_neutral + 1))
        pool_seq = [flip_pools[kind][direction] for kind in flip_kinds]
        content = _draft_content(rng, pool_seq, fill, n_neutral, n_pads,
                                 _signed_pures(pure_pools, direction), neutral_pool)
        if pad_content:
            total_len = int(rng.integers(max(d_lo, len(content)), d_hi + 1))
            while len(content) <= total_len - 2:
                content.append(pure_pools[(1, 2)][int(rng.integers(len(pure_pools[(1, 2)])))])
                content.append(pure_pools[(-1, 2)][int(rng.integers(len(pure_pools[(-1, 2)])))])
            if len(content) != total_len:
                continue
        else:
            if len(content) + 2 > d_hi:
                continue
            total_len = int(rng.integers(max(d_lo, len(content) + 2), d_hi + 1))
        cap = int(0.25 * total_len + 1e-9)
        verdict = classify_sentence(world, content, cap)
        if verdict is None:
            continue
        label, r_star = verdict
        if r_star != wanted:
            continue
        return _assemble(rng, world, content, label, total_len)


# -------------------------------------------------------------- small suite ----


def make_small_world(seed: int = SMALL_SEED) -> ToyWorld:
    return _build_world(np.random.default_rng(seed), _SMALL_PATTERNS, n_function=0, n_hidden=2)


def make_small_suite(seed: int = SMALL_SEED, count: int = SMALL_COUNT):
    """Spaces for oracle-vs-search checks: ``count`` all-content sentences of
    5 to 8 tokens over a compact world, mixing 1-edit, 2-edit and infeasible
    instances (roughly 55/15/30 per hundred)."""
    rng = np.random.default_rng(seed)
    world = _build_world(rng, _SMALL_PATTERNS, n_function=0, n_hidden=2)

    flip_pools = _flip_pools(world, unit=3, drop=6)
    pure_pools = _pure_pools(world)
    neutral_pool = _pool(world, lambda u, d: u == 0)

    kinds = ["one"] * 55 + ["two"] * 15 + ["none"] * 30
    recipes = {
        "one": (("easy",), (1, 5), (5, 8), 1),
        "two": (("easy", "easy"), (7, 11), (8, 8), 2),
        "none": ((), (4, 9), (5, 8), None),
    }
    sentences = []
    for i in range(count):
        flip_kinds, margins, lengths, wanted = recipes[kinds[i % len(kinds)]]
        sentences.append(
            _draw_instance(rng, world, flip_pools, pure_pools, neutral_pool,
                           flip_unit=3, flip_kinds=flip_kinds, margins=margins,
                           lengths=lengths, wanted=wanted, max_neutral=1, pad_content=True)
        )
    return world, sentences


# ------------------------------------------------------------- serialization ----


def lexicon_text(world: ToyWorld) -> str:
    lines = [LEXICON_HEADER, "# generated toy lexicon; regenerate with scripts/make_toy_data.py"]
    for word in sorted(world.lexicon.entries):
        entry = world.lexicon.entries[word]
        for sense in entry.senses:
            sememes = ",".join(sorted(sense.sememes))
            lines.append(f"{word}\t{entry.lemma}\t{sense.pos}\t{sememes}")
    return "\n".join(lines) + "\n"


def weights_json(world: ToyWorld) -> str:
    return json.dumps(world.weights_obj(), indent=1, sort_keys=True) + "\n"


def corpus_jsonl(sentences) -> str:
    lines = []
    for s in sentences:
        obj = {
            "tokens": [{"w": t.surface, "lemma": t.lemma, "pos": t.pos} for t in s.tokens],
            "label": s.label,
        }
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def write_benchmark_files(out_dir, seed: int = BENCH_SEED) -> dict:
    """Write the shipped benchmark data files; returns path -> text map."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    world, sentences = make_benchmark(seed)
    sample = next(
        s for s in sentences
        if classify_sentence(world, [t.surface for t in s.tokens if t.surface in world.units],
                             int(0.25 * len(s.tokens) + 1e-9)) == (s.label, 1)
    )
    files = {
        out_dir / "toy.lex": lexicon_text(world),
        out_dir / "bow_weights.json": weights_json(world),
        out_dir / "toy_corpus.jsonl": corpus_jsonl(sentences),
        out_dir / "sample_sentence.jsonl": corpus_jsonl([sample]),
    }
    for path, text in files.items():
        path.write_text(text, encoding="utf-8")
    return {str(p): t for p, t in files.items()}
