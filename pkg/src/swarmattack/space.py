"""Reduced discrete search spaces for one input sentence.

A search space holds, per token position, the ordered candidate list
``[original, substitute, ...]``; an assignment picks one candidate index per
position and renders back to a sentence.  Function-word positions keep
singleton lists and can never be modified downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    IndexOutOfRange,
    LengthMismatch,
    LengthOutOfBounds,
    NoCandidates,
    ParseError,
)
from .lexicon import CONTENT_POS, POS_ANY, POS_TAGS, Lexicon, substitutes

DEFAULT_LENGTH_BOUNDS = (10, 100)


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: str

    @property
    def is_content(self) -> bool:
        return self.pos in CONTENT_POS or self.pos == POS_ANY


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    label: int | None = None
    # Unperturbed pair element (e.g. an NLI premise), passed through to the
    # victim's `context` field and never part of the search space.
    context: tuple[str, ...] | None = None

    def __len__(self) -> int:
        return len(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


@dataclass(frozen=True)
class SpaceConfig:
    length_bounds: tuple[int, int] | None = DEFAULT_LENGTH_BOUNDS
    assume_content: bool = False


@dataclass
class SearchSpace:
    """Immutable after construction; safe for concurrent read."""

    original: Sentence
    candidates: tuple[tuple[str, ...], ...]
    counts: np.ndarray = field(init=False, repr=False)
    nonsingleton: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        for d, cands in enumerate(self.candidates):
            if cands[0] != self.original.tokens[d].surface:
                raise ValueError(f"candidate list {d} does not start with the original token")
            if len(set(cands)) != len(cands):
                raise ValueError(f"candidate list {d} contains duplicates")
        self.counts = np.array([len(c) for c in self.candidates], dtype=np.int64)
        self.nonsingleton = np.flatnonzero(self.counts > 1).astype(np.int64)

    def __len__(self) -> int:
        return len(self.candidates)

    @property
    def size(self) -> int:
        """Total number of assignments (product of candidate counts)."""
        return math.prod(int(c) for c in self.counts)

    def zero_assignment(self) -> np.ndarray:
        return np.zeros(len(self.candidates), dtype=np.int64)


def build_space(
    sentence: Sentence,
    lex: Lexicon,
    victim_vocab=None,
    cfg: SpaceConfig = SpaceConfig(),
) -> SearchSpace:
    """Build the candidate lists for one sentence.

    Content positions get ``{original} | substitutes(lemma, pos)``, filtered
    to ``victim_vocab`` when given (out-of-vocabulary substitutes are
    dropped; the original token always stays).  Substitutes are ordered
    lexicographically after the original.
    """
    n = len(sentence)
    if cfg.length_bounds is not None:
        lo, hi = cfg.length_bounds
        if not lo <= n <= hi:
            raise LengthOutOfBounds(f"sentence has {n} tokens, outside [{lo}, {hi}]")

    candidate_lists = []
    for token in sentence.tokens:
        if token.is_content or cfg.assume_content:
            pos = None if (cfg.assume_content and not token.is_content) or token.pos == POS_ANY else token.pos
            subs = substitutes(lex, token.lemma, pos, form=token.surface)
            if victim_vocab is not None:
                subs = {w for w in subs if w.lower() in victim_vocab}
            subs.discard(token.surface)
            candidate_lists.append((token.surface, *sorted(subs)))
        else:
            candidate_lists.append((token.surface,))

    space = SearchSpace(original=sentence, candidates=tuple(candidate_lists))
    if len(space.nonsingleton) == 0:
        raise NoCandidates("no position has any substitute; attack impossible")
    return space


def as_assignment(space: SearchSpace, indices) -> np.ndarray:
    """Validate ``indices`` against ``space`` and return it as an int array."""
    a = np.asarray(indices, dtype=np.int64)
    if a.shape != (len(space),):
        raise LengthMismatch(f"assignment length {a.shape} != {len(space)} positions")
    if np.any(a < 0) or np.any(a >= space.counts):
        raise IndexOutOfRange("assignment indexes past a candidate list")
    return a


def render_tokens(space: SearchSpace, assignment) -> list[str]:
    """Surface tokens for ``assignment`` (fast path used by the optimizers)."""
    return [space.candidates[d][i] for d, i in enumerate(assignment)]


def render(space: SearchSpace, assignment) -> Sentence:
    """Render an assignment back to a Sentence.

    The all-zero assignment returns the original sentence verbatim;
    substituted positions keep the original POS tag.
    """
    a = as_assignment(space, assignment)
    tokens = []
    for d, i in enumerate(a):
        if i == 0:
            tokens.append(space.original.tokens[d])
        else:
            surf = space.candidates[d][i]
            tokens.append(Token(surface=surf, lemma=surf.lower(), pos=space.original.tokens[d].pos))
    return Sentence(tokens=tuple(tokens), label=space.original.label, context=space.original.context)


def edit_distance(a, b) -> int:
    """Number of positions where the two assignments differ."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape:
        raise LengthMismatch(f"assignment lengths differ: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def modification_rate(assignment, space: SearchSpace) -> float:
    """Word-level edit distance from the original, divided by sentence length."""
    a = as_assignment(space, assignment)
    return edit_distance(a, space.zero_assignment()) / len(space)


def _token_from_json(obj, lineno: int) -> Token:
    try:
        surface = obj["w"]
        pos = obj["pos"]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"line {lineno}: token missing {exc} field") from None
    if pos not in POS_TAGS and pos != POS_ANY:
        raise ParseError(f"line {lineno}: unknown POS tag {pos!r}")
    lemma = obj.get("lemma", surface.lower())
    return Token(surface=surface, lemma=lemma, pos=pos)


def load_corpus(path) -> list[Sentence]:
    """Load a POS-tagged JSON Lines corpus.

    Each line is ``{"tokens": [{"w": ..., "lemma": ..., "pos": ...}, ...],
    "label": int}`` with optional ``label`` and ``context`` (string or token
    list) fields.
    """
    sentences = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if "tokens" not in obj or not obj["tokens"]:
            raise ParseError(f"line {lineno}: record has no tokens")
        tokens = tuple(_token_from_json(t, lineno) for t in obj["tokens"])
        context = obj.get("context")
        if isinstance(context, str):
            context = tuple(context.split())
        elif context is not None:
            context = tuple(context)
        sentences.append(Sentence(tokens=tokens, label=obj.get("label"), context=context))
    return sentences


def load_plain(path, assume_content: bool = False) -> list[Sentence]:
    """Load plain text, one whitespace-tokenized sentence per line.

    Without POS tags every token is tagged ``other`` (no substitutions);
    ``assume_content`` tags them with the content wildcard instead.
    """
    pos = POS_ANY if assume_content else "other"
    sentences = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        words = line.split()
        if not words:
            continue
        tokens = tuple(Token(surface=w, lemma=w.lower(), pos=pos) for w in words)
        sentences.append(Sentence(tokens=tokens))
    return sentences
