"""Substitution lexicons with sense-level sememe matching.

A lexicon maps words to senses, each sense carrying a POS tag and a set of
sememes (opaque semantic labels).  Two words can substitute for each other
when one sense of each carries exactly the same sememe set under the same
POS tag.  Matching is done on lemmas; surface realization goes through an
explicit per-entry forms table so inflected tokens stay grammatical.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyCorpus, ParseError, ValidationError

LEXICON_HEADER = "#!lexicon-v1"

POS_TAGS = ("noun", "verb", "adj", "adv", "other")
CONTENT_POS = frozenset({"noun", "verb", "adj", "adv"})

# Wildcard used by the permissive (untagged-input) mode: treated as a content
# tag; sense matching then ignores the token-side POS filter.
POS_ANY = "any"


@dataclass(frozen=True)
class WordSense:
    """One sense of a word: lemma, POS tag and its sememe annotation set."""

    lemma: str
    pos: str
    sememes: frozenset[str]


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    lemma: str
    senses: tuple[WordSense, ...]
    forms: dict[str, str] = field(default_factory=dict)


@dataclass
class SubstituteStats:
    mean: float
    occurrences: int
    histogram: dict[int, int]


class Lexicon:
    """Immutable word -> entry map with an index over (pos, sememe set)."""

    def __init__(self, entries: dict[str, LexiconEntry], version: str = "lexicon-v1"):
        self.entries = entries
        self.version = version
        # (pos, sememes) -> words whose entry has a sense with that signature
        self._index: dict[tuple[str, frozenset[str]], list[str]] = {}
        for word, entry in entries.items():
            for sense in entry.senses:
                self._index.setdefault((sense.pos, sense.sememes), []).append(word)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def get(self, word: str) -> LexiconEntry | None:
        return self.entries.get(word.lower())

    def words_matching(self, sense: WordSense) -> list[str]:
        return self._index.get((sense.pos, sense.sememes), [])


def sememe_match(a: WordSense, b: WordSense) -> bool:
    """True iff the two senses carry identical sememe sets under the same POS."""
    return a.pos == b.pos and a.sememes == b.sememes


def _parse_senses(text: str, default_pos: str, lemma: str, lineno: int) -> tuple[WordSense, ...]:
    senses = []
    for group in text.split(";"):
        group = group.strip()
        pos = default_pos
        if ":" in group:
            pos_part, group = group.split(":", 1)
            pos = pos_part.strip()
            if pos not in POS_TAGS:
                raise ParseError(f"line {lineno}: unknown POS tag {pos!r}")
        sememes = frozenset(tok.strip() for tok in group.split(",") if tok.strip())
        if not sememes:
            raise ValidationError(f"line {lineno}: sense with empty sememe set")
        sense = WordSense(lemma=lemma, pos=pos, sememes=sememes)
        if sense not in senses:
            senses.append(sense)
    return tuple(senses)


def _parse_forms(text: str, lineno: int) -> dict[str, str]:
    forms: dict[str, str] = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ParseError(f"line {lineno}: malformed form {item!r} (expected key=value)")
        key, value = item.split("=", 1)
        key, value = key.strip().lower(), value.strip().lower()
        if not key or not value:
            raise ParseError(f"line {lineno}: malformed form {item!r}")
        if key in forms:
            raise ParseError(f"line {lineno}: duplicate form key {key!r}")
        forms[key] = value
    return forms


def load_lexicon(path) -> Lexicon:
    """Load a tab-separated lexicon file.

    Format, one record per line (words are lowercased on load):

        word<TAB>lemma<TAB>pos<TAB>senses<TAB>form_key=form,...

    where ``senses`` is one or more ``;``-separated sememe lists, each
    optionally prefixed with ``pos:`` to override the record's POS tag.
    Lines starting with ``#`` are comments; the first line must be the
    ``#!lexicon-v1`` header.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0].strip() != LEXICON_HEADER:
        raise ParseError(f"{path}: missing {LEXICON_HEADER!r} header line")

    entries: dict[str, LexiconEntry] = {}
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = raw.rstrip("\n").split("\t")
        if len(fields) not in (4, 5):
            raise ParseError(f"line {lineno}: expected 4 or 5 tab-separated fields, got {len(fields)}")
        word = fields[0].strip().lower()
        lemma = fields[1].strip().lower()
        pos = fields[2].strip()
        if not word or not lemma:
            raise ParseError(f"line {lineno}: empty word or lemma")
        if pos not in POS_TAGS:
            raise ParseError(f"line {lineno}: unknown POS tag {pos!r}")
        if word in entries:
            raise ValidationError(f"line {lineno}: duplicate word {word!r}")
        senses = _parse_senses(fields[3], pos, lemma, lineno)
        forms = _parse_forms(fields[4], lineno) if len(fields) == 5 else {}
        entries[word] = LexiconEntry(word=word, lemma=lemma, senses=senses, forms=forms)

    return Lexicon(entries)


def apply_case(pattern: str, word: str) -> str:
    """Carry ``pattern``'s case shape (lower / Capitalized / ALL-CAPS) onto ``word``."""
    if len(pattern) > 1 and pattern.isupper():
        return word.upper()
    if pattern[:1].isupper():
        return word[:1].upper() + word[1:]
    return word


def substitutes(lex: Lexicon, word: str, pos: str | None = None, form: str | None = None) -> set[str]:
    """All surface words that can substitute for ``word`` under ``pos``.

    A word qualifies when one of its senses carries exactly the same sememe
    set and POS tag as one of ``word``'s senses (restricted to ``pos`` unless
    pos is None).  Results are realized through each entry's forms table for
    the inflection observed in ``form`` (default: ``word`` itself; missing
    forms fall back to the lemma) and carry ``form``'s case pattern.
    Unknown words yield the empty set.
    """
    observed = form if form is not None else word
    word_l = word.lower()
    entry = lex.entries.get(word_l)
    if entry is None:
        return set()

    observed_l = observed.lower()
    form_keys = sorted(k for k, v in entry.forms.items() if v == observed_l)

    out: set[str] = set()
    for sense in entry.senses:
        if pos is not None and pos != POS_ANY and sense.pos != pos:
            continue
        for other_word in lex.words_matching(sense):
            if other_word == word_l:
                continue
            other = lex.entries[other_word]
            realized = other.lemma
            for key in form_keys:
                if key in other.forms:
                    realized = other.forms[key]
                    break
            if realized == observed_l or realized == word_l:
                continue
            out.add(apply_case(observed, realized))
    return out


def lexicon_stats(lex: Lexicon, corpus) -> SubstituteStats:
    """Average substitute-set size over all content-word occurrences in ``corpus``."""
    sizes = []
    for sentence in corpus:
        for token in sentence.tokens:
            if not token.is_content:
                continue
            subs = substitutes(lex, token.lemma, token.pos, form=token.surface)
            sizes.append(len(subs))
    if not sizes:
        raise EmptyCorpus("corpus contains no content-word occurrences")
    return SubstituteStats(
        mean=sum(sizes) / len(sizes),
        occurrences=len(sizes),
        histogram=dict(sorted(Counter(sizes).items())),
    )
