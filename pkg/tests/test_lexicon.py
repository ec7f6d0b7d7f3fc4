"""Lexicon parsing and sememe-based substitute lookup.

The substitute oracle here is an independent brute-force matcher over all
(sense, sense) pairs; `substitutes` goes through the (pos, sememes) index and
must agree with it exactly.
"""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmattack.errors import ParseError, ValidationError, EmptyCorpus
from swarmattack.lexicon import (
    LEXICON_HEADER,
    POS_TAGS,
    Lexicon,
    LexiconEntry,
    WordSense,
    apply_case,
    lexicon_stats,
    load_lexicon,
    sememe_match,
    substitutes,
)
from swarmattack.space import Sentence, Token


def brute_substitutes(lex, word, pos=None, form=None):
    """Reference matcher: compare every sense of `word` against every sense of
    every other entry, no index."""
    entry = lex.get(word)
    if entry is None:
        return set()
    observed = (form if form is not None else word).lower()
    form_keys = sorted(k for k, v in entry.forms.items() if v == observed)
    out = set()
    for sense in entry.senses:
        if pos is not None and pos != "any" and sense.pos != pos:
            continue
        for other_word, other in lex.entries.items():
            if other_word == word.lower():
                continue
            if not any(sense.pos == b.pos and sense.sememes == b.sememes
                       for b in other.senses):
                continue
            realized = other.lemma
            for key in form_keys:
                if key in other.forms:
                    realized = other.forms[key]
                    break
            if realized in (observed, word.lower()):
                continue
            out.add(apply_case(form if form is not None else word, realized))
    return out


def entry(word, senses, forms=None, lemma=None):
    return LexiconEntry(
        word=word,
        lemma=lemma or word,
        senses=tuple(WordSense(lemma=lemma or word, pos=p, sememes=frozenset(s))
                     for p, s in senses),
        forms=dict(forms or {}),
    )


def random_lexicon(rng, n_words, n_sememes=4, n_pos=3, with_forms=False):
    """Small random lexicon with heavy sense collisions."""
    words = [f"w{i}" for i in range(n_words)]
    entries = {}
    for w in words:
        senses = []
        for _ in range(int(rng.integers(1, 4))):
            pos = POS_TAGS[int(rng.integers(0, n_pos))]
            size = int(rng.integers(1, n_sememes + 1))
            sememes = frozenset(
                f"s{j}" for j in rng.choice(n_sememes, size=size, replace=False)
            )
            senses.append((pos, sememes))
        forms = {}
        if with_forms and rng.integers(0, 2):
            forms["plural"] = w + "s"
        entries[w] = entry(w, senses, forms)
    return Lexicon(entries=entries, version="lexicon-v1")


# ------------------------------------------------------------------ parsing ----


def test_header_required(tmp_path):
    path = tmp_path / "bad.lex"
    path.write_text("pie\tpie\tnoun\tfood\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_lexicon(path)


def test_parses_fixture(food_lexicon):
    assert len(food_lexicon) == 8
    assert "pie" in food_lexicon
    assert "PIE" in food_lexicon  # lookup is case-folded
    assert "waffle" not in food_lexicon
    e = food_lexicon.get("break")
    assert [s.pos for s in e.senses] == ["noun", "verb"]
    assert e.senses[0].sememes == frozenset({"food", "snack"})
    assert e.forms == {"past": "broke"}


def test_field_count_error_carries_line_number(tmp_path):
    path = tmp_path / "bad.lex"
    path.write_text(LEXICON_HEADER + "\npie\tpie\tnoun\n", encoding="utf-8")
    with pytest.raises(ParseError) as err:
        load_lexicon(path)
    assert "line 2" in str(err.value)


def test_unknown_pos_rejected(tmp_path):
    path = tmp_path / "bad.lex"
    path.write_text(LEXICON_HEADER + "\npie\tpie\tnn\tfood\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_lexicon(path)


def test_bad_forms_field_rejected(tmp_path):
    path = tmp_path / "bad.lex"
    path.write_text(LEXICON_HEADER + "\npie\tpie\tnoun\tfood\tplural\n",
                    encoding="utf-8")
    with pytest.raises(ParseError):
        load_lexicon(path)


def test_empty_sememe_set_rejected(tmp_path):
    path = tmp_path / "bad.lex"
    path.write_text(LEXICON_HEADER + "\npie\tpie\tnoun\t\n", encoding="utf-8")
    with pytest.raises(ValidationError):
        load_lexicon(path)


def test_duplicate_word_rejected(tmp_path):
    path = tmp_path / "bad.lex"
    path.write_text(
        LEXICON_HEADER + "\npie\tpie\tnoun\tfood\npie\tpie\tnoun\tsnack\n",
        encoding="utf-8",
    )
    with pytest.raises(ValidationError):
        load_lexicon(path)


def test_comments_and_blank_lines_skipped(tmp_path):
    path = tmp_path / "ok.lex"
    path.write_text(
        LEXICON_HEADER + "\n\n# a comment\npie\tpie\tnoun\tfood\n",
        encoding="utf-8",
    )
    assert len(load_lexicon(path)) == 1


# ------------------------------------------------------------ sememe match ----


def test_sememe_match_examples():
    a = WordSense("pie", "noun", frozenset({"food", "snack"}))
    b = WordSense("cheese", "noun", frozenset({"snack", "food"}))
    c = WordSense("cheese", "verb", frozenset({"food", "snack"}))
    d = WordSense("cheese", "noun", frozenset({"food"}))
    assert sememe_match(a, b)
    assert not sememe_match(a, c)  # same sememes, different pos
    assert not sememe_match(a, d)  # subset, not equal


sense_strategy = st.builds(
    WordSense,
    lemma=st.sampled_from(["u", "v", "w"]),
    pos=st.sampled_from(POS_TAGS),
    sememes=st.frozensets(st.sampled_from("abcd"), min_size=1, max_size=3),
)


@given(a=sense_strategy, b=sense_strategy)
def test_sememe_match_symmetric(a, b):
    assert sememe_match(a, b) == sememe_match(b, a)


@given(a=sense_strategy)
def test_sememe_match_reflexive_on_senses(a):
    # reflexivity holds at the sense level; word-level substitution is
    # irreflexive because a word is never its own substitute
    assert sememe_match(a, a)


@given(a=sense_strategy, b=sense_strategy, c=sense_strategy)
def test_sememe_match_transitive(a, b, c):
    if sememe_match(a, b) and sememe_match(b, c):
        assert sememe_match(a, c)


# ------------------------------------------------------------- substitutes ----


def test_fixture_substitute_group(food_lexicon):
    # the five food nouns plus the noun sense of "break" are one class
    subs = substitutes(food_lexicon, "pie", pos="noun")
    assert set(subs) >= {"cheese", "popcorn", "ham", "cream"}
    assert set(subs) == {"cheese", "popcorn", "ham", "cream", "break"}
    assert "pie" not in subs


def test_pos_filter(food_lexicon):
    assert substitutes(food_lexicon, "pie", pos="verb") == set()
    # verb sense of "break" matches run/jog only if sememes agree (they don't)
    assert substitutes(food_lexicon, "break", pos="verb") == set()
    assert substitutes(food_lexicon, "run", pos="verb") == {"jog"}
    # POS "any" matches across all senses
    assert substitutes(food_lexicon, "break", pos="any") == {
        "cheese", "popcorn", "ham", "cream", "pie",
    }


def test_unknown_word_has_no_substitutes(food_lexicon):
    assert substitutes(food_lexicon, "waffle", pos="noun") == set()


def test_form_realization(food_lexicon):
    # observed "pies" maps through pie's forms table; substitutes realize the
    # same form key when they have it, else fall back to the lemma
    subs = substitutes(food_lexicon, "pie", pos="noun", form="pies")
    assert set(subs) == {"cheese", "popcorn", "ham", "creams", "break"}


def test_case_carries_over(food_lexicon):
    subs = substitutes(food_lexicon, "pie", pos="noun", form="Pie")
    assert "Cheese" in subs and "Break" in subs
    subs = substitutes(food_lexicon, "pie", pos="noun", form="PIE")
    assert "CHEESE" in subs


def test_apply_case():
    assert apply_case("PIE", "cheese") == "CHEESE"
    assert apply_case("Pie", "cheese") == "Cheese"
    assert apply_case("pie", "cheese") == "cheese"
    assert apply_case("pIe", "cheese") == "cheese"


def test_substitutes_match_brute_force_on_fixture(food_lexicon):
    for word in food_lexicon.entries:
        for pos in (None, "noun", "verb", "any"):
            got = set(substitutes(food_lexicon, word, pos=pos))
            assert got == brute_substitutes(food_lexicon, word, pos=pos), (word, pos)


def test_substitutes_match_brute_force_randomized():
    rng = np.random.default_rng(4021)
    for case in range(60):
        lex = random_lexicon(rng, n_words=int(rng.integers(2, 10)),
                             with_forms=bool(case % 2))
        for word in lex.entries:
            pos = [None, "noun", "verb", "adj", "any"][int(rng.integers(0, 5))]
            form = None
            if lex.entries[word].forms and rng.integers(0, 2):
                form = lex.entries[word].forms["plural"]
            got = set(substitutes(lex, word, pos=pos, form=form))
            want = brute_substitutes(lex, word, pos=pos, form=form)
            assert got == want, (word, pos, form)


def test_substitution_symmetric_without_forms():
    # with identity surface forms, w' in subs(w) iff w in subs(w')
    rng = np.random.default_rng(77)
    for _ in range(30):
        lex = random_lexicon(rng, n_words=int(rng.integers(2, 9)), with_forms=False)
        for a, b in itertools.permutations(lex.entries, 2):
            assert (b in substitutes(lex, a)) == (a in substitutes(lex, b))


def test_substitution_irreflexive():
    rng = np.random.default_rng(78)
    for _ in range(30):
        lex = random_lexicon(rng, n_words=int(rng.integers(1, 9)), with_forms=True)
        for w in lex.entries:
            assert w not in substitutes(lex, w)


def test_substitutes_deterministic(food_lexicon):
    first = substitutes(food_lexicon, "pie", pos="noun")
    for _ in range(3):
        assert substitutes(food_lexicon, "pie", pos="noun") == first


# ------------------------------------------------------------------- stats ----


def test_lexicon_stats_constant_two():
    # three words in one class: every content occurrence has 2 substitutes
    lex = Lexicon({w: entry(w, [("noun", {"x"})]) for w in ("a", "b", "c")})
    s = Sentence(tokens=(
        Token("a", "a", "noun"),
        Token("the", "the", "other"),
        Token("b", "b", "noun"),
    ))
    stats = lexicon_stats(lex, [s])
    assert stats.occurrences == 2
    assert stats.mean == 2.0
    assert stats.histogram == {2: 2}


def test_lexicon_stats_food_fixture(food_lexicon):
    # pie and cheese each sit in the 6-word class -> 5 substitutes apiece
    s = Sentence(tokens=(
        Token("pie", "pie", "noun"),
        Token("the", "the", "other"),
        Token("cheese", "cheese", "noun"),
    ))
    stats = lexicon_stats(food_lexicon, [s])
    assert stats.occurrences == 2
    assert stats.mean == 5.0
    assert stats.histogram == {5: 2}


def test_lexicon_stats_empty_corpus(food_lexicon):
    with pytest.raises(EmptyCorpus):
        lexicon_stats(food_lexicon, [])


def test_lexicon_stats_mixed(food_lexicon):
    s = Sentence(tokens=(
        Token("run", "run", "verb"),
        Token("pie", "pie", "noun"),
        Token("waffle", "waffle", "noun"),  # OOV -> 0 substitutes
    ))
    stats = lexicon_stats(food_lexicon, [s])
    assert stats.occurrences == 3
    assert stats.histogram == {1: 1, 5: 1, 0: 1}
    assert stats.mean == pytest.approx((1 + 5 + 0) / 3)
