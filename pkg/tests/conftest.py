"""Shared fixtures: a hand-built food lexicon, toy worlds and victims."""

import pytest

from swarmattack import synth
from swarmattack.lexicon import load_lexicon
from swarmattack.space import Sentence, Token
from swarmattack.victim import BagOfWordsVictim

# Five nouns sharing one sense, one polysemous verb whose extra noun sense
# matches them, one unrelated verb pair, plus forms tables on a few entries.
FOOD_LEXICON = """#!lexicon-v1
# hand-built fixture
pie\tpie\tnoun\tfood,snack\tplural=pies
cheese\tcheese\tnoun\tfood,snack
popcorn\tpopcorn\tnoun\tfood,snack
ham\tham\tnoun\tfood,snack
cream\tcream\tnoun\tfood,snack\tplural=creams
break\tbreak\tverb\tnoun:food,snack;pause,stop\tpast=broke
run\trun\tverb\tmove,fast\tpast=ran
jog\tjog\tverb\tmove,fast\tpast=jogged
"""


@pytest.fixture(scope="session")
def food_lexicon(tmp_path_factory):
    path = tmp_path_factory.mktemp("lex") / "food.lex"
    path.write_text(FOOD_LEXICON, encoding="utf-8")
    return load_lexicon(path)


@pytest.fixture(scope="session")
def small_world():
    return synth.make_small_world()


@pytest.fixture(scope="session")
def small_suite():
    return synth.make_small_suite()


@pytest.fixture(scope="session")
def bench():
    return synth.make_benchmark()


def make_sentence(words, pos="noun", label=None):
    tokens = tuple(Token(surface=w, lemma=w.lower(), pos=pos) for w in words)
    return Sentence(tokens=tokens, label=label)


def mixed_sentence(content, function, label=None):
    """content word -> pos pairs first, then singleton function words."""
    tokens = [Token(surface=w, lemma=w.lower(), pos=p) for w, p in content]
    tokens += [Token(surface=w, lemma=w.lower(), pos="other") for w in function]
    return Sentence(tokens=tuple(tokens), label=label)


@pytest.fixture
def two_label_bow():
    """Victim over the food vocabulary: 'pie' strongly negative, 'cheese'
    strongly positive, everything else mild."""
    weights = {
        "pie": [0.6, -0.6],
        "cheese": [-0.6, 0.6],
        "popcorn": [0.1, -0.1],
        "ham": [-0.1, 0.1],
        "cream": [0.0, 0.0],
        "break": [0.0, 0.0],
    }
    return BagOfWordsVictim(labels=("neg", "pos"), weights=weights)
