"""Shared fixtures: the worked parsing grammar, the repetition grammar,
and small helpers."""

from __future__ import annotations

import pytest

from alignpress import Grammar, Pattern, load_grammar, new_pattern

SENTENCE_TEXT = "t h e a p p l e s a r e s w e e t"

SENTENCE_GRAMMAR = """\
#! surface a e h l p r s t w
#! id det-the
1\tD/i 17/i t h e #D/i
#! id noun-apple
1\tN/i Nr/i 6/i a p p l e #N/i
#! id noun-plural
1\tN/i Np/i N Nr #N s #N/i
#! id noun-phrase
1\tNP/i 0a/i D #D N #N #NP/i
#! id verb-are
1\tV/i Vp/i 11/i a r e #V/i
#! id adj-sweet
1\tA/i 21/i s w e e t #A/i
#! id sentence
1\tS/i Num ; NP #NP V #V A #A #S/i
#! id num-agreement
1\tNum/i PL/i ;/i Np Vp
"""

SENTENCE_CODE = "S PL 0a 17 6 11 21 #S"

REPEAT_TEXT = "a b c a b c a b c a b c $"

REPEAT_GRAMMAR = """\
#! surface a b c $
#! id nest
1\tX/i 1/i a b c X 1 #X #X/i
#! id stop
1\tX/i 1/i $ #X/i
"""


@pytest.fixture(scope="session")
def sentence_grammar() -> Grammar:
    return load_grammar(SENTENCE_GRAMMAR)


@pytest.fixture(scope="session")
def sentence_new() -> Pattern:
    return new_pattern(SENTENCE_TEXT)


@pytest.fixture(scope="session")
def repeat_grammar() -> Grammar:
    return load_grammar(REPEAT_GRAMMAR)


@pytest.fixture(scope="session")
def repeat_new() -> Pattern:
    return new_pattern(REPEAT_TEXT)
