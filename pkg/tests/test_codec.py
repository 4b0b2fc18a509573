"""Code-pattern derivation, encoding, decoding, and metrics."""

from __future__ import annotations

import math

import pytest

from alignpress import (
    DecodeAmbiguous,
    Encoding,
    Grammar,
    IncompleteCoverage,
    MultipleAlignment,
    SearchConfig,
    Symbol,
    UnknownCode,
    build_alignments,
    compression_metrics,
    decode,
    derive_code_pattern,
    encode,
    load_grammar,
    new_pattern,
)
from alignpress.core import ROLE_ID

from conftest import SENTENCE_TEXT, REPEAT_TEXT


class TestDeriveCodePattern:
    def test_sentence_alignment(self, sentence_grammar, sentence_new):
        ma, _sc = build_alignments(sentence_new, sentence_grammar)[0]
        code = derive_code_pattern(ma)
        assert " ".join(s.token for s in code) == "S PL 0a 17 6 11 21 #S"
        assert all(s.role == ROLE_ID for s in code)

    def test_new_alone_gives_empty_code(self):
        ma = MultipleAlignment.from_new(new_pattern("a b c"))
        assert derive_code_pattern(ma) == ()

    def test_repeat_alignment_code(self, repeat_grammar, repeat_new):
        # mechanical scan of the recursive alignment's columns: the
        # head instance's opening IDs and one unabsorbed closer remain
        ma, _sc = build_alignments(repeat_new, repeat_grammar)[0]
        code = derive_code_pattern(ma)
        assert " ".join(s.token for s in code) == "X 1 #X"


class TestEncode:
    def test_sentence_symbol_counts(self, sentence_grammar, sentence_new):
        enc = encode(sentence_new, sentence_grammar)
        assert enc.symbols_in == 17
        assert enc.symbols_out == 8

    def test_sentence_bit_accounting(self, sentence_grammar, sentence_new):
        enc = encode(sentence_new, sentence_grammar)
        assert enc.bits_in == pytest.approx(160.0, abs=0.01)
        assert enc.bits_out == pytest.approx(8 * 160.0 / 17.0, abs=0.01)
        assert enc.bits_out < enc.bits_in

    def test_incomplete_coverage_raises_with_best(self, sentence_grammar):
        new = new_pattern("t h e z z z")
        cfg = SearchConfig(require_full_new_coverage_for_encoding=True)
        with pytest.raises(IncompleteCoverage) as err:
            encode(new, sentence_grammar, cfg)
        ma, sc = err.value.best
        assert sc.new_coverage < 1.0
        assert len(ma.rows) >= 1

    def test_partial_coverage_allowed_without_flag(self, sentence_grammar):
        new = new_pattern("t h e z z z")
        enc = encode(new, sentence_grammar)
        assert enc.symbols_in == 6


class TestDecode:
    def test_sentence_round_trip(self, sentence_grammar, sentence_new):
        enc = encode(sentence_new, sentence_grammar)
        out = decode(enc.code, sentence_grammar)
        assert " ".join(s.token for s in out) == SENTENCE_TEXT

    def test_repeat_code_is_genuinely_ambiguous(self, repeat_grammar, repeat_new):
        # the recursive grammar encodes every repetition count to the
        # same code, so decoding it must report the ambiguity
        enc = encode(repeat_new, repeat_grammar)
        short = encode(new_pattern("$"), repeat_grammar)
        assert [s.token for s in enc.code] == [s.token for s in short.code]
        with pytest.raises(DecodeAmbiguous):
            decode(enc.code, repeat_grammar)

    def test_unknown_code(self, sentence_grammar):
        with pytest.raises(UnknownCode):
            decode(new_pattern("QQ ZZ").symbols, sentence_grammar)

    def test_empty_code_rejected(self, sentence_grammar):
        with pytest.raises(ValueError):
            decode((), sentence_grammar)

    def test_empty_surface_grammar_decodes_to_nothing(self):
        g = load_grammar("#! id chunk\n1\tK/i 5/i a b #K/i\n")
        assert g.surface_alphabet == frozenset()
        out = decode(new_pattern("K 5 #K").symbols, g)
        assert out == ()

    def test_two_chunk_round_trip(self):
        g = load_grammar(
            "#! surface t h e c a t\n"
            "#! id det\n1\tD/i 1/i t h e #D/i\n"
            "#! id noun\n1\tN/i 2/i c a t #N/i\n"
        )
        new = new_pattern("t h e c a t")
        enc = encode(new, g)
        out = decode(enc.code, g)
        assert " ".join(s.token for s in out) == "t h e c a t"

    def test_template_round_trip(self):
        g = load_grammar(
            "#! surface t h e c a t d o g\n"
            "#! id det\n1\tD/i 1/i t h e #D/i\n"
            "#! id noun-cat\n1\tN/i 2/i c a t #N/i\n"
            "#! id noun-dog\n1\tN/i 3/i d o g #N/i\n"
            "#! id phrase\n1\tS/i 9/i D #D N #N #S/i\n"
        )
        for text in ("t h e c a t", "t h e d o g"):
            enc = encode(new_pattern(text), g)
            out = decode(enc.code, g)
            assert " ".join(s.token for s in out) == text


class TestMetrics:
    def test_sentence_ratios(self, sentence_grammar, sentence_new):
        m = compression_metrics(encode(sentence_new, sentence_grammar))
        assert m.symbol_ratio == pytest.approx(17 / 8)
        assert m.bit_ratio == pytest.approx(17 / 8)
        assert not m.symbol_ratio_infinite

    def test_identity_encoding(self):
        enc = Encoding(code=(Symbol("x", ROLE_ID),), symbols_in=1, symbols_out=1,
                       bits_in=2.0, bits_out=2.0)
        m = compression_metrics(enc)
        assert m.symbol_ratio == 1.0
        assert m.bit_ratio == 1.0

    def test_empty_code_flagged_infinite(self):
        enc = Encoding(code=(), symbols_in=3, symbols_out=0, bits_in=6.0, bits_out=0.0)
        m = compression_metrics(enc)
        assert m.symbol_ratio_infinite and m.bit_ratio_infinite
        assert math.isinf(m.symbol_ratio)
