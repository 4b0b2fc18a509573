"""Pairwise matching, merging, validation, scoring, search, rendering."""

from __future__ import annotations

import random
import re

import pytest
from hypothesis import given, settings, strategies as st

from alignpress import (
    CompressionScore,
    CostModel,
    Grammar,
    InvariantViolation,
    MultipleAlignment,
    PairwiseMatch,
    SearchConfig,
    build_alignments,
    derive_code_pattern,
    dump,
    load_grammar,
    match_reversed,
    merge,
    new_pattern,
    pairwise_match,
    parse_pattern,
    render,
    score,
    validate,
)
from alignpress.align import banned_pairs


def brute_force_matches(left, right):
    """Every strictly increasing equal-token pair list, by recursion."""
    out = []

    def go(pairs, i, j):
        if pairs:
            out.append(tuple(pairs))
        for l in range(i, len(left)):
            for r in range(j, len(right)):
                if left[l] == right[r]:
                    go(pairs + [(l, r)], l + 1, r + 1)

    go([], 0, 0)
    return out


def match_sort_key(pairs):
    gaps = sum((l2 - l1 > 1) + (r2 - r1 > 1)
               for (l1, r1), (l2, r2) in zip(pairs, pairs[1:]))
    return (-len(pairs), gaps, pairs)


class TestPairwiseMatch:
    def test_single_maximal_match(self):
        got = pairwise_match("a b c".split(), "a x c".split(), 1)
        assert got[0].pairs == ((0, 0), (2, 2))

    def test_contiguous_inside_frame(self):
        got = pairwise_match("t h e".split(), "D 17 t h e #D".split(), 1)
        assert got[0].pairs == ((0, 2), (1, 3), (2, 4))

    def test_three_matches_ordered(self):
        got = pairwise_match("a b a b".split(), "a b".split(), 3)
        assert [m.pairs for m in got] == [
            ((0, 0), (1, 1)),
            ((2, 0), (3, 1)),
            ((0, 0), (3, 1)),
        ]

    def test_empty_match_only_when_nothing_matches(self):
        got = pairwise_match("a b".split(), "x y".split(), 3)
        assert len(got) == 1 and got[0].pairs == ()
        got = pairwise_match("a".split(), "a".split(), 5)
        assert all(m.pairs for m in got)

    def test_crossing_pairs_rejected(self):
        with pytest.raises(InvariantViolation):
            PairwiseMatch(((0, 1), (1, 0)))
        with pytest.raises(InvariantViolation):
            PairwiseMatch(((0, 0), (0, 1)))

    def test_preconditions(self):
        with pytest.raises(ValueError):
            pairwise_match([], "a".split(), 1)
        with pytest.raises(ValueError):
            pairwise_match("a".split(), "a".split(), 0)

    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.sampled_from("abc"), min_size=1, max_size=5),
           st.lists(st.sampled_from("abc"), min_size=1, max_size=5),
           st.integers(min_value=1, max_value=6))
    def test_against_brute_force(self, left, right, limit):
        expected = sorted(brute_force_matches(left, right), key=match_sort_key)
        got = pairwise_match(left, right, limit)
        if not expected:
            assert [m.pairs for m in got] == [()]
        else:
            assert [m.pairs for m in got] == expected[:limit]


class TestMatchReversed:
    def test_full_reversal(self):
        left = "i n f o r m a t i o n".split()
        right = list(reversed(left))
        m = match_reversed(left, right)
        assert m.size == 11
        assert m.right_reversed

    def test_singleton(self):
        assert match_reversed(["a"], ["a"]).pairs == ((0, 0),)

    def test_exact_reversal_coordinates(self):
        m = match_reversed("a b c".split(), "c b a".split())
        assert m.pairs == ((0, 2), (1, 1), (2, 0))

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from("ab"), min_size=1, max_size=6),
           st.lists(st.sampled_from("ab"), min_size=1, max_size=6))
    def test_symmetry_in_pair_count(self, a, b):
        assert match_reversed(a, b).size == match_reversed(b, a).size


def two_row(new_text, old_text, limit=1):
    new = new_pattern(new_text)
    old = parse_pattern(old_text, role_markup=True, pattern_id="old")
    ma = MultipleAlignment.from_new(new)
    pm = pairwise_match(ma.projection(), [s.token for s in old.symbols], limit)[0]
    return merge(ma, old, pm)


class TestMerge:
    def test_adds_row_and_interleaves(self):
        ma = two_row("t h e", "D/i 17/i t h e #D/i")
        assert len(ma.rows) == 2
        assert ma.projection() == "D 17 t h e #D".split()
        matched = [c for c in ma.columns if c.matched]
        assert len(matched) == 3
        assert validate(ma) == []

    def test_empty_match_appends_unmatched_row(self):
        new = new_pattern("a b")
        old = parse_pattern("X/i y #X/i", role_markup=True, pattern_id="o")
        ma = merge(MultipleAlignment.from_new(new), old, PairwiseMatch(()))
        assert len(ma.rows) == 2
        assert ma.projection() == ["a", "b", "X", "y", "#X"]
        assert validate(ma) == []

    def test_does_not_mutate_input(self):
        new = new_pattern("t h e")
        base = MultipleAlignment.from_new(new)
        cols_before = base.columns
        two_row("t h e", "D/i 17/i t h e #D/i")
        assert base.columns == cols_before

    def test_repeated_instances_get_ordinals(self):
        new = new_pattern("a b a b")
        old = parse_pattern("P/i 1/i a b #P/i", role_markup=True, pattern_id="p")
        ma = MultipleAlignment.from_new(new)
        pm = pairwise_match(ma.projection(), [s.token for s in old.symbols], 1)[0]
        ma = merge(ma, old, pm)
        banned = banned_pairs(ma, old)
        pm2 = pairwise_match(ma.projection(), [s.token for s in old.symbols], 4,
                             banned=banned)[0]
        ma = merge(ma, old, pm2)
        assert [r.instance_ordinal for r in ma.rows] == [1, 1, 2]
        assert validate(ma) == []

    def test_token_mismatch_rejected(self):
        new = new_pattern("a b")
        old = parse_pattern("c d", role_markup=True, pattern_id="o")
        with pytest.raises(InvariantViolation):
            merge(MultipleAlignment.from_new(new), old, PairwiseMatch(((0, 0),)))


class TestValidate:
    def test_merge_results_are_valid(self, sentence_grammar, sentence_new):
        results = build_alignments(sentence_new, sentence_grammar,
                                   SearchConfig(beam_width=10, max_cycles=4))
        for ma, _sc in results:
            assert validate(ma) == []

    def test_token_mismatch_detected(self):
        ma = two_row("a b", "P/i a b #P/i")
        from alignpress.align import Column
        bad = MultipleAlignment(ma.rows, ma.columns[:-1] + (
            Column("zzz", ma.columns[-1].entries),))
        kinds = {v.kind for v in validate(bad)}
        assert "TokenMismatch" in kinds

    def test_row_order_violation_detected(self):
        ma = two_row("a b", "P/i a b #P/i")
        # swap two columns so row positions go backwards
        cols = list(ma.columns)
        cols[1], cols[2] = cols[2], cols[1]
        bad = MultipleAlignment(ma.rows, tuple(cols))
        kinds = {v.kind for v in validate(bad)}
        assert "RowOrderViolation" in kinds


class TestScore:
    def test_new_alone_scores_zero(self):
        ma = MultipleAlignment.from_new(new_pattern("a b c"))
        sc = score(ma, CostModel(fixed_bits=2.0))
        assert sc == CompressionScore(0.0, 0.0, 0.0, 0.0)

    def test_two_row_hand_count(self):
        # 3 of 3 matched, 3 unaligned ID-symbols, all costs 2
        ma = two_row("t h e", "D/i 17/i t h e #D/i")
        sc = score(ma, CostModel(fixed_bits=2.0))
        assert sc.b_new_matched == 6.0
        assert sc.b_code == 6.0
        assert sc.cd == 0.0
        assert sc.new_coverage == 1.0

    def test_full_parse_absorbs_all_new_bits(self, sentence_grammar, sentence_new):
        results = build_alignments(sentence_new, sentence_grammar)
        ma, sc = results[0]
        assert sc.b_new_matched == pytest.approx(160.0, abs=0.01)
        assert sc.new_coverage == 1.0

    def test_monotone_in_matching(self):
        cm = CostModel(fixed_bits=2.0)
        partial = two_row("t h e x", "D/i 17/i t h e #D/i")
        full = two_row("t h e", "D/i 17/i t h e #D/i")
        assert score(full, cm).b_new_matched >= score(partial, cm).b_new_matched


class TestBuildAlignments:
    def test_empty_grammar_returns_bare_new(self):
        new = new_pattern("a b c")
        results = build_alignments(new, Grammar())
        assert len(results) == 1
        ma, sc = results[0]
        assert len(ma.rows) == 1
        assert sc.cd == 0.0

    def test_sentence_code_pattern(self, sentence_grammar, sentence_new):
        results = build_alignments(sentence_new, sentence_grammar)
        code = " ".join(s.token for s in derive_code_pattern(results[0][0]))
        assert code == "S PL 0a 17 6 11 21 #S"

    def test_repeat_recursion(self, repeat_grammar, repeat_new):
        results = build_alignments(repeat_new, repeat_grammar)
        ma, sc = results[0]
        ids = [r.pattern_id for r in ma.rows[1:]]
        assert ids.count("nest") == 4
        assert ids.count("stop") == 1
        assert sc.new_coverage == 1.0

    def test_results_sorted_by_cd(self, sentence_grammar, sentence_new):
        results = build_alignments(sentence_new, sentence_grammar,
                                   SearchConfig(beam_width=10, max_cycles=6))
        cds = [sc.cd for _ma, sc in results]
        assert cds == sorted(cds, reverse=True)

    def test_deterministic(self, repeat_grammar, repeat_new):
        a = build_alignments(repeat_new, repeat_grammar)
        b = build_alignments(repeat_new, repeat_grammar)
        assert [ma.key() for ma, _ in a] == [ma.key() for ma, _ in b]

    def test_rejects_stored_pattern_as_row_zero(self, sentence_grammar):
        old = parse_pattern("a b", role_markup=True, pattern_id="x")
        with pytest.raises(InvariantViolation):
            build_alignments(old, sentence_grammar)

    def test_reverse_flag_aligns_mirrored_pattern(self):
        g = load_grammar("#! surface a b c\n#! id fwd\n1\tM/i 9/i a b c #M/i\n")
        new = new_pattern("c b a")
        plain = build_alignments(new, g)[0][1]
        assert plain.new_coverage < 1.0
        rev = build_alignments(new, g, SearchConfig(allow_reverse=True))[0]
        assert rev[1].new_coverage == 1.0
        assert any(r.pattern_id.endswith("~rev") for r in rev[0].rows[1:])


def parse_render(text):
    """Recover (token, row-set) incidence per character column."""
    lines = text.splitlines()
    row_lines = [ln for i, ln in enumerate(lines) if i % 2 == 0]
    columns = {}
    for row_index, line in enumerate(row_lines):
        body = line[line.index(" ") + 1: line.rindex(" ")]
        for m in re.finditer(r"[^\s|]+", body):
            columns.setdefault(m.start(), []).append((row_index, m.group(0)))
    out = []
    for start in sorted(columns):
        entries = columns[start]
        tokens = {t for _r, t in entries}
        assert len(tokens) == 1, f"mixed tokens at char {start}"
        out.append((entries[0][1], frozenset(r for r, _t in entries)))
    return out


def incidence(ma):
    return [(c.token, frozenset(c.rows())) for c in ma.columns]


class TestRender:
    def test_single_row_layout(self):
        ma = MultipleAlignment.from_new(new_pattern("a b"))
        assert render(ma) == "0 a b 0"

    def test_two_row_connector(self):
        ma = two_row("t h e", "D/i 17/i t h e #D/i")
        text = render(ma)
        lines = text.splitlines()
        assert len(lines) == 3
        assert lines[0].startswith("0") and lines[0].endswith("0")
        assert lines[2].startswith("1") and lines[2].endswith("1")
        assert lines[1].count("|") == 3
        assert parse_render(text) == incidence(ma)

    def test_sentence_render_round_trip(self, sentence_grammar, sentence_new):
        ma, _sc = build_alignments(sentence_new, sentence_grammar)[0]
        assert parse_render(render(ma)) == incidence(ma)

    def test_repeat_render_round_trip(self, repeat_grammar, repeat_new):
        ma, _sc = build_alignments(repeat_new, repeat_grammar)[0]
        assert parse_render(render(ma)) == incidence(ma)

    def test_random_merges_render_round_trip(self):
        rng = random.Random(7)
        tokens = "a b c d".split()
        for _ in range(25):
            new = new_pattern(" ".join(rng.choices(tokens, k=rng.randint(1, 6))))
            ma = MultipleAlignment.from_new(new)
            for oi in range(rng.randint(1, 3)):
                body = " ".join(rng.choices(tokens, k=rng.randint(1, 4)))
                old = parse_pattern(f"Q{oi}/i {body} #Q{oi}/i", role_markup=True,
                                    pattern_id=f"q{oi}")
                banned = banned_pairs(ma, old)
                pms = pairwise_match(ma.projection(), [s.token for s in old.symbols],
                                     3, banned=banned)
                pm = pms[min(len(pms) - 1, rng.randint(0, 2))]
                if pm.pairs:
                    ma = merge(ma, old, pm)
            assert validate(ma) == []
            assert parse_render(render(ma)) == incidence(ma)


class TestDump:
    def test_format(self):
        ma = two_row("t h e", "D/i 17/i t h e #D/i")
        lines = dump(ma).splitlines()
        assert lines[0] == "col 1: D 1:0"
        assert lines[2] == "col 3: t 0:0 1:2"
