"""Unsupervised grammar learning under a minimum-length-encoding objective.

Incoming patterns are aligned against the grammar so far.  Fully matched
stored patterns gain frequency; partial matches spawn new patterns from
the matched and unmatched parts; wholly unmatched input is stored intact
with fresh ID-symbols.  Periodically the grammar is pruned: any pattern
whose removal shrinks grammar-plus-encodings total bits is discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .align import MultipleAlignment, SearchConfig, build_alignments, derive_code_pattern
from .codec import Encoding
from .core import (
    ORIGIN_OLD,
    ROLE_C,
    ROLE_ID,
    CostModel,
    Grammar,
    Pattern,
    Symbol,
    bump_frequency,
    pattern_size_bits,
    symbol_cost,
    with_patterns,
)

CLASS_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


@dataclass
class IdGenerator:
    """Issues unique (open, ordinal, close) ID triples like A 1 ... #A.
    Class letters cycle; ordinals are global, so triples never repeat
    within a run."""

    next_ordinal: int = 1
    class_letters: str = CLASS_LETTERS

    def fresh(self) -> tuple[str, str, str]:
        letter = self.class_letters[(self.next_ordinal - 1) % len(self.class_letters)]
        ordinal = str(self.next_ordinal)
        self.next_ordinal += 1
        return letter, ordinal, "#" + letter

    @classmethod
    def for_grammar(cls, grammar: Grammar) -> "IdGenerator":
        """Start above any numeric token already present, so generated
        ordinals cannot collide with a seeded grammar."""
        top = 0
        for p in grammar.patterns:
            for s in p.symbols:
                if s.token.isdigit():
                    top = max(top, int(s.token))
        return cls(next_ordinal=top + 1)


def frame_pattern(body: Sequence[Symbol], gen: IdGenerator, frequency: int,
                  pattern_id: str | None = None) -> Pattern:
    """Wrap contents symbols in a fresh ID frame: <L> <n> body #<L>."""
    opener, ordinal, closer = gen.fresh()
    symbols = (
        Symbol(opener, ROLE_ID),
        Symbol(ordinal, ROLE_ID),
        *[Symbol(s.token, ROLE_C) for s in body],
        Symbol(closer, ROLE_ID),
    )
    return Pattern(pattern_id or f"g{ordinal}", symbols, frequency, ORIGIN_OLD)


@dataclass(frozen=True)
class LearnState:
    """Grammar plus one encoding per ingested pattern and their totals."""

    grammar: Grammar
    encodings: tuple[Encoding, ...] = ()
    total_g_bits: float = 0.0
    total_e_bits: float = 0.0

    @classmethod
    def empty(cls, cost_model: CostModel | None = None) -> "LearnState":
        return cls(Grammar(cost_model=cost_model or CostModel()))


def make_state(grammar: Grammar, encodings: Sequence[Encoding]) -> LearnState:
    g_bits = sum(pattern_size_bits(p, grammar.cost_model) for p in grammar.patterns)
    e_bits = sum(e.bits_out for e in encodings)
    return LearnState(grammar, tuple(encodings), g_bits, e_bits)


def grammar_cost(state: LearnState) -> tuple[float, float, float]:
    """(grammar bits, encoding bits, total)."""
    return state.total_g_bits, state.total_e_bits, state.total_g_bits + state.total_e_bits


def encode_with_residual(new: Pattern, grammar: Grammar,
                         cfg: SearchConfig | None = None) -> Encoding:
    """Best-effort encoding for learning: the derived code plus, when
    coverage is partial, the unmatched incoming symbols as literals in
    column order.  Uncovered content is thereby charged its raw bits, so
    pruning cannot cheat by deleting the patterns that explain it."""
    cfg = cfg or SearchConfig()
    cm = grammar.cost_model
    if not grammar.patterns:
        hybrid = new.symbols
    else:
        ma, _sc = build_alignments(new, grammar, cfg)[0]
        out = []
        for col in ma.columns:
            if len(col.entries) != 1:
                continue
            r, p = col.entries[0]
            sym = ma.symbol_at(r, p)
            if r == 0 or sym.role == ROLE_ID:
                out.append(sym)
        hybrid = tuple(out)
    return Encoding(
        code=tuple(hybrid),
        symbols_in=len(new.symbols),
        symbols_out=len(hybrid),
        bits_in=pattern_size_bits(new, cm),
        bits_out=sum(symbol_cost(s.token, cm) for s in hybrid),
    )


def update_frequencies(ma: MultipleAlignment, grammar: Grammar) -> Grammar:
    """Bump the frequency of every stored pattern whose row has all of
    its contents symbols in matched columns, once per row instance."""
    matched_positions = {
        (r, p) for col in ma.columns if col.matched for r, p in col.entries
    }
    bumps: dict[str, int] = {}
    for row in ma.rows[1:]:
        pat = row.pattern
        cpos = [i for i, s in enumerate(pat.symbols) if s.role == ROLE_C]
        if cpos and all((row.row_index, i) in matched_positions for i in cpos):
            bumps[pat.pattern_id] = bumps.get(pat.pattern_id, 0) + 1
    if not bumps:
        return grammar
    updated = [
        bump_frequency(p, bumps[p.pattern_id]) if p.pattern_id in bumps else p
        for p in grammar.patterns
    ]
    return with_patterns(grammar, updated)


def _segment_runs(values: list[int]) -> list[list[int]]:
    runs: list[list[int]] = []
    for v in values:
        if runs and v == runs[-1][-1] + 1:
            runs[-1].append(v)
        else:
            runs.append([v])
    return runs


def derive_patterns_from_partial_match(ma: MultipleAlignment,
                                       gen: IdGenerator) -> list[Pattern]:
    """New stored patterns from a partially matched alignment: one per
    maximal contiguous matched run shared by row 0 and a stored row
    (frequency 2), one per maximal unmatched segment of row 0 and of each
    partially matched stored row's contents (frequency 1)."""
    matched_cols = [ci for ci, col in enumerate(ma.columns) if col.matched]
    matched_positions = {
        (r, p) for ci in matched_cols for r, p in ma.columns[ci].entries
    }
    row0 = ma.rows[0]
    new_len = len(row0.pattern.symbols)

    out: list[Pattern] = []
    bodies: set[tuple[str, ...]] = set()

    def emit(symbols: list[Symbol], frequency: int) -> None:
        key = tuple(s.token for s in symbols)
        if not key or key in bodies:
            return
        bodies.add(key)
        out.append(frame_pattern(symbols, gen, frequency))

    # matched runs shared between row 0 and each stored row, contiguous
    # in both patterns
    for row in ma.rows[1:]:
        shared: list[tuple[int, int]] = []
        for ci in matched_cols:
            col = ma.columns[ci]
            p0 = col.position_of(0)
            pr = col.position_of(row.row_index)
            if p0 is not None and pr is not None:
                shared.append((p0, pr))
        shared.sort()
        run: list[tuple[int, int]] = []
        for p0, pr in shared + [(-2, -2)]:
            if run and (p0 != run[-1][0] + 1 or pr != run[-1][1] + 1):
                emit([row0.pattern.symbols[a] for a, _ in run], 2)
                run = []
            run.append((p0, pr))

    # unmatched segments of the incoming pattern
    unmatched0 = [p for p in range(new_len) if (0, p) not in matched_positions]
    if len(unmatched0) < new_len:
        for seg in _segment_runs(unmatched0):
            emit([row0.pattern.symbols[p] for p in seg], 1)

    # unmatched contents segments of partially matched stored rows
    for row in ma.rows[1:]:
        pat = row.pattern
        cpos = [i for i, s in enumerate(pat.symbols) if s.role == ROLE_C]
        hit = [i for i in cpos if (row.row_index, i) in matched_positions]
        if not hit or len(hit) == len(cpos):
            continue
        missed = [i for i in cpos if (row.row_index, i) not in matched_positions]
        for seg in _segment_runs(missed):
            emit([pat.symbols[p] for p in seg], 1)

    return out


def _existing_bodies(grammar: Grammar) -> set[tuple[str, ...]]:
    return {
        tuple(s.token for s in p.symbols if s.role == ROLE_C)
        for p in grammar.patterns
    }


def ingest(new: Pattern, state: LearnState, cfg: SearchConfig | None = None,
           gen: IdGenerator | None = None) -> LearnState:
    """Absorb one incoming pattern: update frequencies, derive patterns
    from partial matches, or store the input whole when nothing matched.
    Returns a new state with refreshed totals and one more encoding."""
    cfg = cfg or SearchConfig()
    gen = gen or IdGenerator.for_grammar(state.grammar)
    grammar = state.grammar

    best: MultipleAlignment | None = None
    if grammar.patterns:
        ma, sc = build_alignments(new, grammar, cfg)[0]
        if sc.new_coverage > 0.0:
            best = ma

    if best is None:
        body_key = new.tokens
        holder = next(
            (p for p in grammar.patterns
             if tuple(s.token for s in p.symbols if s.role == ROLE_C) == body_key),
            None,
        )
        if holder is not None:
            patterns = [bump_frequency(p) if p.pattern_id == holder.pattern_id else p
                        for p in grammar.patterns]
        else:
            patterns = list(grammar.patterns) + [frame_pattern(new.symbols, gen, 1)]
        grammar = with_patterns(grammar, patterns, extra_surface=new.tokens)
    else:
        grammar = update_frequencies(best, grammar)
        known = _existing_bodies(grammar)
        derived = [
            p for p in derive_patterns_from_partial_match(best, gen)
            if tuple(s.token for s in p.symbols if s.role == ROLE_C) not in known
        ]
        grammar = with_patterns(grammar, list(grammar.patterns) + derived,
                                extra_surface=new.tokens)

    encoding = encode_with_residual(new, grammar, cfg)
    return make_state(grammar, state.encodings + (encoding,))


def select_grammar(state: LearnState, corpus: Sequence[Pattern],
                   cfg: SearchConfig | None = None) -> LearnState:
    """Greedy pruning: repeatedly drop the single pattern whose removal
    most decreases grammar-plus-encodings bits over the corpus, until no
    removal helps.  Ties resolve in pattern-id order."""
    cfg = cfg or SearchConfig()
    grammar = state.grammar

    def cost_of(g: Grammar) -> tuple[float, tuple[Encoding, ...]]:
        encs = tuple(encode_with_residual(item, g, cfg) for item in corpus)
        g_bits = sum(pattern_size_bits(p, g.cost_model) for p in g.patterns)
        return g_bits + sum(e.bits_out for e in encs), encs

    total, encodings = cost_of(grammar)
    while grammar.patterns:
        best_total = total
        best_pair: tuple[Grammar, tuple[Encoding, ...]] | None = None
        for victim in sorted(grammar.patterns, key=lambda p: p.pattern_id):
            trimmed = with_patterns(
                grammar, [p for p in grammar.patterns if p.pattern_id != victim.pattern_id]
            )
            t, encs = cost_of(trimmed)
            if t < best_total - 1e-9:
                best_total, best_pair = t, (trimmed, encs)
        if best_pair is None:
            break
        grammar, encodings = best_pair
        total = best_total
    return make_state(grammar, encodings)


def learn(corpus: Sequence[Pattern], cfg: SearchConfig | None = None,
          cost_model: CostModel | None = None,
          prune_interval: int = 10) -> tuple[Grammar, tuple[Encoding, ...]]:
    """Fold :func:`ingest` over a corpus, pruning every
    ``prune_interval`` items and once at the end.  Returns the final
    grammar and one encoding per corpus item."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    cfg = cfg or SearchConfig()
    state = LearnState.empty(cost_model)
    gen = IdGenerator()
    for i, item in enumerate(corpus, start=1):
        state = ingest(item, state, cfg, gen)
        if prune_interval and i % prune_interval == 0:
            state = select_grammar(state, corpus[:i], cfg)
    state = select_grammar(state, corpus, cfg)
    return state.grammar, state.encodings
