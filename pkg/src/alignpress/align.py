"""Pairwise matching and stepwise multiple-alignment construction.

An alignment holds one incoming pattern in row 0 and any number of
stored-pattern instances below it.  A column groups identical tokens
from one or more rows; alignments are scored by how many bits of the
incoming pattern they absorb minus the bits of the code needed to
reconstruct it.  Search is beam search: each cycle extends the current
best alignments by merging one more stored pattern.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .core import (
    ORIGIN_NEW,
    ROLE_C,
    ROLE_ID,
    CostModel,
    Grammar,
    Pattern,
    Symbol,
    symbol_cost,
)
from .errors import InvariantViolation

# Hard cap on enumerated candidate matchings per pairwise call; only
# degenerate inputs (long runs of one token) ever reach it.
_ENUM_CAP = 20000


def _token_list(seq: Sequence) -> list[str]:
    return [s.token if isinstance(s, Symbol) else str(s) for s in seq]


@dataclass(frozen=True)
class PairwiseMatch:
    """An order-preserving set of equal-token index pairs.

    ``right_reversed`` marks matches produced against the reversed right
    sequence but reported in original coordinates; their right indices
    decrease instead of increasing.
    """

    pairs: tuple[tuple[int, int], ...]
    right_reversed: bool = False

    def __post_init__(self):
        lefts = [l for l, _ in self.pairs]
        rights = [r for _, r in self.pairs]
        if any(b <= a for a, b in zip(lefts, lefts[1:])):
            raise InvariantViolation("left indices must strictly increase")
        if self.right_reversed:
            if any(b >= a for a, b in zip(rights, rights[1:])):
                raise InvariantViolation("reversed match: right indices must strictly decrease")
        elif any(b <= a for a, b in zip(rights, rights[1:])):
            raise InvariantViolation("right indices must strictly increase (crossing match)")

    @property
    def size(self) -> int:
        return len(self.pairs)


def _gap_count(pairs: Sequence[tuple[int, int]]) -> int:
    g = 0
    for (l1, r1), (l2, r2) in zip(pairs, pairs[1:]):
        g += (l2 - l1 > 1) + (r2 - r1 > 1)
    return g


def pairwise_match(left: Sequence, right: Sequence, limit: int = 1,
                   banned: frozenset[tuple[int, int]] | set | None = None) -> list[PairwiseMatch]:
    """Up to ``limit`` distinct matchings of ``left`` against ``right``,
    best first: most pairs, then fewest gaps, then leftmost pairing.
    Gaps of any size are allowed on both sides.  The empty match is
    returned only when nothing matches at all.  ``banned`` pairs are
    excluded (the search uses this for column-discipline rules).

    Best-first enumeration ordered by an optimistic bound (pairs so far
    plus the LCS of the remaining suffixes), so the largest matchings
    surface first even on highly repetitive sequences.
    """
    lt, rt = _token_list(left), _token_list(right)
    if not lt or not rt:
        raise ValueError("sequences must be non-empty")
    if limit < 1:
        raise ValueError("limit must be >= 1")
    n, m = len(lt), len(rt)
    banned = banned or frozenset()

    # bound[i][j]: longest common subsequence of lt[i:], rt[j:]
    bound = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = bound[i], bound[i + 1]
        for j in range(m - 1, -1, -1):
            ok = lt[i] == rt[j] and (i, j) not in banned
            row[j] = nxt[j + 1] + 1 if ok else max(nxt[j], row[j + 1])

    # heap entries: (-potential, tiebreak, pairs, i, j, is_terminal)
    heap: list[tuple[int, int, tuple, int, int, bool]] = []
    counter = 0
    heapq.heappush(heap, (-bound[0][0], counter, (), 0, 0, False))
    terminals: list[tuple[tuple[int, int], ...]] = []
    kth: list[int] = []  # min-heap of the best `limit` terminal sizes
    budget = _ENUM_CAP

    while heap and budget > 0:
        budget -= 1
        neg_pot, _tick, pairs, i, j, is_terminal = heapq.heappop(heap)
        if len(kth) >= limit and -neg_pot < kth[0]:
            break
        if is_terminal:
            terminals.append(pairs)
            if len(kth) < limit:
                heapq.heappush(kth, len(pairs))
            elif len(pairs) > kth[0]:
                heapq.heapreplace(kth, len(pairs))
            continue
        if pairs:
            counter += 1
            heapq.heappush(heap, (-len(pairs), counter, pairs, i, j, True))
        for l in range(i, n):
            tok = lt[l]
            for r in range(j, m):
                if rt[r] != tok or (l, r) in banned:
                    continue
                potential = len(pairs) + 1 + bound[l + 1][r + 1]
                if len(kth) >= limit and potential < kth[0]:
                    continue
                counter += 1
                heapq.heappush(heap, (-potential, counter, pairs + ((l, r),), l + 1, r + 1, False))

    if not terminals:
        return [PairwiseMatch(())]
    terminals.sort(key=lambda p: (-len(p), _gap_count(p), p))
    return [PairwiseMatch(p) for p in terminals[:limit]]


def match_reversed(left: Sequence, right: Sequence) -> PairwiseMatch:
    """Best match of ``left`` against ``right`` read right-to-left, with
    pair indices reported in the original right coordinates.  Symbols are
    atomic, so reversal has no effect on individual tokens."""
    rt = _token_list(right)
    best = pairwise_match(left, list(reversed(rt)), 1)[0]
    m = len(rt)
    pairs = tuple((l, m - 1 - r) for l, r in best.pairs)
    return PairwiseMatch(pairs, right_reversed=True)


def reversed_pattern(pattern: Pattern) -> Pattern:
    """A right-to-left copy of a stored pattern, used when reverse
    matching is enabled."""
    return Pattern(pattern.pattern_id + "~rev", tuple(reversed(pattern.symbols)),
                   pattern.frequency, pattern.origin)


@dataclass(frozen=True)
class RowInstance:
    """One appearance of a pattern in an alignment; the same stored
    pattern may occupy several rows with distinct ordinals."""

    row_index: int
    pattern: Pattern
    instance_ordinal: int = 1

    @property
    def pattern_id(self) -> str:
        return self.pattern.pattern_id


@dataclass(frozen=True)
class Column:
    """One alignment column: a shared token plus (row, position) entries."""

    token: str
    entries: tuple[tuple[int, int], ...]

    @property
    def matched(self) -> bool:
        return len(self.entries) >= 2

    def rows(self) -> tuple[int, ...]:
        return tuple(r for r, _ in self.entries)

    def position_of(self, row_index: int) -> int | None:
        for r, p in self.entries:
            if r == row_index:
                return p
        return None


@dataclass(frozen=True)
class Violation:
    kind: str
    row: int
    column: int
    detail: str = ""


@dataclass(frozen=True)
class MultipleAlignment:
    """Rows (row 0 = the incoming pattern) and ordered columns."""

    rows: tuple[RowInstance, ...]
    columns: tuple[Column, ...]

    @classmethod
    def from_new(cls, pattern: Pattern) -> "MultipleAlignment":
        rows = (RowInstance(0, pattern, 1),)
        cols = tuple(Column(s.token, ((0, i),)) for i, s in enumerate(pattern.symbols))
        return cls(rows, cols)

    @property
    def new_pattern(self) -> Pattern:
        return self.rows[0].pattern

    def projection(self) -> list[str]:
        """The left-to-right sequence of column tokens."""
        return [c.token for c in self.columns]

    def symbol_at(self, row_index: int, position: int) -> Symbol:
        return self.rows[row_index].pattern.symbols[position]

    def key(self) -> str:
        """Canonical structure key, stable under merge order (rows are
        renumbered by their column signature)."""
        sig: dict[int, list[int]] = {r.row_index: [] for r in self.rows}
        for ci, col in enumerate(self.columns):
            for r, _ in col.entries:
                sig[r].append(ci)
        old = sorted(
            (r for r in self.rows if r.row_index != 0),
            key=lambda r: (sig[r.row_index], r.pattern_id),
        )
        renum = {0: 0}
        for k, r in enumerate(old, start=1):
            renum[r.row_index] = k
        rows_part = ";".join(r.pattern_id for r in sorted(old, key=lambda r: renum[r.row_index]))
        cols_part = "|".join(
            col.token + "," + ",".join(
                f"{rn}:{p}" for rn, p in sorted((renum[r], p) for r, p in col.entries)
            )
            for col in self.columns
        )
        return rows_part + "#" + cols_part


def _base_id(pattern_id: str) -> str:
    return pattern_id[:-4] if pattern_id.endswith("~rev") else pattern_id


def banned_pairs(ma: MultipleAlignment, pattern: Pattern) -> frozenset[tuple[int, int]]:
    """(column, position) pairs that would break column discipline.

    Three rules, all read off the structure of well-formed alignments:
    a pattern position may not align with the same position of another
    instance of the same pattern (an overlay that only swallows its own
    ID-symbols; shifted self-matches, i.e. recursion, stay legal); a
    column may hold at most one ID-role symbol (ID-symbols are matched
    by contents references, never by each other); and a column may hold
    at most one stored-row contents symbol (contents match the incoming
    row or an ID-symbol, never each other).
    """
    base = _base_id(pattern.pattern_id)
    id_positions = [i for i, s in enumerate(pattern.symbols) if s.role == ROLE_ID]
    c_positions = [i for i, s in enumerate(pattern.symbols) if s.role == ROLE_C]
    banned = set()
    for ci, col in enumerate(ma.columns):
        for r, p in col.entries:
            if r == 0:
                continue
            if _base_id(ma.rows[r].pattern_id) == base and col.token == pattern.symbols[p].token:
                banned.add((ci, p))
            if ma.rows[r].pattern.symbols[p].role == ROLE_ID:
                for pos in id_positions:
                    if pattern.symbols[pos].token == col.token:
                        banned.add((ci, pos))
            else:
                for pos in c_positions:
                    if pattern.symbols[pos].token == col.token:
                        banned.add((ci, pos))
    return frozenset(banned)


def merge_blocked(ma: MultipleAlignment, pattern: Pattern, pm: PairwiseMatch) -> bool:
    """True when the match includes a pair forbidden by column
    discipline (see :func:`banned_pairs`)."""
    banned = banned_pairs(ma, pattern)
    return any(pair in banned for pair in pm.pairs)


def merge(ma: MultipleAlignment, pattern: Pattern, pm: PairwiseMatch) -> MultipleAlignment:
    """Add one pattern instance to an alignment.

    ``pm`` matches the alignment's column projection (left) against the
    pattern (right).  Matched positions join their columns; unmatched
    positions become fresh single-entry columns: a prefix goes directly
    before the first anchor column, a middle run directly after its left
    anchor, a suffix directly after the last anchor.  An empty match
    appends the whole pattern after the existing columns.
    """
    if pm.right_reversed:
        raise InvariantViolation("merge a reversed copy of the pattern instead of a reversed match")
    for ci, pos in pm.pairs:
        if not (0 <= ci < len(ma.columns)) or not (0 <= pos < len(pattern.symbols)):
            raise InvariantViolation("match outside alignment or pattern bounds")
        if ma.columns[ci].token != pattern.symbols[pos].token:
            raise InvariantViolation(
                f"token mismatch at column {ci}: {ma.columns[ci].token!r} vs {pattern.symbols[pos].token!r}"
            )
    if merge_blocked(ma, pattern, pm):
        raise InvariantViolation(
            "blocked merge: self-overlap or two ID-symbols in one column"
        )

    row_index = len(ma.rows)
    ordinal = 1 + sum(1 for r in ma.rows if r.pattern_id == pattern.pattern_id)
    instance = RowInstance(row_index, pattern, ordinal)

    def singles(positions: Iterable[int]) -> list[Column]:
        return [Column(pattern.symbols[p].token, ((row_index, p),)) for p in positions]

    if not pm.pairs:
        cols = list(ma.columns) + singles(range(len(pattern.symbols)))
        return MultipleAlignment(ma.rows + (instance,), tuple(cols))

    before: dict[int, range] = {pm.pairs[0][0]: range(0, pm.pairs[0][1])}
    after: dict[int, range] = {}
    for (c1, p1), (_c2, p2) in zip(pm.pairs, pm.pairs[1:]):
        after[c1] = range(p1 + 1, p2)
    last_c, last_p = pm.pairs[-1]
    after[last_c] = range(last_p + 1, len(pattern.symbols))
    joined = dict(pm.pairs)

    cols = []
    for ci, col in enumerate(ma.columns):
        if ci in before:
            cols.extend(singles(before[ci]))
        if ci in joined:
            cols.append(Column(col.token, col.entries + ((row_index, joined[ci]),)))
        else:
            cols.append(col)
        if ci in after:
            cols.extend(singles(after[ci]))
    return MultipleAlignment(ma.rows + (instance,), tuple(cols))


def validate(ma: MultipleAlignment) -> list[Violation]:
    """Check every structural invariant; an empty list means valid."""
    out: list[Violation] = []
    nrows = len(ma.rows)
    seen: set[tuple[int, int]] = set()
    last_pos: dict[int, int] = {}
    for ci, col in enumerate(ma.columns):
        if not col.entries:
            out.append(Violation("EmptyColumn", -1, ci))
            continue
        for r, p in col.entries:
            if not (0 <= r < nrows):
                out.append(Violation("BadRowIndex", r, ci))
                continue
            pat = ma.rows[r].pattern
            if not (0 <= p < len(pat.symbols)):
                out.append(Violation("BadPosition", r, ci, f"position {p}"))
                continue
            if pat.symbols[p].token != col.token:
                out.append(Violation("TokenMismatch", r, ci,
                                     f"{pat.symbols[p].token!r} != {col.token!r}"))
            if (r, p) in seen:
                out.append(Violation("DuplicateEntry", r, ci, f"position {p}"))
            seen.add((r, p))
            if r in last_pos and p <= last_pos[r]:
                out.append(Violation("RowOrderViolation", r, ci,
                                     f"position {p} after {last_pos[r]}"))
            last_pos[r] = p
    for ci, col in enumerate(ma.columns):
        groups: dict[tuple[str, int], int] = {}
        id_entries = 0
        old_c_entries = 0
        for r, p in col.entries:
            if not (0 <= r < nrows) or not (0 <= p < len(ma.rows[r].pattern.symbols)):
                continue
            if r != 0:
                key = (_base_id(ma.rows[r].pattern_id), p)
                groups[key] = groups.get(key, 0) + 1
            if ma.rows[r].pattern.symbols[p].role == ROLE_ID:
                id_entries += 1
            elif r != 0:
                old_c_entries += 1
        for (pid, p), n in groups.items():
            if n > 1:
                out.append(Violation("SelfOverlap", -1, ci, f"{pid} position {p} twice"))
        if id_entries > 1:
            out.append(Violation("DoubleId", -1, ci, f"{id_entries} ID-symbols in one column"))
        if old_c_entries > 1:
            out.append(Violation("DoubleContents", -1, ci,
                                 f"{old_c_entries} stored contents symbols in one column"))
    for r in range(nrows):
        want = len(ma.rows[r].pattern.symbols)
        have = sum(1 for (rr, _p) in seen if rr == r)
        if have != want:
            out.append(Violation("MissingPosition", r, -1, f"{have} of {want} placed"))
    return out


@dataclass(frozen=True)
class CompressionScore:
    """How well an alignment compresses the incoming pattern."""

    b_new_matched: float
    b_code: float
    cd: float
    new_coverage: float


def derive_code_pattern(ma: MultipleAlignment) -> tuple[Symbol, ...]:
    """Scan columns left to right and collect every single-entry column
    whose sole symbol is an ID-symbol: the code pattern."""
    out = []
    for col in ma.columns:
        if len(col.entries) == 1:
            r, p = col.entries[0]
            sym = ma.symbol_at(r, p)
            if sym.role == ROLE_ID:
                out.append(sym)
    return tuple(out)


def score(ma: MultipleAlignment, cost_model: CostModel) -> CompressionScore:
    """Bits of the incoming pattern absorbed into matched columns, bits
    of the derived code, and their difference."""
    new_len = len(ma.new_pattern.symbols)
    matched_bits = 0.0
    matched_count = 0
    for col in ma.columns:
        if col.matched:
            for r, _p in col.entries:
                if r == 0:
                    matched_bits += symbol_cost(col.token, cost_model)
                    matched_count += 1
    code = derive_code_pattern(ma)
    code_bits = sum(symbol_cost(s.token, cost_model) for s in code)
    return CompressionScore(
        b_new_matched=matched_bits,
        b_code=code_bits,
        cd=matched_bits - code_bits,
        new_coverage=matched_count / new_len,
    )


@dataclass(frozen=True)
class SearchConfig:
    """Beam-search bounds.  ``match_limit`` caps how many pairwise
    matchings are tried per (alignment, pattern) extension and how many
    layout variants of one pattern combination survive a cycle."""

    beam_width: int = 50
    max_cycles: int = 10
    max_rows: int = 32
    allow_reverse: bool = False
    require_full_new_coverage_for_encoding: bool = False
    match_limit: int = 4

    def __post_init__(self):
        if self.beam_width < 1 or self.max_cycles < 1 or self.max_rows < 2:
            raise InvariantViolation("search bounds must be positive (max_rows >= 2)")
        if self.match_limit < 1:
            raise InvariantViolation("match_limit must be >= 1")


@dataclass(frozen=True)
class _Entry:
    ma: MultipleAlignment
    sc: CompressionScore
    code_tokens: tuple[str, ...]
    key: str
    rank: tuple


RankFn = Callable[[MultipleAlignment, CompressionScore, tuple[str, ...], str], tuple]


def _encode_rank(ma: MultipleAlignment, sc: CompressionScore,
                 code_tokens: tuple[str, ...], key: str) -> tuple:
    return (-round(sc.cd, 9), -round(sc.new_coverage, 9), len(ma.rows), code_tokens, key)


def beam_search(new: Pattern, grammar: Grammar, cfg: SearchConfig,
                rank_fn: RankFn = _encode_rank,
                phased: bool = False) -> list[_Entry]:
    """Generic stepwise construction: every cycle extends each beam
    member by one merged pattern instance, then the best ``beam_width``
    of that cycle's extensions are selected for further processing; the
    best alignments seen anywhere are kept in an archive.  Deterministic
    for fixed inputs: patterns are tried in id order and ranking is a
    total order ending in the canonical structure key.

    With ``phased`` the pattern pool grows by reference depth: patterns
    with all-surface contents first, then patterns referencing their
    ID-symbols, and so on.  Decoding needs this bottom-up order, since a
    pattern merged before the rows it refers to would freeze its slot
    symbols in unusable positions.
    """
    if new.origin != ORIGIN_NEW:
        raise InvariantViolation("row 0 must hold an incoming pattern")
    cm = grammar.cost_model

    def make_entry(ma: MultipleAlignment) -> _Entry:
        sc = score(ma, cm)
        code_tokens = tuple(s.token for s in derive_code_pattern(ma))
        return _Entry(ma, sc, code_tokens, ma.key(), rank_fn(ma, sc, code_tokens, ma.key()))

    all_patterns = sorted(grammar.patterns, key=lambda p: p.pattern_id)
    if cfg.allow_reverse:
        all_patterns = all_patterns + [reversed_pattern(p) for p in all_patterns]
    if phased:
        depth = reference_depths(grammar)
        stages = sorted({depth[_base_id(p.pattern_id)] for p in all_patterns} or {0})
        pools = [[p for p in all_patterns if depth[_base_id(p.pattern_id)] <= d] for d in stages]
    else:
        pools = [all_patterns]

    start = make_entry(MultipleAlignment.from_new(new))
    frontier = [start]
    archive: dict[str, _Entry] = {start.key: start}
    for patterns in pools:
        for _cycle in range(cfg.max_cycles):
            extensions: dict[str, _Entry] = {}
            for entry in frontier:
                if len(entry.ma.rows) >= cfg.max_rows:
                    continue
                proj = entry.ma.projection()
                for pat in patterns:
                    banned = banned_pairs(entry.ma, pat)
                    for pm in pairwise_match(proj, [s.token for s in pat.symbols],
                                             cfg.match_limit, banned=banned):
                        if not pm.pairs:
                            continue
                        merged = merge(entry.ma, pat, pm)
                        key = merged.key()
                        if key not in extensions and key not in archive:
                            extensions[key] = make_entry(merged)
            if not extensions:
                break
            # spend beam slots on distinct pattern combinations: layout
            # variants of one combination are capped at match_limit
            buckets: dict[tuple[str, ...], int] = {}
            survivors = []
            for e in sorted(extensions.values(), key=lambda x: x.rank):
                combo = tuple(sorted(r.pattern_id for r in e.ma.rows[1:]))
                n = buckets.get(combo, 0)
                if n < cfg.match_limit:
                    buckets[combo] = n + 1
                    survivors.append(e)
            frontier = survivors[: cfg.beam_width]
            archive.update((e.key, e) for e in frontier)
        frontier = sorted(archive.values(), key=lambda e: e.rank)[: cfg.beam_width]
    return sorted(archive.values(), key=lambda e: e.rank)[: cfg.beam_width]


def reference_depths(grammar: Grammar) -> dict[str, int]:
    """How many reference hops a pattern sits above plain stored
    material: 0 when its contents reference no other pattern's
    ID-symbols, else one more than the deepest referenced pattern.
    Self-references are ignored; reference cycles share a depth."""
    owners: dict[str, list[str]] = {}
    for p in grammar.patterns:
        for s in p.symbols:
            if s.role == ROLE_ID:
                owners.setdefault(s.token, []).append(p.pattern_id)
    refs: dict[str, set[str]] = {}
    for p in grammar.patterns:
        out = set()
        for s in p.symbols:
            if s.role == ROLE_C:
                for owner in owners.get(s.token, ()):
                    if owner != p.pattern_id:
                        out.add(owner)
        refs[p.pattern_id] = out
    depth = {pid: 0 for pid in refs}
    for _ in range(len(refs)):
        changed = False
        for pid, out in refs.items():
            want = max((depth[o] + 1 for o in out), default=0)
            if want > depth[pid] and want <= len(refs):
                depth[pid] = want
                changed = True
        if not changed:
            break
    return depth


def build_alignments(new: Pattern, grammar: Grammar,
                     cfg: SearchConfig | None = None) -> list[tuple[MultipleAlignment, CompressionScore]]:
    """Best alignments of an incoming pattern against a grammar, at most
    ``beam_width`` of them, ordered by compression difference (ties:
    higher coverage, fewer rows, smaller code pattern)."""
    cfg = cfg or SearchConfig()
    return [(e.ma, e.sc) for e in beam_search(new, grammar, cfg)]


def _bar(width: int) -> str:
    k = (width - 1) // 2
    return " " * k + "|" + " " * (width - 1 - k)


def render(ma: MultipleAlignment) -> str:
    """Vertical text layout: one line per row with row numbers at both
    ends, symbols in shared character columns, and connector lines with
    ``|`` wherever a column crosses the gap between adjacent rows.
    Columns that span non-adjacent rows draw ``|`` through the rows in
    between."""
    nrows = len(ma.rows)
    numw = len(str(nrows - 1))
    widths = [len(c.token) for c in ma.columns]
    members = [frozenset(c.rows()) for c in ma.columns]
    spans = [(min(m), max(m)) for m in members]

    lines = []
    for r in range(nrows):
        cells = []
        for ci, col in enumerate(ma.columns):
            if r in members[ci]:
                cells.append(col.token.ljust(widths[ci]))
            elif spans[ci][0] < r < spans[ci][1]:
                cells.append(_bar(widths[ci]))
            else:
                cells.append(" " * widths[ci])
        lines.append(f"{str(r).rjust(numw)} {' '.join(cells)} {r}")
        if r + 1 < nrows:
            cells = []
            for ci in range(len(ma.columns)):
                lo, hi = spans[ci]
                cells.append(_bar(widths[ci]) if lo <= r and hi >= r + 1 else " " * widths[ci])
            lines.append((" " * numw + " " + " ".join(cells)).rstrip())
    return "\n".join(lines)


def dump(ma: MultipleAlignment) -> str:
    """Structured dump: one line per column, rows ascending."""
    lines = []
    for i, col in enumerate(ma.columns, start=1):
        entries = " ".join(f"{r}:{p}" for r, p in sorted(col.entries))
        lines.append(f"col {i}: {col.token} {entries}")
    return "\n".join(lines)
