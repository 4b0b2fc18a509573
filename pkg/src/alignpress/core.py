"""Symbols, patterns, grammars, and the bit-cost model.

Grammar file format (UTF-8 text, one record per line):

    <frequency><TAB><token>[/i] <token>[/i] ...

A ``/i`` suffix marks an identification symbol; everything else is a
contents symbol.  Lines beginning ``#!`` are directives:

    #! costmodel fixed <bits>
    #! costmodel frequency <floor_bits>
    #! surface <token> <token> ...
    #! id <name>            (names the next record; default is the
                             1-based record ordinal)

Other lines beginning ``#`` are comments.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import (
    BadFrequency,
    DuplicateId,
    EmptyPattern,
    InvariantViolation,
    MalformedToken,
    ParseError,
    UnknownToken,
)

ROLE_ID = "ID"
ROLE_C = "C"

ORIGIN_NEW = "new"
ORIGIN_OLD = "old"

MODE_FIXED = "fixed"
MODE_FREQUENCY = "frequency"

# Default cost: 17 surface symbols at this rate total exactly 160 bits.
DEFAULT_FIXED_BITS = 160.0 / 17.0

_ID_SUFFIX = "/i"


@dataclass(frozen=True, slots=True)
class Symbol:
    """An atomic token with a role.  Two symbols either match (equal
    token text) or they do not; the role never takes part in matching."""

    token: str
    role: str = ROLE_C

    def __post_init__(self):
        if not self.token or self.token.split() != [self.token]:
            raise MalformedToken(f"bad token {self.token!r}")
        if self.role not in (ROLE_ID, ROLE_C):
            raise InvariantViolation(f"bad role {self.role!r}")

    def matches(self, other: "Symbol") -> bool:
        return self.token == other.token


@dataclass(frozen=True)
class Pattern:
    """One 1-D sequence of symbols with a frequency count and identity."""

    pattern_id: str
    symbols: tuple[Symbol, ...]
    frequency: int = 1
    origin: str = ORIGIN_OLD

    def __post_init__(self):
        if not self.symbols:
            raise EmptyPattern(f"pattern {self.pattern_id!r} has no symbols")
        if self.frequency < 1:
            raise BadFrequency(f"pattern {self.pattern_id!r}: frequency {self.frequency}")
        if self.origin not in (ORIGIN_NEW, ORIGIN_OLD):
            raise InvariantViolation(f"bad origin {self.origin!r}")
        if self.origin == ORIGIN_NEW and any(s.role != ROLE_C for s in self.symbols):
            raise InvariantViolation("incoming patterns carry contents symbols only")

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(s.token for s in self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)


def parse_pattern(line: str, role_markup: bool = False, pattern_id: str | None = None,
                  frequency: int = 1) -> Pattern:
    """Parse one whitespace-separated pattern line.

    With ``role_markup`` a trailing ``/i`` marks an ID-symbol and the
    pattern is treated as stored knowledge; without it every token is a
    contents symbol of an incoming pattern.
    """
    toks = line.split()
    if not toks:
        raise EmptyPattern("empty pattern line")
    symbols = []
    for tok in toks:
        if tok == _ID_SUFFIX:
            raise MalformedToken("bare '/i' token")
        if role_markup and tok.endswith(_ID_SUFFIX):
            symbols.append(Symbol(tok[: -len(_ID_SUFFIX)], ROLE_ID))
        else:
            symbols.append(Symbol(tok, ROLE_C))
    origin = ORIGIN_OLD if role_markup else ORIGIN_NEW
    if pattern_id is None:
        pattern_id = "new" if origin == ORIGIN_NEW else "old"
    return Pattern(pattern_id, tuple(symbols), frequency, origin)


def format_pattern(pattern: Pattern, role_markup: bool | None = None) -> str:
    """Render a pattern back to its one-line text form (inverse of
    :func:`parse_pattern`)."""
    if role_markup is None:
        role_markup = pattern.origin == ORIGIN_OLD
    parts = []
    for s in pattern.symbols:
        if role_markup and s.role == ROLE_ID:
            parts.append(s.token + _ID_SUFFIX)
        else:
            if role_markup and s.token.endswith(_ID_SUFFIX):
                raise MalformedToken(f"contents token {s.token!r} would read as an ID mark")
            parts.append(s.token)
    return " ".join(parts)


def new_pattern(text: str, pattern_id: str = "new") -> Pattern:
    """Convenience: build an incoming pattern from plain token text."""
    return parse_pattern(text, role_markup=False, pattern_id=pattern_id)


@dataclass(frozen=True)
class CostModel:
    """Per-symbol bit costs.  ``fixed`` charges the same for every token;
    ``frequency`` uses stored per-token code lengths clamped at
    ``floor_bits``."""

    mode: str = MODE_FIXED
    fixed_bits: float = DEFAULT_FIXED_BITS
    per_symbol_bits: Mapping[str, float] = field(default_factory=dict)
    floor_bits: float = 1.0

    def __post_init__(self):
        if self.mode not in (MODE_FIXED, MODE_FREQUENCY):
            raise InvariantViolation(f"bad cost mode {self.mode!r}")
        if self.floor_bits <= 0:
            raise InvariantViolation("floor_bits must be positive")
        if self.mode == MODE_FIXED and self.fixed_bits <= 0:
            raise InvariantViolation("fixed_bits must be positive")

    def cost(self, token: str) -> float:
        if self.mode == MODE_FIXED:
            return self.fixed_bits
        try:
            raw = self.per_symbol_bits[token]
        except KeyError:
            raise UnknownToken(f"no cost for token {token!r}") from None
        return max(self.floor_bits, raw)


def symbol_cost(token: str, cost_model: CostModel) -> float:
    """Bits needed to represent one token under the model."""
    return cost_model.cost(token)


def pattern_size_bits(pattern: Pattern, cost_model: CostModel) -> float:
    """Total bits of a pattern: the sum of its symbol costs."""
    return sum(cost_model.cost(s.token) for s in pattern.symbols)


def frequency_cost_model(patterns: Iterable[Pattern], floor_bits: float = 1.0) -> CostModel:
    """Shannon-style integer code lengths from token frequencies, weighted
    by pattern frequency and clamped below at ``floor_bits``."""
    counts: Counter[str] = Counter()
    for p in patterns:
        for s in p.symbols:
            counts[s.token] += p.frequency
    total = sum(counts.values())
    bits = {
        tok: float(max(floor_bits, math.ceil(-math.log2(n / total))))
        for tok, n in counts.items()
    }
    return CostModel(MODE_FREQUENCY, per_symbol_bits=bits, floor_bits=floor_bits)


@dataclass(frozen=True)
class Grammar:
    """A set of stored patterns plus the cost model and the surface
    alphabet (tokens that may appear in incoming patterns)."""

    patterns: tuple[Pattern, ...] = ()
    cost_model: CostModel = field(default_factory=CostModel)
    surface_alphabet: frozenset[str] = frozenset()

    def __post_init__(self):
        seen = set()
        for p in self.patterns:
            if p.origin != ORIGIN_OLD:
                raise InvariantViolation(f"pattern {p.pattern_id!r} is not stored knowledge")
            if p.pattern_id in seen:
                raise DuplicateId(f"duplicate pattern id {p.pattern_id!r}")
            seen.add(p.pattern_id)
        if self.cost_model.mode == MODE_FREQUENCY:
            for p in self.patterns:
                for s in p.symbols:
                    self.cost_model.cost(s.token)

    def get(self, pattern_id: str) -> Pattern | None:
        for p in self.patterns:
            if p.pattern_id == pattern_id:
                return p
        return None

    def __contains__(self, pattern_id: str) -> bool:
        return self.get(pattern_id) is not None

    def __iter__(self):
        return iter(self.patterns)

    def __len__(self) -> int:
        return len(self.patterns)

    def id_tokens(self) -> frozenset[str]:
        """Tokens used anywhere as ID-symbols."""
        return frozenset(
            s.token for p in self.patterns for s in p.symbols if s.role == ROLE_ID
        )


def load_grammar(source) -> Grammar:
    """Read a grammar from a file object or a string in the format
    documented at module level."""
    text = source.read() if hasattr(source, "read") else source
    mode = MODE_FIXED
    fixed_bits = DEFAULT_FIXED_BITS
    floor_bits = 1.0
    surface: set[str] = set()
    pending_id: str | None = None
    patterns: list[Pattern] = []
    seen_ids: set[str] = set()
    record = 0

    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#!"):
            parts = stripped[2:].split()
            if not parts:
                raise ParseError(ln, "empty directive")
            if parts[0] == "costmodel":
                if len(parts) != 3 or parts[1] not in (MODE_FIXED, MODE_FREQUENCY):
                    raise ParseError(ln, "expected 'costmodel fixed <bits>' or 'costmodel frequency <floor_bits>'")
                try:
                    value = float(parts[2])
                except ValueError:
                    raise ParseError(ln, f"bad number {parts[2]!r}") from None
                if value <= 0:
                    raise ParseError(ln, "cost bits must be positive")
                mode = parts[1]
                if mode == MODE_FIXED:
                    fixed_bits = value
                else:
                    floor_bits = value
            elif parts[0] == "surface":
                surface.update(parts[1:])
            elif parts[0] == "id":
                if len(parts) != 2:
                    raise ParseError(ln, "expected 'id <name>'")
                pending_id = parts[1]
            else:
                raise ParseError(ln, f"unknown directive {parts[0]!r}")
            continue
        if stripped.startswith("#"):
            continue
        if "\t" not in line:
            raise ParseError(ln, "expected <frequency><TAB><tokens>")
        freq_text, body = line.split("\t", 1)
        try:
            freq = int(freq_text.strip())
        except ValueError:
            raise ParseError(ln, f"bad frequency {freq_text.strip()!r}") from None
        if freq < 1:
            raise BadFrequency(f"line {ln}: frequency {freq}")
        record += 1
        pid = pending_id if pending_id is not None else str(record)
        pending_id = None
        if pid in seen_ids:
            raise DuplicateId(f"line {ln}: duplicate pattern id {pid!r}")
        seen_ids.add(pid)
        try:
            pat = parse_pattern(body, role_markup=True, pattern_id=pid, frequency=freq)
        except (EmptyPattern, MalformedToken) as exc:
            raise ParseError(ln, str(exc)) from None
        patterns.append(pat)

    if mode == MODE_FIXED:
        cm = CostModel(MODE_FIXED, fixed_bits=fixed_bits)
    else:
        cm = frequency_cost_model(patterns, floor_bits=floor_bits)
    return Grammar(tuple(patterns), cm, frozenset(surface))


def save_grammar(grammar: Grammar) -> str:
    """Serialize a grammar to the canonical text format.  Loading the
    result reproduces the same patterns, frequencies, roles, and cost
    model."""
    cm = grammar.cost_model
    lines = []
    if cm.mode == MODE_FIXED:
        lines.append(f"#! costmodel fixed {cm.fixed_bits!r}")
    else:
        lines.append(f"#! costmodel frequency {cm.floor_bits!r}")
    if grammar.surface_alphabet:
        lines.append("#! surface " + " ".join(sorted(grammar.surface_alphabet)))
    for p in grammar.patterns:
        lines.append(f"#! id {p.pattern_id}")
        lines.append(f"{p.frequency}\t{format_pattern(p, role_markup=True)}")
    return "\n".join(lines) + "\n"


def with_patterns(grammar: Grammar, patterns: Sequence[Pattern],
                  extra_surface: Iterable[str] = ()) -> Grammar:
    """A new grammar with the given pattern set, recomputing frequency
    costs when needed."""
    cm = grammar.cost_model
    if cm.mode == MODE_FREQUENCY:
        cm = frequency_cost_model(patterns, floor_bits=cm.floor_bits)
    return Grammar(tuple(patterns), cm,
                   grammar.surface_alphabet | frozenset(extra_surface))


def bump_frequency(pattern: Pattern, by: int = 1) -> Pattern:
    return replace(pattern, frequency=pattern.frequency + by)
