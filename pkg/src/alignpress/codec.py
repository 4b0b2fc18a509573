"""Deriving code patterns from alignments, encoding, and decoding.

Encoding reduces an incoming pattern to the ID-symbols left unaligned in
its best alignment.  Decoding runs the same alignment machinery on the
code pattern and reads the surface tokens back out of the columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .align import (
    CompressionScore,
    MultipleAlignment,
    SearchConfig,
    beam_search,
    build_alignments,
    derive_code_pattern,
)
from .core import (
    ORIGIN_NEW,
    ROLE_C,
    Grammar,
    Pattern,
    Symbol,
    pattern_size_bits,
    symbol_cost,
)
from .errors import DecodeAmbiguous, IncompleteCoverage, UnknownCode

__all__ = [
    "Encoding",
    "MetricsReport",
    "derive_code_pattern",
    "encode",
    "decode",
    "compression_metrics",
]


@dataclass(frozen=True)
class Encoding:
    """A code pattern plus its size metrics."""

    code: tuple[Symbol, ...]
    symbols_in: int
    symbols_out: int
    bits_in: float
    bits_out: float


def encode(new: Pattern, grammar: Grammar, cfg: SearchConfig | None = None) -> Encoding:
    """Encode an incoming pattern: build alignments, take the best, and
    derive its code pattern.  With the full-coverage flag set, a best
    alignment that leaves incoming symbols unmatched raises
    :class:`IncompleteCoverage` (carrying that alignment)."""
    cfg = cfg or SearchConfig()
    ma, sc = build_alignments(new, grammar, cfg)[0]
    if cfg.require_full_new_coverage_for_encoding and sc.new_coverage < 1.0:
        raise IncompleteCoverage(
            f"best alignment covers {sc.new_coverage:.3f} of the input", best=(ma, sc)
        )
    code = derive_code_pattern(ma)
    cm = grammar.cost_model
    return Encoding(
        code=code,
        symbols_in=len(new.symbols),
        symbols_out=len(code),
        bits_in=pattern_size_bits(new, cm),
        bits_out=sum(symbol_cost(s.token, cm) for s in code),
    )


def _dangling_references(ma: MultipleAlignment, surface: frozenset[str]) -> int:
    """Single-entry stored-row columns holding non-surface tokens:
    references the decode alignment has not resolved yet."""
    n = 0
    for col in ma.columns:
        if len(col.entries) == 1 and col.entries[0][0] != 0 and col.token not in surface:
            n += 1
    return n


def _surface_tokens(ma: MultipleAlignment, surface: frozenset[str]) -> tuple[str, ...]:
    return tuple(col.token for col in ma.columns if col.token in surface)


def decode(code, grammar: Grammar, cfg: SearchConfig | None = None) -> tuple[Symbol, ...]:
    """Reconstruct the surface sequence a code pattern stands for.

    The code is treated as an incoming pattern and aligned against the
    grammar; among alignments covering the whole code, the one leaving
    the fewest unresolved references wins, and its surface-alphabet
    column tokens are emitted in column order.  Raises
    :class:`UnknownCode` when no alignment covers the code and
    :class:`DecodeAmbiguous` when equally ranked alignments disagree on
    the output.
    """
    cfg = cfg or SearchConfig()
    symbols = tuple(
        s if isinstance(s, Symbol) and s.role == ROLE_C else Symbol(getattr(s, "token", str(s)), ROLE_C)
        for s in code
    )
    if not symbols:
        raise ValueError("empty code")
    code_pattern = Pattern("code", symbols, 1, ORIGIN_NEW)
    surface = grammar.surface_alphabet

    def rank(ma, sc, code_tokens, key):
        return (
            -round(sc.new_coverage, 9),
            _dangling_references(ma, surface),
            -round(sc.cd, 9),
            len(ma.rows),
            key,
        )

    entries = beam_search(code_pattern, grammar, cfg, rank_fn=rank, phased=True)
    best = entries[0]
    if best.sc.new_coverage < 1.0:
        raise UnknownCode(
            f"no alignment covers the code (best coverage {best.sc.new_coverage:.3f})"
        )
    out = _surface_tokens(best.ma, surface)
    best_class = best.rank[:3]
    for other in entries[1:]:
        if other.rank[:3] == best_class and _surface_tokens(other.ma, surface) != out:
            raise DecodeAmbiguous(
                "equally ranked alignments decode to different surface sequences"
            )
    return tuple(Symbol(tok, ROLE_C) for tok in out)


@dataclass(frozen=True)
class MetricsReport:
    symbol_ratio: float
    bit_ratio: float
    symbol_ratio_infinite: bool = False
    bit_ratio_infinite: bool = False


def compression_metrics(encoding: Encoding) -> MetricsReport:
    """Crude compression measures: input/output ratios by symbol count
    and by bits.  Division by zero reports an infinite ratio."""
    if encoding.symbols_out == 0:
        sym_ratio, sym_inf = math.inf, True
    else:
        sym_ratio, sym_inf = encoding.symbols_in / encoding.symbols_out, False
    if encoding.bits_out == 0:
        bit_ratio, bit_inf = math.inf, True
    else:
        bit_ratio, bit_inf = encoding.bits_in / encoding.bits_out, False
    return MetricsReport(sym_ratio, bit_ratio, sym_inf, bit_inf)
