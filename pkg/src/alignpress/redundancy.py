"""Detectors for repetition structure in symbol sequences and grammars:
chunks, schemata, runs, discontinuous dependencies, and mirror images,
each tested against a chance-expectation null model."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .align import MultipleAlignment, Symbol
from .core import Grammar, Pattern, ROLE_C, ROLE_ID
from .errors import UnknownPattern

KIND_CHUNK = "chunk"
KIND_SCHEMA = "schema"
KIND_RUN = "run"
KIND_DEPENDENCY = "dependency"
KIND_MIRROR = "mirror"

CONTIGUOUS = "contiguous"
SUBSEQUENCE = "subsequence"

DEFAULT_THRESHOLD = 2.0


def _tokens(seq: Sequence) -> list[str]:
    return [s.token if isinstance(s, Symbol) else str(s) for s in seq]


@dataclass(frozen=True)
class RedundancyReport:
    kind: str
    subject: tuple[str, ...]
    occurrences: int
    expected: float
    locations: tuple
    significant: bool

    def format(self) -> str:
        if self.locations and isinstance(self.locations[0], tuple) and len(self.locations[0]) == 2:
            at = ",".join(f"{a}-{b}" for a, b in self.locations)
        else:
            at = ",".join(
                "(" + ",".join(str(i) for i in loc) + ")" for loc in self.locations
            )
        subject = " ".join(self.subject)
        return (
            f"kind={self.kind} subject=\"{subject}\" count={self.occurrences} "
            f"expected={self.expected:.4f} significant={str(self.significant).lower()} at={at}"
        )


def _report(kind, subject, occurrences, expected, locations, threshold) -> RedundancyReport:
    return RedundancyReport(
        kind=kind,
        subject=tuple(subject),
        occurrences=occurrences,
        expected=expected,
        locations=tuple(locations),
        significant=occurrences > expected * threshold,
    )


def count_occurrences(subject: Sequence, data: Sequence,
                      mode: str = CONTIGUOUS) -> tuple[int, list]:
    """Count occurrences of ``subject`` in ``data``.

    Contiguous mode counts all (possibly overlapping) substring
    occurrences and returns their start indices.  Subsequence mode
    counts disjoint greedy left-to-right embeddings and returns one
    index tuple per embedding.
    """
    sub, dat = _tokens(subject), _tokens(data)
    if not sub:
        raise ValueError("subject must be non-empty")
    if len(sub) > len(dat):
        raise ValueError("subject longer than data")
    if mode == CONTIGUOUS:
        starts = [
            i for i in range(len(dat) - len(sub) + 1)
            if dat[i:i + len(sub)] == sub
        ]
        return len(starts), starts
    if mode == SUBSEQUENCE:
        embeddings: list[tuple[int, ...]] = []
        current: list[int] = []
        need = 0
        for i, tok in enumerate(dat):
            if tok == sub[need]:
                current.append(i)
                need += 1
                if need == len(sub):
                    embeddings.append(tuple(current))
                    current, need = [], 0
        return len(embeddings), embeddings
    raise ValueError(f"unknown mode {mode!r}")


def expected_count(subject: Sequence, data: Sequence,
                   alphabet_size: int = 0) -> float:
    """Expected number of contiguous occurrences under an i.i.d. null
    model using empirical token frequencies: window count times the
    product of per-token probabilities.  ``alphabet_size`` is accepted
    for callers that track it but does not enter the formula."""
    sub, dat = _tokens(subject), _tokens(data)
    if alphabet_size < 0:
        raise ValueError("alphabet_size must be >= 0")
    n = len(dat)
    windows = n - len(sub) + 1
    if windows <= 0 or n == 0:
        return 0.0
    p = 1.0
    for tok in sub:
        p *= dat.count(tok) / n
    return windows * p


def _smallest_period(chunk: list[str]) -> int:
    n = len(chunk)
    for p in range(1, n + 1):
        if n % p == 0 and chunk == chunk[:p] * (n // p):
            return p
    return n


def detect_runs(data: Sequence, min_repeats: int = 2,
                threshold: float = DEFAULT_THRESHOLD) -> list[RedundancyReport]:
    """Maximal runs: spans of at least ``min_repeats`` exact repetitions
    of a chunk, preferring the smallest period, trailing partial
    repetitions excluded.  Locations list each repetition's range."""
    dat = _tokens(data)
    n = len(dat)
    reports = []
    for start in range(n):
        for period in range(1, (n - start) // 2 + 1):
            chunk = dat[start:start + period]
            if _smallest_period(chunk) != period:
                continue
            # skip non-leftmost starts of the same periodic segment
            if start >= 1 and dat[start - 1] == dat[start - 1 + period]:
                continue
            k = 1
            while dat[start + k * period: start + (k + 1) * period] == chunk:
                k += 1
            if k < min_repeats:
                continue
            locations = [
                (start + i * period, start + (i + 1) * period) for i in range(k)
            ]
            reports.append(_report(
                KIND_RUN, chunk, k, expected_count(chunk, dat), locations, threshold
            ))
    reports.sort(key=lambda r: (r.locations[0][0], len(r.subject)))
    return reports


def detect_mirrors(data: Sequence, min_len: int = 2,
                   threshold: float = DEFAULT_THRESHOLD) -> list[RedundancyReport]:
    """All maximal pairs of non-overlapping segments of length at least
    ``min_len`` where one reads as the reverse of the other.  Each pair
    is symmetric about an axis; expansion around every axis finds every
    maximal pair."""
    dat = _tokens(data)
    n = len(dat)
    reports = []
    # axis between positions c-1 and c (even), or on position c (odd)
    for double_axis in range(1, 2 * n - 2):
        if double_axis % 2 == 1:
            lo0, hi0 = (double_axis - 1) // 2, (double_axis + 1) // 2
        else:
            lo0, hi0 = double_axis // 2 - 1, double_axis // 2 + 1
        t = 0
        block_start = None
        lo, hi = lo0, hi0
        while lo - t >= 0 and hi + t < n:
            if dat[lo - t] == dat[hi + t]:
                if block_start is None:
                    block_start = t
            else:
                if block_start is not None:
                    _emit_mirror(dat, lo, hi, block_start, t - 1, min_len, threshold, reports)
                    block_start = None
            t += 1
        if block_start is not None:
            _emit_mirror(dat, lo, hi, block_start, t - 1, min_len, threshold, reports)
    reports.sort(key=lambda r: (r.locations[0], r.locations[1]))
    return reports


def _emit_mirror(dat, lo, hi, t1, t2, min_len, threshold, reports) -> None:
    length = t2 - t1 + 1
    if length < min_len:
        return
    left = (lo - t2, lo - t1 + 1)
    right = (hi + t1, hi + t2 + 1)
    subject = dat[left[0]:left[1]]
    expected = expected_count(subject, dat) + expected_count(list(reversed(subject)), dat)
    reports.append(_report(KIND_MIRROR, subject, 2, expected, [left, right], threshold))


def _bracket_pairs(pattern: Pattern) -> list[tuple[int, int]]:
    """(open, close) position pairs: a ``#T`` token closes the nearest
    preceding unclosed ``T``."""
    stacks: dict[str, list[int]] = {}
    pairs = []
    for i, s in enumerate(pattern.symbols):
        tok = s.token
        if tok.startswith("#") and len(tok) > 1:
            stack = stacks.get(tok[1:])
            if stack:
                pairs.append((stack.pop(), i))
                continue
        stacks.setdefault(tok, []).append(i)
    return pairs


def classify_grammar_pattern(pattern: Pattern, grammar: Grammar) -> str:
    """Label a grammar pattern by the redundancy it encodes.

    run: the contents reference the pattern's own ID-symbols (self
    recursion).  dependency: contents are nothing but references to
    other patterns' ID-symbols, with no open/close slot pair.  schema:
    contents contain at least one open/close slot pair.  chunk:
    everything else (plain stored material).
    """
    if pattern.pattern_id not in grammar:
        raise UnknownPattern(f"pattern {pattern.pattern_id!r} not in grammar")
    own_ids = {s.token for s in pattern.symbols if s.role == ROLE_ID}
    body = [s for s in pattern.symbols if s.role == ROLE_C]
    body_tokens = [s.token for s in body]

    if any(tok in own_ids for tok in body_tokens):
        return KIND_RUN

    references = grammar.id_tokens()
    has_pair = False
    seen: set[str] = set()
    for tok in body_tokens:
        if tok.startswith("#") and tok[1:] in seen:
            has_pair = True
        seen.add(tok)

    all_refs = bool(body_tokens) and all(
        tok in references or (grammar.surface_alphabet and tok not in grammar.surface_alphabet)
        for tok in body_tokens
    )
    if all_refs and not has_pair:
        return KIND_DEPENDENCY
    if has_pair:
        return KIND_SCHEMA
    return KIND_CHUNK


def detect_dependencies(alignments: Sequence[MultipleAlignment],
                        threshold: float = DEFAULT_THRESHOLD) -> list[RedundancyReport]:
    """Stored rows whose matched columns jump over foreign matched
    material.  A gap bracketed by the row's own open/close pair is slot
    filling, not a discontinuous dependency, and is ignored."""
    reports = []
    for ma in alignments:
        matched = [ci for ci, col in enumerate(ma.columns) if col.matched]
        matched_set = set(matched)
        for row in ma.rows[1:]:
            r = row.row_index
            col_of: dict[int, int] = {}
            for ci, col in enumerate(ma.columns):
                p = col.position_of(r)
                if p is not None:
                    col_of[p] = ci
            own_matched = sorted(ci for p, ci in col_of.items() if ci in matched_set)
            if len(own_matched) < 2:
                continue
            spans = [
                (col_of[a], col_of[b]) for a, b in _bracket_pairs(row.pattern)
                if a in col_of and b in col_of
            ]
            gaps = []
            for c1, c2 in zip(own_matched, own_matched[1:]):
                if c2 <= c1 + 1:
                    continue
                if any(s1 <= c1 and c2 <= s2 for s1, s2 in spans):
                    continue
                if any(c1 < ci < c2 for ci in matched):
                    gaps.append((c1, c2))
            if gaps:
                reports.append(_report(
                    KIND_DEPENDENCY, row.pattern.tokens, len(gaps), 0.0, gaps, threshold
                ))
    return reports
