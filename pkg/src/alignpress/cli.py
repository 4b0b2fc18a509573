"""Command-line interface.

Commands: align, encode, decode, learn, detect, stats, render.  Exit
codes: 0 success, 1 I/O or parse failure, 2 semantic failure (incomplete
coverage, unknown code, ambiguous decode, or no positive-score alignment
under --require-positive).  All output is deterministic for fixed inputs
and flags.
"""

from __future__ import annotations

import argparse
import sys

from .align import SearchConfig, build_alignments, derive_code_pattern, render
from .codec import compression_metrics, decode, encode
from .core import (
    CostModel,
    DEFAULT_FIXED_BITS,
    MODE_FIXED,
    MODE_FREQUENCY,
    Grammar,
    frequency_cost_model,
    load_grammar,
    parse_pattern,
    save_grammar,
)
from .errors import (
    AlignpressError,
    DecodeAmbiguous,
    IncompleteCoverage,
    UnknownCode,
)
from .learn import learn
from .redundancy import (
    classify_grammar_pattern,
    detect_dependencies,
    detect_mirrors,
    detect_runs,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SEMANTIC = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beam", type=int, default=50, help="beam width (default 50)")
    p.add_argument("--cycles", type=int, default=10, help="max search cycles (default 10)")
    p.add_argument("--max-rows", type=int, default=32, help="max alignment rows (default 32)")
    p.add_argument("--reverse", action="store_true", help="also try right-to-left pattern matching")
    p.add_argument("--full-coverage", action="store_true",
                   help="fail (exit 2) unless every input symbol is matched")


def _cost_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cost", choices=[MODE_FIXED, MODE_FREQUENCY], default=None,
                   help="override the grammar's cost model")
    p.add_argument("--fixed-bits", type=float, default=DEFAULT_FIXED_BITS,
                   help="bits per symbol in fixed mode")
    p.add_argument("--floor-bits", type=float, default=1.0,
                   help="minimum bits per symbol in frequency mode")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="alignpress",
                     description="Alignment-based compression of symbol sequences.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="align input against a grammar and render the result")
    p.add_argument("--grammar", required=True, help="grammar file")
    p.add_argument("input", nargs="?", default="-", help="input file or - for stdin")
    p.add_argument("--top", type=int, default=1, help="how many alignments to print")
    p.add_argument("--require-positive", action="store_true",
                   help="exit 2 when no alignment scores above zero")
    p.add_argument("--out", default=None)
    _search_flags(p)
    _cost_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("render", help="print only the best alignment's layout")
    p.add_argument("--grammar", required=True)
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--out", default=None)
    _search_flags(p)
    _cost_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("encode", help="print the code pattern for the input")
    p.add_argument("--grammar", required=True)
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--out", default=None)
    _search_flags(p)
    _cost_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="reconstruct the surface sequence from a code pattern")
    p.add_argument("--grammar", required=True)
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--out", default=None)
    _search_flags(p)
    _cost_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("stats", help="print encoding size metrics")
    p.add_argument("--grammar", required=True)
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--out", default=None)
    _search_flags(p)
    _cost_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("learn", help="learn a grammar from a corpus (one pattern per line)")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--out", default=None, help="grammar output file (default stdout)")
    p.add_argument("--encodings-out", default=None, help="write one code line per corpus line")
    p.add_argument("--prune-every", type=int, default=10,
                   help="prune the grammar every N ingested patterns (default 10)")
    _search_flags(p)
    _cost_flags(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("detect", help="report runs and mirrors in the input sequence")
    p.add_argument("input", nargs="?", default="-")
    p.add_argument("--grammar", default=None,
                   help="also classify grammar patterns and report dependencies")
    p.add_argument("--min-repeats", type=int, default=2)
    p.add_argument("--min-len", type=int, default=2)
    p.add_argument("--threshold", type=float, default=2.0)
    p.add_argument("--out", default=None)
    _search_flags(p)
    _cost_flags(p)
    p.set_defaults(func=cmd_detect)

    return parser


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _read_line(path: str) -> str:
    for line in _read_text(path).splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            return s
    raise AlignpressError("no input line found")


def _load_grammar(args) -> Grammar:
    with open(args.grammar, "r", encoding="utf-8") as fh:
        grammar = load_grammar(fh)
    if args.cost == MODE_FIXED:
        grammar = Grammar(grammar.patterns, CostModel(MODE_FIXED, fixed_bits=args.fixed_bits),
                          grammar.surface_alphabet)
    elif args.cost == MODE_FREQUENCY:
        grammar = Grammar(grammar.patterns,
                          frequency_cost_model(grammar.patterns, floor_bits=args.floor_bits),
                          grammar.surface_alphabet)
    return grammar


def _config(args) -> SearchConfig:
    return SearchConfig(
        beam_width=args.beam,
        max_cycles=args.cycles,
        max_rows=args.max_rows,
        allow_reverse=args.reverse,
        require_full_new_coverage_for_encoding=args.full_coverage,
    )


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_align(args) -> int:
    grammar = _load_grammar(args)
    new = parse_pattern(_read_line(args.input))
    results = build_alignments(new, grammar, _config(args))
    if args.require_positive and (not results or results[0][1].cd <= 0):
        print("error: no alignment scores above zero", file=sys.stderr)
        return EXIT_SEMANTIC
    blocks = []
    for i, (ma, sc) in enumerate(results[: args.top], start=1):
        code = " ".join(s.token for s in derive_code_pattern(ma))
        blocks.append(
            f"alignment {i}: cd={sc.cd:.2f} coverage={sc.new_coverage:.3f} "
            f"rows={len(ma.rows)} b_new_matched={sc.b_new_matched:.2f} b_code={sc.b_code:.2f}\n"
            f"code: {code}\n{render(ma)}\n"
        )
    _emit(args, "\n".join(blocks))
    return EXIT_OK


def cmd_render(args) -> int:
    grammar = _load_grammar(args)
    new = parse_pattern(_read_line(args.input))
    results = build_alignments(new, grammar, _config(args))
    _emit(args, render(results[0][0]) + "\n")
    return EXIT_OK


def cmd_encode(args) -> int:
    grammar = _load_grammar(args)
    new = parse_pattern(_read_line(args.input))
    encoding = encode(new, grammar, _config(args))
    _emit(args, " ".join(s.token for s in encoding.code) + "\n")
    return EXIT_OK


def cmd_decode(args) -> int:
    grammar = _load_grammar(args)
    code = parse_pattern(_read_line(args.input))
    out = decode(code.symbols, grammar, _config(args))
    _emit(args, " ".join(s.token for s in out) + "\n")
    return EXIT_OK


def cmd_stats(args) -> int:
    grammar = _load_grammar(args)
    new = parse_pattern(_read_line(args.input))
    e = encode(new, grammar, _config(args))
    m = compression_metrics(e)
    sym = "inf" if m.symbol_ratio_infinite else f"{m.symbol_ratio:.3f}"
    bit = "inf" if m.bit_ratio_infinite else f"{m.bit_ratio:.3f}"
    _emit(args,
          f"symbols_in={e.symbols_in} symbols_out={e.symbols_out} "
          f"bits_in={e.bits_in:.2f} bits_out={e.bits_out:.2f} "
          f"symbol_ratio={sym} bit_ratio={bit}\n")
    return EXIT_OK


def cmd_learn(args) -> int:
    lines = [s for s in (_l.strip() for _l in _read_text(args.input).splitlines())
             if s and not s.startswith("#")]
    if not lines:
        print("error: empty corpus", file=sys.stderr)
        return EXIT_INPUT
    corpus = [parse_pattern(line, pattern_id=f"new{i}") for i, line in enumerate(lines)]
    if args.cost == MODE_FREQUENCY:
        cost_model = None  # frequency costs are recomputed as the grammar grows
    else:
        cost_model = CostModel(MODE_FIXED, fixed_bits=args.fixed_bits)
    grammar, encodings = learn(corpus, _config(args), cost_model=cost_model,
                               prune_interval=args.prune_every)
    _emit(args, save_grammar(grammar))
    if args.encodings_out:
        with open(args.encodings_out, "w", encoding="utf-8") as fh:
            for enc in encodings:
                fh.write(" ".join(s.token for s in enc.code) + "\n")
    return EXIT_OK


def cmd_detect(args) -> int:
    data = parse_pattern(_read_line(args.input))
    lines = []
    for report in detect_runs(data.symbols, min_repeats=args.min_repeats,
                              threshold=args.threshold):
        lines.append(report.format())
    for report in detect_mirrors(data.symbols, min_len=args.min_len,
                                 threshold=args.threshold):
        lines.append(report.format())
    if args.grammar:
        grammar = _load_grammar(args)
        for pat in grammar.patterns:
            label = classify_grammar_pattern(pat, grammar)
            lines.append(f"pattern={pat.pattern_id} kind={label}")
        results = build_alignments(data, grammar, _config(args))
        for report in detect_dependencies([results[0][0]], threshold=args.threshold):
            lines.append(report.format())
    _emit(args, "\n".join(lines) + ("\n" if lines else ""))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (IncompleteCoverage, UnknownCode, DecodeAmbiguous) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    except (AlignpressError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    raise SystemExit(main())
