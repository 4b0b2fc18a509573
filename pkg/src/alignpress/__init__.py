"""Alignment-based compression of 1-D symbol sequences.

Knowledge is stored as flat symbol patterns; incoming sequences are
matched against them by building multiple alignments scored on how well
they compress the input.  The unaligned ID-symbols of the best alignment
form a short code from which the input can be rebuilt, and a learner
grows grammars from raw sequences by minimising total grammar plus
encoding bits.
"""

from .align import (
    Column,
    CompressionScore,
    MultipleAlignment,
    PairwiseMatch,
    RowInstance,
    SearchConfig,
    Violation,
    build_alignments,
    derive_code_pattern,
    dump,
    match_reversed,
    merge,
    pairwise_match,
    render,
    score,
    validate,
)
from .codec import Encoding, MetricsReport, compression_metrics, decode, encode
from .core import (
    CostModel,
    DEFAULT_FIXED_BITS,
    Grammar,
    MODE_FIXED,
    MODE_FREQUENCY,
    ORIGIN_NEW,
    ORIGIN_OLD,
    Pattern,
    ROLE_C,
    ROLE_ID,
    Symbol,
    format_pattern,
    frequency_cost_model,
    load_grammar,
    new_pattern,
    parse_pattern,
    pattern_size_bits,
    save_grammar,
    symbol_cost,
)
from .errors import (
    AlignpressError,
    BadFrequency,
    DecodeAmbiguous,
    DuplicateId,
    EmptyPattern,
    IncompleteCoverage,
    InvariantViolation,
    MalformedToken,
    ParseError,
    UnknownCode,
    UnknownPattern,
    UnknownToken,
)
from .learn import (
    IdGenerator,
    LearnState,
    derive_patterns_from_partial_match,
    grammar_cost,
    ingest,
    learn,
    select_grammar,
    update_frequencies,
)
from .redundancy import (
    RedundancyReport,
    classify_grammar_pattern,
    count_occurrences,
    detect_dependencies,
    detect_mirrors,
    detect_runs,
    expected_count,
)

__version__ = "0.1.0"
