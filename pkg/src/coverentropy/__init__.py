"""Exact entropy of covers on finite-alphabet shift spaces.

A desk-scale laboratory for the entropy of a cover under a stationary
Markov (or mixture) measure: cover algebra on cylinder events, the
static cover entropy as an assignment optimum, exact and greedy partial
set cover counts, interval and packing combinatorics, and finite-horizon
traces of the dynamical entropy notions with a CLI harness.
"""

from .assignment import (
    Assignment,
    enumerate_assignments,
    entropy_bits,
    heuristic_assignment_pool,
    induced_partition,
    static_cover_entropy,
    static_cover_entropy_exact,
    static_cover_entropy_heuristic,
)
from .combinatorics import (
    ExtractionResult,
    IntervalFamily,
    IntervalLevel,
    LevelDensities,
    Packing,
    binary_entropy,
    binom_tail,
    census_margin,
    check_separated,
    extract_separated,
    extraction_slacks,
    hypothesis_report,
    is_word_packed,
    mean_block_entropy,
    packing_census,
    packing_distribution,
    sup_distance,
    uniform_block_distribution,
    visit_intervals,
)
from .covers import (
    Cover,
    Name,
    Partition,
    WordSet,
    block_cover,
    cover_from_config,
    dyn_join,
    full_word_set,
    join,
    lift_depth,
    pullback,
    refines,
)
from .errors import CapacityError, ConfigError
from .estimators import (
    Budgets,
    DecompositionGap,
    EntropyTrace,
    TraceRecord,
    TraceTruncated,
    decompose,
    h_c_trace,
    h_e_trace,
    h_minus_trace,
    h_plus_trace,
    read_trace_csv,
    write_trace_csv,
)
from .seeding import derive_seed
from .setcover import CoverInstance, covered_measure, n_exact, n_greedy
from .systems import (
    MarkovSystem,
    MixtureSystem,
    block_system,
    format_word,
    index_word,
    parse_word,
    sample_orbit,
    set_measure,
    stationary_of,
    system_from_config,
    word_index,
    word_measure,
)

__version__ = "0.1.0"
