"""Hitting probabilities of continuous-time Markov chains under taboo sets."""

from .chain import (
    Generator,
    HittingQuery,
    JumpKernel,
    StateSpace,
    TabooSet,
    ValidationReport,
    embedded_chain,
    exit_time_cdf,
    format_chain,
    parse_chain,
    restrict,
    validate,
)
from .errors import (
    ChainError,
    DenominatorError,
    NumericalDegeneracy,
    ProbabilityRangeError,
    ReducibleChainError,
    TabooGreenDivergence,
)
from .green import GreenResult, OccupationTimes, green_function, is_recurrent, taboo_green
from .lattice import (
    LatticeSpec,
    build_birth_death,
    build_complete_graph,
    build_cycle,
    build_lattice_walk,
    random_chain,
    site_label,
)
from .oracle import (
    Estimate,
    TrajectorySample,
    estimate_hitting,
    estimate_hitting_after_exit,
    simulate_trajectory,
    value_iteration_hitting,
)
from .probability import (
    FirstStepSolution,
    HittingResult,
    Method,
    cross_check,
    hitting_prob_first_step,
    hitting_prob_green_ratio,
    hitting_prob_no_taboo,
    hitting_prob_singleton_transient,
    hitting_probability,
)
from .reduction import (
    ReductionStep,
    add_taboo,
    format_trace,
    reduce_to_singleton,
    remove_start_taboo,
)

__version__ = "0.1.0"
