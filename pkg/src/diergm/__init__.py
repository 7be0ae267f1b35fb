"""Directed exponential-family random graph models with group-boundary statistics.

The package simulates directed attributed networks, evaluates boundary
maintenance and standard dependence statistics with exact changescores,
fits coefficients by maximum pseudolikelihood (with optional Monte Carlo
refinement), and answers what-if questions about forced tie and attribute
changes through conditional-expectation perturbation analysis.
"""

from .graph import (
    AttributeMismatchError,
    AttributeTable,
    DirectedGraph,
    DuplicateEdgeError,
    MalformedRowError,
    NodeRangeError,
    SelfLoopError,
    load_attributes,
    load_edgelist,
    new_graph,
    write_attributes,
    write_edgelist,
    write_report,
)
from .terms import (
    AB2Star,
    CollinearModelWarning,
    Edges,
    GwDsp,
    GwEsp,
    GwInDegree,
    GwOutDegree,
    Inhomo2Star,
    ModelSpec,
    Mutual,
    NodeMatch,
    NodeMix,
    Term,
    UnknownGroupError,
    change_score,
    change_vector,
    eval_stat,
    gw_weight,
    load_model,
    save_model,
    shared_partners,
    weighted_change,
)
from .sampler import (
    RANDOM_DYAD,
    TIE_NO_TIE,
    SampleChain,
    SamplerConfig,
    conditional_edge_prob,
    inv_logit,
    mh_step,
    simulate,
    spawn_seeds,
)
from .estimate import (
    CollinearDesignError,
    DegeneracyError,
    FitResult,
    McmleOptions,
    PerfectSeparationError,
    dyad_design,
    mcmle,
    mple,
)
from .analysis import (
    ATTRIBUTE_FLIP,
    EXACT,
    GIBBS,
    TIE_TOGGLE,
    AmbiguousFlipError,
    ColumnExpectation,
    DegeneracyReport,
    EnumerationTooLargeError,
    NoEligibleCasesError,
    PerturbationCase,
    PerturbationReport,
    UndefinedEIError,
    degeneracy_check,
    ei_index,
    expected_indegree_column,
    perturb_attr,
    perturb_sweep,
    perturb_tie,
    write_histogram_csv,
)

__version__ = "0.1.0"
