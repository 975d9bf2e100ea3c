"""Local search for monotone set functions induced by sparse optimisation."""

from .baselines import brute_force_opt, greedy, modular_approximation, random_baseline
from .certify import (
    certify_run,
    check_lemma_inequalities,
    check_localizability_general,
    check_localizability_simplified,
)
from .constraints import (
    BMatching,
    ConfigurationError,
    IndependenceSystem,
    InfeasibleError,
    MatroidIntersection,
    NeighborhoodSpec,
    PartitionMatroid,
    UniformMatroid,
)
from .objectives import (
    CallableObjective,
    IsingPLL,
    QuadraticR2,
    RestrictedConstants,
    SetOracle,
    compute_restricted_constants,
)
from .search import (
    RunConfig,
    RunReport,
    geometric_local_search,
    local_search,
    matroid_local_search,
    system_local_search,
)

__version__ = "0.1.0"
