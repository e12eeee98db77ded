"""Egalitarian exchange of divisible and indivisible goods on general networks.

Exact-rational engine: maximum b-matchings, the peaked Gallai-Edmonds
decomposition, bipartite reductions, the Lorenz-dominant (egalitarian) rule,
and lotteries over integral maximum b-matchings.
"""

from .flows import (
    ConvexCombination,
    Flow,
    FlowError,
    FlowNetwork,
    decompose_max_flow,
    max_flow,
    maximal_min_cut,
    min_cut,
)
from .instance import (
    BMatching,
    ExpandedInstance,
    Instance,
    InstanceError,
    ExpansionError,
    UtilityProfile,
    canonical_edge,
    contract_matching,
    expand_nodes,
    format_rational,
    load_instance,
    parse_instance,
)
from .matching import (
    GedDecomposition,
    MatchingError,
    ged_decompose,
    max_bmatching,
    max_matching,
    realize_targets,
)
from .mechanism import (
    BipartiteConstruction,
    Breakpoint,
    IndivisibleOutcome,
    Lottery,
    MechanismError,
    bipartite_egalitarian,
    build_divisible,
    build_indivisible,
    build_lottery,
    egalitarian_divisible,
    egalitarian_lp,
    egalitarian_profile,
    indivisible_outcome,
    probabilistic_marginals,
    sample_lottery,
    water_filling_breakpoints,
)
from .oracle import (
    Deviation,
    ManipulationReport,
    OracleSizeError,
    ParetoSet,
    enumerate_bmatchings,
    lorenz_dominates,
    manipulation_experiment,
    pareto_profiles,
    undominated_profiles,
)

__version__ = "0.1.0"

__all__ = [
    "BMatching",
    "BipartiteConstruction",
    "Breakpoint",
    "ConvexCombination",
    "Deviation",
    "ExpandedInstance",
    "ExpansionError",
    "Flow",
    "FlowError",
    "FlowNetwork",
    "GedDecomposition",
    "IndivisibleOutcome",
    "Instance",
    "InstanceError",
    "Lottery",
    "ManipulationReport",
    "MatchingError",
    "MechanismError",
    "OracleSizeError",
    "ParetoSet",
    "UtilityProfile",
    "bipartite_egalitarian",
    "build_divisible",
    "build_indivisible",
    "build_lottery",
    "canonical_edge",
    "contract_matching",
    "decompose_max_flow",
    "egalitarian_divisible",
    "egalitarian_lp",
    "egalitarian_profile",
    "enumerate_bmatchings",
    "expand_nodes",
    "format_rational",
    "ged_decompose",
    "indivisible_outcome",
    "load_instance",
    "lorenz_dominates",
    "manipulation_experiment",
    "max_bmatching",
    "max_flow",
    "max_matching",
    "maximal_min_cut",
    "min_cut",
    "parse_instance",
    "pareto_profiles",
    "probabilistic_marginals",
    "realize_targets",
    "sample_lottery",
    "undominated_profiles",
    "water_filling_breakpoints",
]
