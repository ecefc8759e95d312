"""Fair Bisection: approximate fair edge cuts of bounded order.

The solver builds a compact tree decomposition with unbreakable bags,
reduces it to logarithmic depth and runs a dynamic program whose tables are
indexed by colour profiles rounded into a geometric domain.  Brute-force
oracles, splitter families and hardness-reduction generators accompany it.
"""

from types import ModuleType as _ModuleType

from .builder import BuilderConfig, build_unbreakable_decomposition, find_breaking_cut
from .decomposition import (
    CutCatalogue,
    DecompositionReport,
    TreeDecomposition,
    adhesion,
    alpha,
    compactify,
    cone,
    contract_nested_bags,
    is_unbreakable,
    subgraph_Gt,
    validate,
)
from .depth_reduction import (
    build_star_decomposition,
    compute_Y_and_gamma,
    lift_partition_to_decomposition,
    reduce_depth,
    reduce_depth_stages,
)
from .errors import (
    BudgetExceeded,
    BuilderFailure,
    ContractError,
    DomainError,
    FairBisectError,
    ParameterError,
    ParseError,
)
from .fair_dp import (
    RoundingDomain,
    SoundnessChecker,
    build_domain,
    delta_for,
    error_budget_holds,
    run_dp,
    solve,
)
from .generators import (
    BcspInstance,
    MdssInstance,
    bcsp_chain,
    bcsp_to_mdss,
    mdp_to_fair_bisection,
    mdss_to_mdp,
    random_instance,
)
from .graph_core import (
    ColoredGraph,
    EdgeCut,
    FairInstance,
    color_profile,
    cut_order,
    format_instance,
    is_eps_fair,
    is_exact_fair,
    parse_instance,
)
from .oracle import exact_fair_bisection, exact_region_cuts, exact_zero_cut_fair_bisection
from .splitters import build_covering_family, build_splitter, verify_covering, verify_splitter
from .tree_partition import TreePartition, balanced_bisector, find_balanced_tp, validate_nice_partition

__version__ = "0.1.0"

__all__ = [name for name, obj in dict(globals()).items()
           if not name.startswith("_") and not isinstance(obj, _ModuleType)]
