"""Multi-objective machinery: dominance, hypervolume, subset selection,
scalarized surrogate search offline, and online candidate tuning."""

from pex.mopt.offline import (
    OfflineSearchResult,
    SearchBounds,
    decode_params,
    encode_params,
    optimize_offline,
    orient,
)
from pex.mopt.online import OnlineTuneResult, optimize_online, policy_assignment_fn
from pex.mopt.pareto import (
    FrontSet,
    ParetoPoint,
    SubsetSelection,
    default_reference_point,
    dominates,
    hypervolume,
    hypervolume_contributions,
    pareto_front,
    subset_select,
)
from pex.mopt.scalarize import scalarize
from pex.mopt.surrogate import GpRegressor, KnnRegressor, fit_surrogate

__all__ = [
    "FrontSet",
    "GpRegressor",
    "KnnRegressor",
    "OfflineSearchResult",
    "OnlineTuneResult",
    "ParetoPoint",
    "SearchBounds",
    "SubsetSelection",
    "decode_params",
    "default_reference_point",
    "dominates",
    "encode_params",
    "fit_surrogate",
    "hypervolume",
    "hypervolume_contributions",
    "optimize_offline",
    "optimize_online",
    "orient",
    "pareto_front",
    "policy_assignment_fn",
    "scalarize",
    "subset_select",
]
