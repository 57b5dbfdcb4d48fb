from .config import GenSpec, PayoutPolicy, PipelineConfig, RunConfig
from .domain import DataGrant, MemberDataset, MemberRecord, PriceSeries, SignalRecord
from .game import GameHandle
from .pipeline import Action, CoalitionMask, CoalitionValue, TradeDecision, coalition_value
from .shapley import (
    ValuationEstimate,
    ValuationReport,
    clustered_shapley,
    exact_shapley,
    permutation_shapley,
    stratified_shapley,
)
from .synthgen import generate

__version__ = "0.1.0"
__all__ = [
    "Action",
    "CoalitionMask",
    "CoalitionValue",
    "DataGrant",
    "GameHandle",
    "GenSpec",
    "MemberDataset",
    "MemberRecord",
    "PayoutPolicy",
    "PipelineConfig",
    "PriceSeries",
    "RunConfig",
    "SignalRecord",
    "TradeDecision",
    "ValuationEstimate",
    "ValuationReport",
    "clustered_shapley",
    "coalition_value",
    "exact_shapley",
    "generate",
    "permutation_shapley",
    "stratified_shapley",
]
