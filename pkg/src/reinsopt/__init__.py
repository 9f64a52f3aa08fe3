"""Catastrophe excess-of-loss reinsurance contract optimization toolkit."""

from .errors import (
    ConfigurationError,
    GridError,
    ParseError,
    ReinsoptError,
    ValidationError,
)
from .events import (
    BaseLosses,
    CompressionReport,
    EventLossTable,
    SyntheticSpec,
    compress,
    compute_min_attachments,
    default_threshold_grid,
    generate_synthetic,
    load_events,
    save_events,
)
from .store import CumulativeLossStore, build_store, load_store, save_store
from .contracts import (
    Contract,
    Group,
    Layer,
    PerilGrouping,
    PricingCurve,
    Subgroup,
    YearlyResult,
    average_recovery,
    evaluate_contract,
    event_recovery,
    load_contract,
    load_pricing,
    reinstatement_premium,
    reinsurance_premium,
    save_contract,
    yearly_recovery,
    yearly_recovery_vector,
)
from .risk import (
    ConstraintSpec,
    RiskReport,
    aep,
    attachment_probability,
    build_report,
    load_constraints,
    oep,
    penalty,
    percentile,
    tvar,
)

__version__ = "1.0.0"

__all__ = [
    "ReinsoptError",
    "ParseError",
    "ValidationError",
    "GridError",
    "ConfigurationError",
    "EventLossTable",
    "SyntheticSpec",
    "CompressionReport",
    "BaseLosses",
    "generate_synthetic",
    "compute_min_attachments",
    "compress",
    "default_threshold_grid",
    "load_events",
    "save_events",
    "CumulativeLossStore",
    "build_store",
    "save_store",
    "load_store",
    "Layer",
    "Subgroup",
    "Group",
    "PerilGrouping",
    "Contract",
    "PricingCurve",
    "YearlyResult",
    "event_recovery",
    "yearly_recovery",
    "yearly_recovery_vector",
    "average_recovery",
    "reinsurance_premium",
    "reinstatement_premium",
    "evaluate_contract",
    "load_contract",
    "save_contract",
    "load_pricing",
    "percentile",
    "tvar",
    "aep",
    "oep",
    "attachment_probability",
    "penalty",
    "ConstraintSpec",
    "RiskReport",
    "build_report",
    "load_constraints",
]
