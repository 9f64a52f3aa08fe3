"""Tail risk measures and soft-constraint penalties.

All percentile-based metrics use the nearest-rank convention (the ceil(beta*n)-th
smallest order statistic, no interpolation), which is exact on year-count data
and permutation invariant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, ValidationError

if TYPE_CHECKING:
    from .contracts import YearlyResult

DEFAULT_TVAR_BETA = 0.995  # 200-year percentile
DEFAULT_AEP_BETAS = (0.8, 0.9, 0.98)  # 5, 10 and 50-year percentiles


def percentile(values, beta: float) -> float:
    """Nearest-rank percentile: the ceil(beta * n)-th smallest value."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValidationError("percentile of an empty list is undefined")
    if not 0.0 < beta <= 1.0:
        raise ValidationError(f"beta must lie in (0, 1], got {beta}")
    rank = min(int(np.ceil(beta * values.size)), values.size)
    return float(np.partition(values, rank - 1)[rank - 1])


def tvar(net_losses, beta: float = DEFAULT_TVAR_BETA) -> float:
    """Mean of yearly net losses strictly above the beta-percentile.

    When no value lies strictly above the percentile (e.g. constant losses),
    returns the percentile itself.
    """
    net_losses = np.asarray(net_losses, dtype=np.float64)
    p = percentile(net_losses, beta)
    tail = net_losses[net_losses > p]
    if tail.size == 0:
        return p
    return float(tail.mean())


def aep(net_losses, beta: float) -> float:
    """Aggregate exceedance metric: beta-percentile of total yearly net losses."""
    return percentile(net_losses, beta)


def oep(max_net_events, beta: float = DEFAULT_TVAR_BETA) -> float:
    """Occurrence exceedance metric: beta-percentile of yearly-largest net events."""
    return percentile(max_net_events, beta)


def attachment_probability(recoveries) -> float:
    """Fraction of trial years in which a layer cedes a positive amount."""
    recoveries = np.asarray(recoveries, dtype=np.float64)
    if recoveries.size == 0:
        return 0.0
    return float(np.count_nonzero(recoveries > 0) / recoveries.size)


def penalty(value: float, threshold: float, scale: float) -> float:
    """Rectified-linear soft-constraint penalty, always <= 0."""
    if scale < 0:
        raise ValidationError("penalty scale must be >= 0")
    return -scale * max(0.0, value - threshold)


def beta_from_return_period(years: float) -> float:
    if years <= 1:
        raise ValidationError("return period must exceed 1 year")
    return 1.0 - 1.0 / years


_KINDS = ("tvar", "aep", "oep", "attach_prob")


@dataclass(frozen=True)
class ConstraintSpec:
    """One soft constraint: a risk metric, an alert threshold, and a penalty scale.

    ``beta`` may be given directly or derived from ``return_period`` (in years).
    ``peril`` scopes OEP to a single peril (None means the across-peril yearly
    maximum); ``layer`` identifies the (group, layer index) for attach_prob.
    ``penalty_scale`` of None asks the optimizer to pick a scale commensurate
    with the objective.
    """

    kind: str
    threshold: float
    beta: float | None = None
    return_period: float | None = None
    peril: str | None = None
    layer: tuple[str, int] | None = None
    penalty_scale: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown constraint kind {self.kind!r}")
        if self.kind == "attach_prob":
            if self.layer is None:
                raise ValidationError("attach_prob constraint needs a layer reference")
        elif self.effective_beta is None:
            raise ValidationError(f"{self.kind} constraint needs beta or return_period")
        if self.penalty_scale is not None and self.penalty_scale < 0:
            raise ValidationError("penalty_scale must be >= 0")

    @property
    def effective_beta(self) -> float | None:
        if self.beta is not None:
            if not 0.0 < self.beta < 1.0:
                raise ValidationError("beta must lie strictly between 0 and 1")
            return self.beta
        if self.return_period is not None:
            return beta_from_return_period(self.return_period)
        return None

    @property
    def name(self) -> str:
        parts = [self.kind]
        if self.effective_beta is not None:
            parts.append(f"{self.effective_beta:g}")
        if self.peril is not None:
            parts.append(self.peril)
        if self.layer is not None:
            parts.append(f"{self.layer[0]}[{self.layer[1]}]")
        return ":".join(parts)


@dataclass(frozen=True)
class RiskReport:
    """Risk profile and penalized objective of one evaluated contract."""

    avg_net_profit: float
    tvar: float
    aep: Mapping[float, float]
    oep: Mapping[tuple[float, str | None], float]
    attach_prob: Mapping[tuple[str, int], float]
    constraint_values: Mapping[str, float] = field(default_factory=dict)
    penalties: Mapping[str, float] = field(default_factory=dict)
    feasible: bool = True

    @property
    def objective(self) -> float:
        return self.avg_net_profit + sum(self.penalties.values())

    def to_dict(self) -> dict:
        return {
            "avg_net_profit": self.avg_net_profit,
            "tvar": self.tvar,
            "aep": {f"{b:g}": v for b, v in self.aep.items()},
            "oep": {f"{b:g}:{p or 'all'}": v for (b, p), v in self.oep.items()},
            "attach_prob": {f"{g}[{i}]": v for (g, i), v in self.attach_prob.items()},
            "constraint_values": dict(self.constraint_values),
            "penalties": dict(self.penalties),
            "objective": self.objective,
            "feasible": self.feasible,
        }


def constraint_value(spec: ConstraintSpec, result: "YearlyResult") -> float:
    """Evaluate the metric a constraint refers to on one contract evaluation."""
    if spec.kind == "tvar":
        return tvar(result.net_loss, spec.effective_beta)
    if spec.kind == "aep":
        return aep(result.net_loss, spec.effective_beta)
    if spec.kind == "oep":
        return oep(result.max_net_event_for(spec.peril), spec.effective_beta)
    if spec.kind == "attach_prob":
        key = spec.layer
        if key not in result.recovery:
            raise ConfigurationError(f"constraint references unknown layer {key}")
        return attachment_probability(result.recovery[key])
    raise AssertionError(spec.kind)


def build_report(
    result: "YearlyResult",
    constraints: Sequence[ConstraintSpec] = (),
    oep_perils: Sequence[str | None] = (None,),
) -> RiskReport:
    """Assemble the risk report for one evaluated contract.

    Penalties require every constraint to carry an explicit ``penalty_scale``;
    the annealer substitutes its default scaling before calling this.
    """
    values: dict[str, float] = {}
    penalties: dict[str, float] = {}
    feasible = True
    for spec in constraints:
        value = constraint_value(spec, result)
        scale = spec.penalty_scale
        if scale is None:
            raise ConfigurationError(f"constraint {spec.name} has no penalty scale")
        values[spec.name] = value
        penalties[spec.name] = penalty(value, spec.threshold, scale)
        feasible = feasible and value < spec.threshold
    aep_betas = sorted({s.effective_beta for s in constraints if s.kind == "aep"} | set(DEFAULT_AEP_BETAS))
    oep_keys = sorted(
        {(s.effective_beta, s.peril) for s in constraints if s.kind == "oep"}
        | {(DEFAULT_TVAR_BETA, p) for p in oep_perils},
        key=lambda k: (k[0], k[1] or ""),
    )
    return RiskReport(
        avg_net_profit=float(np.mean(result.net_profit)),
        tvar=tvar(result.net_loss),
        aep={b: aep(result.net_loss, b) for b in aep_betas},
        oep={(b, p): oep(result.max_net_event_for(p), b) for b, p in oep_keys},
        attach_prob={key: attachment_probability(rec) for key, rec in result.recovery.items()},
        constraint_values=values,
        penalties=penalties,
        feasible=feasible,
    )


def load_constraints(path: str | Path) -> list[ConstraintSpec]:
    """Read a JSON list of constraint specifications."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ValidationError("constraints file must hold a JSON list")
    specs = []
    for entry in raw:
        layer = entry.get("layer")
        specs.append(
            ConstraintSpec(
                kind=entry["kind"],
                threshold=float(entry["threshold"]),
                beta=entry.get("beta"),
                return_period=entry.get("return_period"),
                peril=entry.get("peril"),
                layer=(layer[0], int(layer[1])) if layer else None,
                penalty_scale=entry.get("penalty_scale"),
            )
        )
    return specs
