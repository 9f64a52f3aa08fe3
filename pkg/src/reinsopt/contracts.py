"""Reinsurance contract structures and per-trial-year evaluation.

A contract is a peril grouping plus, per group, a tower of excess-of-loss
layers with contiguous coverage. Evaluation computes recoveries via cumulative
loss sum differences, applies aggregate limits with reinstatements, prices the
layers, and produces yearly retained loss, net loss, and net profit. All types
are immutable values; evaluation is a pure function of its inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .store import CumulativeLossStore

TOWER_ATOL = 1e-6  # currency tolerance for boundary comparisons

PricingMode = str  # "expected_value" | "curve"


@dataclass(frozen=True)
class Layer:
    """One excess-of-loss layer: base attachment, limit, reinstatement count."""

    attachment: float
    limit: float
    reinstatements: int = 0

    def __post_init__(self):
        if self.attachment < 0:
            raise ValidationError("base attachment must be >= 0")
        if self.limit <= 0:
            raise ValidationError("layer limit must be > 0")
        if self.reinstatements < 0:
            raise ValidationError("reinstatements must be >= 0")

    @property
    def aggregate_limit(self) -> float:
        return (1 + self.reinstatements) * self.limit


@dataclass(frozen=True)
class Subgroup:
    """Perils sharing a common attachment shift within a group."""

    name: str
    perils: tuple[str, ...]
    shift: float = 0.0


@dataclass(frozen=True)
class Group:
    name: str
    subgroups: tuple[Subgroup, ...]

    @property
    def perils(self) -> tuple[str, ...]:
        return tuple(p for s in self.subgroups for p in s.perils)


@dataclass(frozen=True)
class PerilGrouping:
    """Partition of the peril catalog into groups and subgroups."""

    groups: tuple[Group, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for g in self.groups:
            for p in g.perils:
                if p in seen:
                    raise ValidationError(f"peril {p!r} appears in more than one group/subgroup")
                seen.add(p)

    def validate_partition(self, peril_names: Sequence[str]) -> None:
        covered = {p for g in self.groups for p in g.perils}
        missing = set(peril_names) - covered
        extra = covered - set(peril_names)
        if missing or extra:
            raise ValidationError(
                f"grouping does not partition the peril catalog (missing {sorted(missing)}, unknown {sorted(extra)})"
            )

    def group(self, name: str) -> Group:
        for g in self.groups:
            if g.name == name:
                return g
        raise ValidationError(f"unknown group {name!r}")

    def subgroup_of(self, peril: str) -> tuple[Group, Subgroup]:
        for g in self.groups:
            for s in g.subgroups:
                if peril in s.perils:
                    return g, s
        raise ValidationError(f"peril {peril!r} not covered by the grouping")


@dataclass(frozen=True)
class Contract:
    """A peril grouping plus one contiguous layer tower per group.

    The tower property requires each layer to attach exactly where the layer
    below it exhausts; groups may have empty towers (no reinsurance).
    """

    grouping: PerilGrouping
    towers: Mapping[str, tuple[Layer, ...]] = field(default_factory=dict)

    def __post_init__(self):
        towers = {name: tuple(layers) for name, layers in self.towers.items()}
        group_names = {g.name for g in self.grouping.groups}
        for name, layers in towers.items():
            if name not in group_names:
                raise ValidationError(f"tower references unknown group {name!r}")
            for lower, upper in zip(layers, layers[1:]):
                if abs(upper.attachment - (lower.attachment + lower.limit)) > TOWER_ATOL:
                    raise ValidationError(f"tower of group {name!r} has a gap or overlap")
            group = self.grouping.group(name)
            for layer in layers:
                for sub in group.subgroups:
                    if layer.attachment + sub.shift < -TOWER_ATOL:
                        raise ValidationError(
                            f"effective attachment of subgroup {sub.name!r} in group {name!r} is negative"
                        )
        object.__setattr__(self, "towers", towers)

    def layers(self) -> list[tuple[str, int, Layer]]:
        return [(g, i, layer) for g, tower in sorted(self.towers.items()) for i, layer in enumerate(tower)]

    @property
    def num_layers(self) -> int:
        return sum(len(t) for t in self.towers.values())

    def key(self) -> tuple:
        """Canonical hashable identity, used for caching and deduplication."""
        return tuple(
            (
                g.name,
                tuple((s.name, s.perils, s.shift) for s in g.subgroups),
                tuple(
                    (l.attachment, l.limit, l.reinstatements)
                    for l in self.towers.get(g.name, ())
                ),
            )
            for g in self.grouping.groups
        )


@dataclass(frozen=True)
class PricingCurve:
    """Premium model: expected-value loading or piecewise-linear rol curves.

    In curve mode the rate on line is ``f(lol)`` where f passes through
    (0, rol_min) and the per-class points, extends beyond the last point with
    the final segment's slope, and must satisfy f(x) > x. Classes are keyed by
    group name; a group without points uses ``rol_min + (1 + rho) * lol``.
    """

    market_factor: float = 0.1
    rol_min: float = 0.01
    mode: PricingMode = "expected_value"
    curves: Mapping[str, tuple[tuple[float, float], ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.market_factor < 0:
            raise ValidationError("market factor rho must be >= 0")
        if self.rol_min <= 0:
            raise ValidationError("rol_min must be > 0")
        if self.mode not in ("expected_value", "curve"):
            raise ValidationError(f"unknown pricing mode {self.mode!r}")
        curves = {k: tuple((float(x), float(y)) for x, y in pts) for k, pts in self.curves.items()}
        for name, pts in curves.items():
            full = ((0.0, self.rol_min), *pts)
            for (x0, y0), (x1, y1) in zip(full, full[1:]):
                if x1 <= x0 or y1 <= y0:
                    raise ValidationError(f"curve {name!r} must be strictly increasing")
            for x, y in pts:
                if y <= x:
                    raise ValidationError(f"curve {name!r} violates f(x) > x at lol={x}")
        object.__setattr__(self, "curves", curves)

    def rate_on_line(self, lol: float, curve_class: str | None = None) -> float:
        pts = self.curves.get(curve_class, ()) if curve_class is not None else ()
        if not pts:
            return self.rol_min + (1.0 + self.market_factor) * lol
        xs = np.array([0.0] + [x for x, _ in pts])
        ys = np.array([self.rol_min] + [y for _, y in pts])
        if lol > xs[-1]:
            slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
            return float(ys[-1] + slope * (lol - xs[-1]))
        return float(np.interp(lol, xs, ys))


def event_recovery(loss, effective_attachment: float, limit: float):
    """Per-event recovery min(max(0, loss - attachment), limit); array friendly."""
    if limit <= 0:
        raise ValidationError("limit must be > 0")
    if effective_attachment < 0:
        raise ValidationError("effective attachment must be >= 0")
    return np.minimum(np.maximum(0.0, np.asarray(loss, dtype=np.float64) - effective_attachment), limit)


def yearly_recovery_vector(layer: Layer, group: Group, store: CumulativeLossStore) -> np.ndarray:
    """Aggregate recovery of one layer per trial year, capped at (1+r)L.

    Effective attachments (base + subgroup shift) and their upper boundaries
    must lie on the store's threshold grid.
    """
    agg = np.zeros(store.num_trial_years)
    for sub in group.subgroups:
        a_eff = layer.attachment + sub.shift
        if a_eff < -TOWER_ATOL:
            raise ValidationError(f"negative effective attachment for subgroup {sub.name!r}")
        a_eff = max(a_eff, 0.0)
        for peril in sub.perils:
            p = store.peril_index(peril)
            agg += store.d_values(p, a_eff + layer.limit) - store.d_values(p, a_eff)
    return np.minimum(layer.aggregate_limit, agg)


def yearly_recovery(layer: Layer, group: Group, store: CumulativeLossStore, trial_year: int) -> float:
    return float(yearly_recovery_vector(layer, group, store)[trial_year])


def average_recovery(recoveries) -> float:
    """Mean yearly recovery over all trial years, zero-loss years included."""
    recoveries = np.asarray(recoveries, dtype=np.float64)
    if recoveries.size == 0:
        raise ValidationError("average recovery needs at least one trial year")
    return float(recoveries.mean())


def reinsurance_premium(
    layer: Layer,
    avg_recovery: float,
    pricing: PricingCurve,
    mode: PricingMode | None = None,
    curve_class: str | None = None,
) -> float:
    """Annual premium: (1+rho) * avg recovery, or limit * f(lol) in curve mode."""
    mode = mode or pricing.mode
    if mode == "expected_value":
        return (1.0 + pricing.market_factor) * avg_recovery
    if mode == "curve":
        return layer.limit * pricing.rate_on_line(avg_recovery / layer.limit, curve_class)
    raise ValidationError(f"unknown pricing mode {mode!r}")


def reinstatement_premium(layer: Layer, yearly_recovery, premium: float):
    """Pro-rata 1@100 reinstatement cost: premium * min(r*L, R) / L; array friendly."""
    capped = np.minimum(layer.reinstatements * layer.limit, np.asarray(yearly_recovery, dtype=np.float64))
    return premium * capped / layer.limit


@dataclass(frozen=True)
class YearlyResult:
    """Per-year outcome of one contract: recoveries, costs, net loss, profit."""

    recovery: Mapping[tuple[str, int], np.ndarray]
    reinstatement_cost: Mapping[tuple[str, int], np.ndarray]
    premium: Mapping[tuple[str, int], float]
    gross_loss: np.ndarray
    retained: np.ndarray
    net_loss: np.ndarray
    net_profit: np.ndarray
    max_net_event: np.ndarray  # (years, perils)
    peril_names: tuple[str, ...]

    def max_net_event_for(self, peril: str | None) -> np.ndarray:
        if peril is None:
            return self.max_net_event.max(axis=1) if self.max_net_event.size else self.max_net_event.sum(axis=1)
        try:
            p = self.peril_names.index(peril)
        except ValueError:
            raise ValidationError(f"unknown peril {peril!r}") from None
        return self.max_net_event[:, p]


def evaluate_contract(
    contract: Contract,
    store: CumulativeLossStore,
    pricing: PricingCurve,
    gross_profit: float = 0.0,
    recovery_vectors: Mapping[tuple[str, int], np.ndarray] | None = None,
) -> YearlyResult:
    """Evaluate a contract against the store: net loss and net profit per year.

    ``recovery_vectors`` lets a caller inject precomputed per-layer recovery
    vectors (the annealer's layer cache); missing entries are computed.
    """
    contract.grouping.validate_partition(store.peril_names)
    gross = store.gross_yearly()

    recovery: dict[tuple[str, int], np.ndarray] = {}
    rstm: dict[tuple[str, int], np.ndarray] = {}
    premium: dict[tuple[str, int], float] = {}
    total_recovered = np.zeros_like(gross)
    total_rstm = np.zeros_like(gross)
    for gname, idx, layer in contract.layers():
        key = (gname, idx)
        if recovery_vectors is not None and key in recovery_vectors:
            rec = recovery_vectors[key]
        else:
            rec = yearly_recovery_vector(layer, contract.grouping.group(gname), store)
        prem = reinsurance_premium(layer, average_recovery(rec), pricing, curve_class=gname)
        cost = reinstatement_premium(layer, rec, prem)
        recovery[key] = rec
        rstm[key] = cost
        premium[key] = prem
        total_recovered += rec
        total_rstm += cost

    retained = gross - total_recovered
    net_loss = gross - (total_recovered - total_rstm)
    net_profit = gross_profit - net_loss - sum(premium.values())

    max_net = store.max_event.copy()
    for p, name in enumerate(store.peril_names):
        group, sub = contract.grouping.subgroup_of(name)
        for layer in contract.towers.get(group.name, ()):
            a_eff = max(layer.attachment + sub.shift, 0.0)
            max_net[:, p] -= event_recovery(store.max_event[:, p], a_eff, layer.limit)

    return YearlyResult(
        recovery=recovery,
        reinstatement_cost=rstm,
        premium=premium,
        gross_loss=gross,
        retained=retained,
        net_loss=net_loss,
        net_profit=net_profit,
        max_net_event=max_net,
        peril_names=store.peril_names,
    )


def contract_to_dict(contract: Contract) -> dict:
    return {
        "groups": [
            {
                "name": g.name,
                "subgroups": [
                    {"name": s.name, "perils": list(s.perils), "shift": s.shift} for s in g.subgroups
                ],
                "layers": [
                    {"attachment": l.attachment, "limit": l.limit, "reinstatements": l.reinstatements}
                    for l in contract.towers.get(g.name, ())
                ],
            }
            for g in contract.grouping.groups
        ]
    }


def contract_from_dict(raw: Mapping) -> Contract:
    groups = []
    towers = {}
    try:
        for g in raw["groups"]:
            subgroups = tuple(
                Subgroup(s["name"], tuple(s["perils"]), float(s.get("shift", 0.0)))
                for s in g["subgroups"]
            )
            groups.append(Group(g["name"], subgroups))
            towers[g["name"]] = tuple(
                Layer(float(l["attachment"]), float(l["limit"]), int(l.get("reinstatements", 0)))
                for l in g.get("layers", ())
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed contract document: {exc!r}") from exc
    return Contract(PerilGrouping(tuple(groups)), towers)


def load_contract(path: str | Path) -> Contract:
    with open(path, encoding="utf-8") as fh:
        return contract_from_dict(json.load(fh))


def save_contract(contract: Contract, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(contract_to_dict(contract), fh, indent=2)


def load_pricing(path: str | Path) -> PricingCurve:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return PricingCurve(
        market_factor=float(raw.get("market_factor", 0.1)),
        rol_min=float(raw.get("rol_min", 0.01)),
        mode=raw.get("mode", "expected_value"),
        curves={k: tuple(tuple(pt) for pt in v) for k, v in raw.get("curves", {}).items()},
    )
