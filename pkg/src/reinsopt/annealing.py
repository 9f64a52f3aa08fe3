"""Simulated annealing over contract space.

The search walks a neighborhood of seven move kinds (grouping change, layer
add/remove, split/join, boundary adjustment, boundary adjustment translating
everything above, subgroup-shift change, reinstatement change), accepts moves
by the Metropolis criterion under geometric cooling, and runs independent
restart chains with derived seeds. Towers are represented as tuples of indices
into a per-group boundary grid, so every state satisfies the tower property by
construction and moves stay grid-aligned for O(log) evaluation.

Evaluation is memoized at two tiers (per-layer recovery vectors and whole
contracts) with LRU eviction; caching is observable only through the exposed
hit counters, never through results.
"""

from __future__ import annotations

import json
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .contracts import (
    Contract,
    Group,
    Layer,
    PerilGrouping,
    PricingCurve,
    Subgroup,
    evaluate_contract,
    yearly_recovery_vector,
)
from .errors import ConfigurationError, GridError, ValidationError
from .risk import ConstraintSpec, RiskReport, build_report
from .store import GRID_ATOL, CumulativeLossStore

MOVE_KINDS = (
    "adjust_grouping",
    "add_remove_layer",
    "split_join_layer",
    "adjust_boundary",
    "adjust_with_shift_above",
    "adjust_subgroup_shift",
    "adjust_reinstatements",
)

# Boundary/shift/reinstatement tweaks are proposed 4x as often as structural
# moves, which change the objective abruptly and are rarely accepted late.
DEFAULT_MOVE_WEIGHTS = {
    "adjust_grouping": 1.0,
    "add_remove_layer": 1.0,
    "split_join_layer": 1.0,
    "adjust_boundary": 4.0,
    "adjust_with_shift_above": 4.0,
    "adjust_subgroup_shift": 4.0,
    "adjust_reinstatements": 4.0,
}

_PROPOSE_RETRIES = 200


@dataclass(frozen=True)
class AnnealSchedule:
    """Cooling schedule and chain layout."""

    t_initial: float
    t_final: float
    steps: int
    restarts: int = 1
    seed: int = 0
    build_bias: float = 5.0
    initial_phase_fraction: float = 0.1

    def __post_init__(self):
        if not 0 < self.t_final < self.t_initial:
            raise ValidationError("require 0 < t_final < t_initial")
        if self.steps < 1:
            raise ValidationError("steps must be >= 1")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        if self.build_bias < 1:
            raise ValidationError("build_bias must be >= 1")
        if not 0 <= self.initial_phase_fraction <= 1:
            raise ValidationError("initial_phase_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class StateSpaceBounds:
    """Admissible contract space: grids, tower limits, shifts, groupings.

    ``grids`` maps each group name to the ascending boundary values its layer
    edges may take. ``groupings`` is the whitelist of admissible peril
    partitions; all entries must use exactly the group names of ``grids``.
    """

    grids: Mapping[str, np.ndarray]
    groupings: tuple[PerilGrouping, ...]
    max_layers: int = 4
    min_layer_steps: int = 1
    max_reinstatements: int = 0
    allowed_shifts: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        grids = {}
        for name, grid in self.grids.items():
            grid = np.ascontiguousarray(np.asarray(grid, dtype=np.float64))
            if grid.size < 2 or np.any(np.diff(grid) <= 0):
                raise ConfigurationError(f"grid of group {name!r} must be ascending with >= 2 values")
            grid.setflags(write=False)
            grids[name] = grid
        object.__setattr__(self, "grids", grids)
        if not self.groupings:
            raise ConfigurationError("at least one admissible grouping is required")
        names = set(grids)
        for grouping in self.groupings:
            if {g.name for g in grouping.groups} != names:
                raise ConfigurationError("every admissible grouping must use exactly the grid's group names")
        if self.max_layers < 1:
            raise ConfigurationError("max_layers must be >= 1")
        if self.min_layer_steps < 1:
            raise ConfigurationError("min_layer_steps must be >= 1")
        if self.max_reinstatements < 0:
            raise ConfigurationError("max_reinstatements must be >= 0")
        if 0.0 not in self.allowed_shifts:
            object.__setattr__(self, "allowed_shifts", (0.0, *self.allowed_shifts))

    def validate_against_store(self, store: CumulativeLossStore) -> None:
        """Every reachable effective boundary must be 0 or on the store grid."""
        for grouping in self.groupings:
            for group in grouping.groups:
                grid = self.grids[group.name]
                perils = [store.peril_index(p) for p in group.perils]
                for value in grid:
                    for shift in self.allowed_shifts:
                        x = float(value) + shift
                        if x < -GRID_ATOL:
                            continue
                        if abs(x) <= GRID_ATOL:
                            continue
                        for p in perils:
                            try:
                                store.threshold_index(p, x)
                            except GridError:
                                raise ConfigurationError(
                                    f"boundary {value} with shift {shift} is off the store grid "
                                    f"for peril {store.peril_names[p]!r}"
                                ) from None


@dataclass
class _State:
    """Mutable chain state: grouping choice, shifts, towers as index tuples."""

    grouping_idx: int
    shifts: dict  # (grouping_idx, group, subgroup) -> shift value
    boundaries: dict  # group -> list[int], empty or >= 2 ascending indices
    reinst: dict  # group -> list[int], one per layer

    def copy(self) -> "_State":
        return _State(
            self.grouping_idx,
            dict(self.shifts),
            {g: list(b) for g, b in self.boundaries.items()},
            {g: list(r) for g, r in self.reinst.items()},
        )

    def key(self) -> tuple:
        return (
            self.grouping_idx,
            tuple(sorted(self.shifts.items())),
            tuple((g, tuple(b)) for g, b in sorted(self.boundaries.items())),
            tuple((g, tuple(r)) for g, r in sorted(self.reinst.items())),
        )

    def num_layers(self, group: str) -> int:
        b = self.boundaries.get(group, [])
        return max(0, len(b) - 1)


def _initial_state(bounds: StateSpaceBounds) -> _State:
    shifts = {}
    for gi, grouping in enumerate(bounds.groupings):
        for group in grouping.groups:
            for sub in group.subgroups:
                shifts[(gi, group.name, sub.name)] = sub.shift
    return _State(0, shifts, {g: [] for g in bounds.grids}, {g: [] for g in bounds.grids})


def _to_contract(state: _State, bounds: StateSpaceBounds) -> Contract:
    base = bounds.groupings[state.grouping_idx]
    groups = tuple(
        Group(
            g.name,
            tuple(
                Subgroup(s.name, s.perils, state.shifts[(state.grouping_idx, g.name, s.name)])
                for s in g.subgroups
            ),
        )
        for g in base.groups
    )
    towers = {}
    for gname, b in state.boundaries.items():
        if len(b) < 2:
            continue
        grid = bounds.grids[gname]
        towers[gname] = tuple(
            Layer(float(grid[i]), float(grid[j] - grid[i]), state.reinst[gname][k])
            for k, (i, j) in enumerate(zip(b, b[1:]))
        )
    return Contract(PerilGrouping(groups), towers)


def _state_from_contract(contract: Contract, bounds: StateSpaceBounds) -> _State:
    """Map a concrete contract onto the bounded index representation."""
    target = tuple(
        (g.name, tuple((s.name, s.perils) for s in g.subgroups)) for g in contract.grouping.groups
    )
    for gi, grouping in enumerate(bounds.groupings):
        shape = tuple(
            (g.name, tuple((s.name, s.perils) for s in g.subgroups)) for g in grouping.groups
        )
        if shape == target:
            break
    else:
        raise ConfigurationError("start contract's grouping is not in the admissible whitelist")

    state = _initial_state(bounds)
    state.grouping_idx = gi
    for g in contract.grouping.groups:
        for s in g.subgroups:
            if not any(abs(s.shift - v) <= GRID_ATOL for v in bounds.allowed_shifts):
                raise ConfigurationError(f"shift {s.shift} of subgroup {s.name!r} is not allowed")
            state.shifts[(gi, g.name, s.name)] = s.shift
    for gname, tower in contract.towers.items():
        if not tower:
            continue
        grid = bounds.grids[gname]
        edges = [tower[0].attachment] + [l.attachment + l.limit for l in tower]
        idx = []
        for value in edges:
            i = int(np.searchsorted(grid, value))
            for j in (i, i - 1):
                if 0 <= j < grid.size and abs(grid[j] - value) <= GRID_ATOL:
                    idx.append(j)
                    break
            else:
                raise ConfigurationError(f"boundary {value} of group {gname!r} is off the bounds grid")
        state.boundaries[gname] = idx
        state.reinst[gname] = [l.reinstatements for l in tower]
    return state


def _min_bottom_shift(state: _State, bounds: StateSpaceBounds, gname: str) -> float:
    """Most negative shift applied to this group under the current grouping."""
    grouping = bounds.groupings[state.grouping_idx]
    group = grouping.group(gname)
    return min(state.shifts[(state.grouping_idx, gname, s.name)] for s in group.subgroups)


def _bottom_ok(state: _State, bounds: StateSpaceBounds, gname: str, idx: int) -> bool:
    grid = bounds.grids[gname]
    return float(grid[idx]) + _min_bottom_shift(state, bounds, gname) >= -GRID_ATOL


def _options_adjust_grouping(state, bounds):
    out = []
    for gi in range(len(bounds.groupings)):
        if gi == state.grouping_idx:
            continue
        ok = True
        for gname, b in state.boundaries.items():
            if len(b) >= 2:
                group = bounds.groupings[gi].group(gname)
                shift = min(state.shifts[(gi, gname, s.name)] for s in group.subgroups)
                if float(bounds.grids[gname][b[0]]) + shift < -GRID_ATOL:
                    ok = False
                    break
        if ok:
            out.append(gi)
    return out


def _options_add_remove(state, bounds):
    out = []
    step = bounds.min_layer_steps
    for gname, grid in bounds.grids.items():
        b = state.boundaries[gname]
        top = grid.size - 1
        if not b:
            for i in range(top):
                if not _bottom_ok(state, bounds, gname, i):
                    continue
                for j in range(i + step, top + 1):
                    out.append(("add_new", gname, i, j))
            continue
        if len(b) - 1 < bounds.max_layers:
            for j in range(b[-1] + step, top + 1):
                out.append(("add_top", gname, j))
            for i in range(0, b[0] - step + 1):
                if _bottom_ok(state, bounds, gname, i):
                    out.append(("add_bottom", gname, i))
        if len(b) == 2:
            out.append(("remove_only", gname))
        else:
            out.append(("remove_top", gname))
            out.append(("remove_bottom", gname))
    return out


def _options_split_join(state, bounds):
    out = []
    step = bounds.min_layer_steps
    for gname in bounds.grids:
        b = state.boundaries[gname]
        if len(b) >= 2 and len(b) - 1 < bounds.max_layers:
            for k in range(len(b) - 1):
                for i in range(b[k] + step, b[k + 1] - step + 1):
                    out.append(("split", gname, k, i))
        for t in range(1, len(b) - 1):
            out.append(("join", gname, t))
    return out


def _options_adjust_boundary(state, bounds):
    out = []
    step = bounds.min_layer_steps
    for gname, grid in bounds.grids.items():
        b = state.boundaries[gname]
        for t in range(len(b)):
            lo = b[t - 1] + step if t > 0 else 0
            hi = b[t + 1] - step if t < len(b) - 1 else grid.size - 1
            for i in range(lo, hi + 1):
                if i == b[t]:
                    continue
                if t == 0 and not _bottom_ok(state, bounds, gname, i):
                    continue
                out.append((gname, t, i))
    return out


def _options_shift_above(state, bounds):
    out = []
    step = bounds.min_layer_steps
    for gname, grid in bounds.grids.items():
        b = state.boundaries[gname]
        if len(b) < 2:
            continue
        for t in range(len(b)):
            lo = (b[t - 1] + step if t > 0 else 0) - b[t]
            hi = (grid.size - 1) - b[-1]
            for d in range(lo, hi + 1):
                if d == 0:
                    continue
                if t == 0 and not _bottom_ok(state, bounds, gname, b[0] + d):
                    continue
                out.append((gname, t, d))
    return out


def _options_subgroup_shift(state, bounds):
    out = []
    gi = state.grouping_idx
    for group in bounds.groupings[gi].groups:
        b = state.boundaries[group.name]
        bottom = float(bounds.grids[group.name][b[0]]) if len(b) >= 2 else None
        for sub in group.subgroups:
            current = state.shifts[(gi, group.name, sub.name)]
            for v in bounds.allowed_shifts:
                if abs(v - current) <= GRID_ATOL:
                    continue
                if bottom is not None and bottom + v < -GRID_ATOL:
                    continue
                out.append((group.name, sub.name, v))
    return out


def _options_reinstatements(state, bounds):
    out = []
    for gname in bounds.grids:
        for k, r in enumerate(state.reinst[gname]):
            for v in range(bounds.max_reinstatements + 1):
                if v != r:
                    out.append((gname, k, v))
    return out


def _apply(state: _State, kind: str, opt) -> _State:
    new = state.copy()
    if kind == "adjust_grouping":
        new.grouping_idx = opt
    elif kind == "add_remove_layer":
        action, gname = opt[0], opt[1]
        b, r = new.boundaries[gname], new.reinst[gname]
        if action == "add_new":
            new.boundaries[gname] = [opt[2], opt[3]]
            new.reinst[gname] = [0]
        elif action == "add_top":
            b.append(opt[2])
            r.append(0)
        elif action == "add_bottom":
            b.insert(0, opt[2])
            r.insert(0, 0)
        elif action == "remove_only":
            new.boundaries[gname] = []
            new.reinst[gname] = []
        elif action == "remove_top":
            b.pop()
            r.pop()
        elif action == "remove_bottom":
            b.pop(0)
            r.pop(0)
    elif kind == "split_join_layer":
        action, gname = opt[0], opt[1]
        b, r = new.boundaries[gname], new.reinst[gname]
        if action == "split":
            k, i = opt[2], opt[3]
            b.insert(k + 1, i)
            r.insert(k + 1, r[k])  # both halves inherit the original count
        else:
            t = opt[2]
            b.pop(t)
            r.pop(t)  # merged layer keeps the lower layer's count (r[t-1])
    elif kind == "adjust_boundary":
        gname, t, i = opt
        new.boundaries[gname][t] = i
    elif kind == "adjust_with_shift_above":
        gname, t, d = opt
        b = new.boundaries[gname]
        for s in range(t, len(b)):
            b[s] += d
    elif kind == "adjust_subgroup_shift":
        gname, sname, v = opt
        new.shifts[(new.grouping_idx, gname, sname)] = v
    elif kind == "adjust_reinstatements":
        gname, k, v = opt
        new.reinst[gname][k] = v
    else:
        raise AssertionError(kind)
    return new


_OPTION_FNS = {
    "adjust_grouping": _options_adjust_grouping,
    "add_remove_layer": _options_add_remove,
    "split_join_layer": _options_split_join,
    "adjust_boundary": _options_adjust_boundary,
    "adjust_with_shift_above": _options_shift_above,
    "adjust_subgroup_shift": _options_subgroup_shift,
    "adjust_reinstatements": _options_reinstatements,
}


def propose(
    state: _State,
    bounds: StateSpaceBounds,
    rng: np.random.Generator,
    weights: Mapping[str, float] | None = None,
) -> tuple[_State, str]:
    """Draw one neighbor of the current state by a single move.

    Kinds are sampled by weight; a kind with no legal option is resampled up
    to a bounded number of retries, after which the state is declared isolated.
    """
    w = np.array([(weights or DEFAULT_MOVE_WEIGHTS).get(k, 0.0) for k in MOVE_KINDS])
    if np.any(w < 0) or w.sum() <= 0:
        raise ConfigurationError("move weights must be >= 0 with at least one positive")
    probs = w / w.sum()
    for _ in range(_PROPOSE_RETRIES):
        kind = MOVE_KINDS[int(rng.choice(len(MOVE_KINDS), p=probs))]
        options = _OPTION_FNS[kind](state, bounds)
        if not options:
            continue
        opt = options[int(rng.integers(len(options)))]
        return _apply(state, kind, opt), kind
    raise ConfigurationError("no legal move found: the current state is isolated")


def accept(delta_objective: float, temperature: float, rng: np.random.Generator) -> bool:
    """Metropolis criterion for maximization: accept with min{1, exp(dO/T)}."""
    if temperature <= 0:
        raise ValidationError("temperature must be > 0")
    if delta_objective >= 0:
        return True
    return bool(rng.random() < math.exp(delta_objective / temperature))


def temperature(k: int, schedule: AnnealSchedule) -> float:
    """Geometric cooling: T_k = T_0 (T_f / T_0)^(k / k_max)."""
    return schedule.t_initial * (schedule.t_final / schedule.t_initial) ** (k / schedule.steps)


class Evaluator:
    """Two-tier memoized contract evaluation.

    Tier 1 caches per-layer yearly-recovery vectors keyed by (group perils,
    shifts, attachment, limit, reinstatements); tier 2 caches whole-contract
    risk reports keyed by contract identity. Both use LRU eviction, and
    neither changes any observable result (transparency invariant).
    """

    def __init__(
        self,
        store: CumulativeLossStore,
        pricing: PricingCurve,
        constraints: Sequence[ConstraintSpec] = (),
        gross_profit: float = 0.0,
        layer_cache_size: int = 200_000,
        contract_cache_size: int = 50_000,
        enabled: bool = True,
    ):
        self.store = store
        self.pricing = pricing
        self.constraints = tuple(constraints)
        self.gross_profit = gross_profit
        self.enabled = enabled
        self._layer_cache: OrderedDict = OrderedDict()
        self._contract_cache: OrderedDict = OrderedDict()
        self._layer_size = layer_cache_size
        self._contract_size = contract_cache_size
        self.layer_hits = 0
        self.layer_misses = 0
        self.contract_hits = 0
        self.contract_misses = 0
        self.space: list[tuple[float, float, bool]] = []  # (tvar, profit, feasible)

    def _layer_vector(self, contract: Contract, gname: str, layer: Layer) -> np.ndarray:
        group = contract.grouping.group(gname)
        key = (
            gname,
            tuple((s.perils, s.shift) for s in group.subgroups),
            layer.attachment,
            layer.limit,
            layer.reinstatements,
        )
        if self.enabled and key in self._layer_cache:
            self.layer_hits += 1
            self._layer_cache.move_to_end(key)
            return self._layer_cache[key]
        self.layer_misses += 1
        vec = yearly_recovery_vector(layer, group, self.store)
        if self.enabled:
            self._layer_cache[key] = vec
            if len(self._layer_cache) > self._layer_size:
                self._layer_cache.popitem(last=False)
        return vec

    def evaluate(self, contract: Contract, key: tuple | None = None) -> RiskReport:
        key = key if key is not None else contract.key()
        if self.enabled and key in self._contract_cache:
            self.contract_hits += 1
            self._contract_cache.move_to_end(key)
            return self._contract_cache[key]
        self.contract_misses += 1
        vectors = {
            (g, i): self._layer_vector(contract, g, layer) for g, i, layer in contract.layers()
        }
        result = evaluate_contract(
            contract, self.store, self.pricing, self.gross_profit, recovery_vectors=vectors
        )
        report = build_report(result, self.constraints)
        self.space.append((report.tvar, report.avg_net_profit, report.feasible))
        if self.enabled:
            self._contract_cache[key] = report
            if len(self._contract_cache) > self._contract_size:
                self._contract_cache.popitem(last=False)
        return report


@dataclass(frozen=True)
class TraceRecord:
    chain: int
    step: int
    objective: float
    best_objective: float
    temperature: float
    move: str
    accepted: bool


@dataclass(frozen=True)
class AnnealResult:
    """Ranked feasible contracts plus the full search trace and space sample."""

    best_feasible: tuple[tuple[Contract, RiskReport], ...]
    trace: tuple[TraceRecord, ...]
    space: tuple[tuple[float, float, bool], ...]
    baseline: RiskReport
    evaluations: int
    cache_stats: Mapping[str, int] = field(default_factory=dict)

    @property
    def best(self) -> tuple[Contract, RiskReport] | None:
        return self.best_feasible[0] if self.best_feasible else None


def default_penalty_scales(
    constraints: Sequence[ConstraintSpec], baseline_profit: float
) -> tuple[ConstraintSpec, ...]:
    """Fill missing penalty scales: a 1% relative violation costs 1% of |baseline|."""
    out = []
    for spec in constraints:
        if spec.penalty_scale is None:
            if abs(spec.threshold) > 1e-12:
                scale = abs(baseline_profit) / abs(spec.threshold)
            else:
                scale = max(abs(baseline_profit), 1.0)
            spec = replace(spec, penalty_scale=scale)
        out.append(spec)
    return tuple(out)


def run(
    store: CumulativeLossStore,
    pricing: PricingCurve,
    constraints: Sequence[ConstraintSpec],
    bounds: StateSpaceBounds,
    schedule: AnnealSchedule,
    start: Contract | Sequence[Contract] | None = None,
    gross_profit: float = 0.0,
    move_weights: Mapping[str, float] | None = None,
    top_n: int = 10,
    cache: bool = True,
    check_bounds_each_step: bool = False,
) -> AnnealResult:
    """Run restart chains of simulated annealing and return ranked feasible bests.

    ``start`` seeds every chain with the given contract (chains cycle through a
    list); None starts empty, enabling the build-bias phase. Feasible contracts
    are ranked by objective, then lower TVaR, then fewer layers.
    """
    bounds.validate_against_store(store)
    for grouping in bounds.groupings:
        grouping.validate_partition(store.peril_names)

    # Baseline (no reinsurance) anchors default penalty scales.
    probe = Evaluator(store, pricing, (), gross_profit, enabled=False)
    baseline_report = probe.evaluate(_to_contract(_initial_state(bounds), bounds))
    constraints = default_penalty_scales(constraints, baseline_report.avg_net_profit)
    evaluator = Evaluator(store, pricing, constraints, gross_profit, enabled=cache)
    baseline = evaluator.evaluate(_to_contract(_initial_state(bounds), bounds))

    starts: list[Contract | None]
    if start is None:
        starts = [None]
    elif isinstance(start, Contract):
        starts = [start]
    else:
        starts = list(start) or [None]

    weights = dict(move_weights or DEFAULT_MOVE_WEIGHTS)
    best_pool: dict[tuple, tuple[float, float, int, Contract, RiskReport]] = {}
    trace: list[TraceRecord] = []

    def consider(key, contract, report):
        if report.feasible and key not in best_pool:
            best_pool[key] = (report.objective, report.tvar, contract.num_layers, contract, report)

    phase_steps = int(schedule.initial_phase_fraction * schedule.steps)
    for chain in range(schedule.restarts):
        rng = np.random.default_rng((schedule.seed, chain))
        start_contract = starts[chain % len(starts)]
        from_empty = start_contract is None
        if from_empty:
            state = _initial_state(bounds)
        else:
            state = _state_from_contract(start_contract, bounds)
        contract = _to_contract(state, bounds)
        report = evaluator.evaluate(contract, state.key())
        current = report.objective
        consider(state.key(), contract, report)
        best = current
        for k in range(schedule.steps):
            t_k = temperature(k, schedule)
            if from_empty and k < phase_steps:
                w = dict(weights)
                w["add_remove_layer"] = w.get("add_remove_layer", 1.0) * schedule.build_bias
            else:
                w = weights
            cand_state, kind = propose(state, bounds, rng, w)
            cand_key = cand_state.key()
            cand_contract = _to_contract(cand_state, bounds)
            if check_bounds_each_step:
                _check_state(cand_state, bounds)
            cand_report = evaluator.evaluate(cand_contract, cand_key)
            consider(cand_key, cand_contract, cand_report)
            ok = accept(cand_report.objective - current, t_k, rng)
            if ok:
                state, current = cand_state, cand_report.objective
            best = max(best, current)
            trace.append(TraceRecord(chain, k, current, best, t_k, kind, ok))

    ranked = sorted(best_pool.values(), key=lambda e: (-e[0], e[1], e[2]))
    return AnnealResult(
        best_feasible=tuple((c, r) for _, _, _, c, r in ranked[:top_n]),
        trace=tuple(trace),
        space=tuple(evaluator.space),
        baseline=baseline,
        evaluations=evaluator.contract_hits + evaluator.contract_misses,
        cache_stats={
            "layer_hits": evaluator.layer_hits,
            "layer_misses": evaluator.layer_misses,
            "contract_hits": evaluator.contract_hits,
            "contract_misses": evaluator.contract_misses,
        },
    )


def _check_state(state: _State, bounds: StateSpaceBounds) -> None:
    """Assert structural invariants of a state (used in test builds)."""
    for gname, b in state.boundaries.items():
        grid = bounds.grids[gname]
        if len(b) == 1:
            raise AssertionError(f"tower of {gname!r} has a dangling boundary")
        if len(b) >= 2:
            if len(b) - 1 > bounds.max_layers:
                raise AssertionError(f"tower of {gname!r} exceeds max_layers")
            if any(j - i < bounds.min_layer_steps for i, j in zip(b, b[1:])):
                raise AssertionError(f"tower of {gname!r} violates min_layer_steps")
            if b[0] < 0 or b[-1] >= grid.size:
                raise AssertionError(f"tower of {gname!r} leaves the grid")
            if not _bottom_ok(state, bounds, gname, b[0]):
                raise AssertionError(f"tower of {gname!r} has a negative effective attachment")
        if len(state.reinst[gname]) != max(0, len(b) - 1):
            raise AssertionError(f"reinstatement list of {gname!r} out of sync")
        if any(r < 0 or r > bounds.max_reinstatements for r in state.reinst[gname]):
            raise AssertionError(f"reinstatements of {gname!r} out of range")


def load_bounds(path: str | Path) -> StateSpaceBounds:
    """Read state-space bounds from JSON.

    Expected shape: ``{"grids": {group: [values] | {"start","stop","points"}},
    "groupings": [{"groups": [...]}], "max_layers", "min_layer_steps",
    "max_reinstatements", "allowed_shifts"}``. Grouping entries use the same
    group/subgroup layout as contract files (layers ignored).
    """
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    grids = {}
    for name, g in raw["grids"].items():
        if isinstance(g, dict):
            grids[name] = np.linspace(float(g["start"]), float(g["stop"]), int(g["points"]))
        else:
            grids[name] = np.asarray(g, dtype=np.float64)
    groupings = []
    for entry in raw["groupings"]:
        groups = tuple(
            Group(
                g["name"],
                tuple(
                    Subgroup(s["name"], tuple(s["perils"]), float(s.get("shift", 0.0)))
                    for s in g["subgroups"]
                ),
            )
            for g in entry["groups"]
        )
        groupings.append(PerilGrouping(groups))
    return StateSpaceBounds(
        grids=grids,
        groupings=tuple(groupings),
        max_layers=int(raw.get("max_layers", 4)),
        min_layer_steps=int(raw.get("min_layer_steps", 1)),
        max_reinstatements=int(raw.get("max_reinstatements", 0)),
        allowed_shifts=tuple(raw.get("allowed_shifts", (0.0,))),
    )
