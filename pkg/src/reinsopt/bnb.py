"""Exact depth-first branch & bound for the simplified one-layer-per-group problem.

The simplified problem picks, for each peril group g, one layer (A_g, L_g)
with A_g in [A^min_g, A^max_g] and L_g in [0, L^max_g], maximizing the profit
sum of -rho * avg_recovery over groups subject to a tail-risk constraint
K(net losses) <= K_max. Each variable is located by b binary-search halvings
(attachment bit first, then limit, alternating); a candidate value is the
lower endpoint of its final subinterval, so L = 0 and A = A^min are always
candidates and the discretized search space has exactly 2^(2nb) leaves.

Bounds at each node come from interval corners of precomputed recovery tables:
the profit-optimistic corner is (max A, min L) and the risk-optimistic corner
is (min A, max L); unassigned groups sit at the minimum-risk layer
l* = (A^min, L^max). Suffix optima pi_max are solved once per suffix length
(groups fixed at l* ahead of the suffix) and reused at every tree depth. The
hot traversal is a compiled iterative kernel with O(n*b) memory.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ConfigurationError, ValidationError
from .events import SyntheticSpec, compress, compute_min_attachments, generate_synthetic
from .risk import aep as _aep
from .risk import tvar as _tvar
from .store import CumulativeLossStore, build_store

_EPS = 1e-9

RISK_KINDS = ("tvar", "aep")


@dataclass(frozen=True)
class BnbProblem:
    """The simplified n-group problem plus its discretization and risk budget."""

    store: CumulativeLossStore
    groups: tuple[tuple[int, ...], ...]  # peril ids per group
    a_min: np.ndarray
    a_max: np.ndarray
    l_max: np.ndarray
    b: int
    rho: float
    k_max: float
    risk_kind: str = "tvar"
    beta: float = 0.995

    def __post_init__(self):
        for arr in (self.a_min, self.a_max, self.l_max):
            arr.setflags(write=False)
        if self.b < 1:
            raise ValidationError("b must be >= 1")
        if self.rho < 0:
            raise ValidationError("rho must be >= 0")
        if self.risk_kind not in RISK_KINDS:
            raise ValidationError(f"unknown risk kind {self.risk_kind!r}")
        if np.any(self.a_min > self.a_max):
            raise ValidationError("require a_min <= a_max per group")
        if np.any(self.l_max <= 0):
            raise ValidationError("require l_max > 0 per group")

    @property
    def n(self) -> int:
        return len(self.groups)

    @property
    def exhaustive_leaf_count(self) -> int:
        return 2 ** (2 * self.n * self.b)

    def risk(self, net: np.ndarray) -> float:
        if self.risk_kind == "tvar":
            return _tvar(net, self.beta)
        return _aep(net, self.beta)


@dataclass(frozen=True)
class TreeStats:
    """Work counters for one tree traversal.

    ``nodes_visited`` counts every bound evaluation (each profit or risk bound
    computed at an internal node, and the exact profit/risk pair at a leaf);
    ``expansions`` counts tree nodes whose halving was applied. Both are
    reported since either convention appears in the literature.
    """

    nodes_visited: int
    expansions: int
    pruned_by_profit: int
    pruned_by_risk: int
    leaves: int
    exhaustive_leaf_count: int

    @property
    def reduction_factor(self) -> float:
        return self.exhaustive_leaf_count / max(1, self.leaves)


@dataclass(frozen=True)
class SubproblemSolution:
    """Optimum of one suffix sub-problem (prefix groups fixed at l*)."""

    suffix_start: int
    pi_max: float
    layers: tuple[tuple[float, float], ...]  # (A, L) per suffix group
    stats: TreeStats


@dataclass(frozen=True)
class CascadeResult:
    feasible: bool
    objective: float
    layers: tuple[tuple[float, float], ...]
    k_value: float
    stats: TreeStats
    suffix: tuple[SubproblemSolution, ...] = ()
    total_nodes: int = 0
    min_achievable_k: float | None = None


def candidate_grids(problem: BnbProblem) -> tuple[np.ndarray, np.ndarray]:
    """Boundary values per group, shape (n, 2^b + 1): index i is the i-th endpoint."""
    B = 2**problem.b
    frac = np.arange(B + 1) / B
    a_vals = problem.a_min[:, None] + (problem.a_max - problem.a_min)[:, None] * frac[None, :]
    l_vals = problem.l_max[:, None] * frac[None, :]
    return a_vals, l_vals


def threshold_grids(problem: BnbProblem) -> dict[int, np.ndarray]:
    """Per-peril store grids holding every reachable A and A+L value exactly."""
    a_vals, l_vals = candidate_grids(problem)
    grids: dict[int, np.ndarray] = {}
    for g, perils in enumerate(problem.groups):
        tops = (a_vals[g][:, None] + l_vals[g][None, :]).ravel()
        values = np.unique(np.concatenate([a_vals[g], tops]))
        values = values[values > 0]
        for p in perils:
            grids[p] = values
    return grids


def precompute_tables(problem: BnbProblem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rec, rbar, gross): recovery vectors and means at every boundary pair.

    rec[g, i, j, t] is the year-t recovery of group g's layer with attachment
    endpoint i and limit endpoint j; rbar is its mean over years.
    """
    a_vals, l_vals = candidate_grids(problem)
    B = a_vals.shape[1] - 1
    years = problem.store.num_trial_years
    rec = np.zeros((problem.n, B + 1, B + 1, years))
    for g, perils in enumerate(problem.groups):
        for i in range(B + 1):
            a = float(a_vals[g, i])
            for j in range(1, B + 1):
                top = float(a_vals[g, i] + l_vals[g, j])
                for p in perils:
                    rec[g, i, j] += problem.store.d_values(p, top) - problem.store.d_values(p, a)
    rbar = rec.mean(axis=3)
    return rec, rbar, problem.store.gross_yearly()


def group_profit(layer: tuple[float, float], group: int, problem: BnbProblem) -> float:
    """Profit contribution -rho * avg recovery; constant gross terms omitted."""
    a, limit = layer
    if not (problem.a_min[group] - _EPS <= a <= problem.a_max[group] + _EPS):
        raise ValidationError(f"attachment {a} outside [A^min, A^max] of group {group}")
    if not (0.0 <= limit <= problem.l_max[group] + _EPS):
        raise ValidationError(f"limit {limit} outside [0, L^max] of group {group}")
    if limit == 0.0:
        return 0.0
    rec = np.zeros(problem.store.num_trial_years)
    for p in problem.groups[group]:
        rec += problem.store.d_values(p, a + limit) - problem.store.d_values(p, a)
    return -problem.rho * float(rec.mean())


@njit(cache=True, nogil=True)
def _risk_nb(net, rank, is_tvar):
    # top-k selection with k = years - rank + 1; buf ascending, buf[0] is the
    # running k-th largest. Avoids the per-call copy of a full partition.
    k = net.size - rank + 1
    buf = np.empty(k)
    for i in range(k):
        v = net[i]
        j = i
        while j > 0 and buf[j - 1] > v:
            buf[j] = buf[j - 1]
            j -= 1
        buf[j] = v
    for i in range(k, net.size):
        v = net[i]
        if v > buf[0]:
            j = 0
            while j + 1 < k and buf[j + 1] < v:
                buf[j] = buf[j + 1]
                j += 1
            buf[j] = v
    p = buf[0]  # the rank-th smallest overall
    if not is_tvar:
        return p
    s = 0.0
    c = 0
    for i in range(1, k):
        if buf[i] > p:
            s += buf[i]
            c += 1
    if c == 0:
        return p
    return s / c


@njit(cache=True, nogil=True)
def _dfs_kernel(rec, rbar, gross, pb, start, n, b, rho, kmax, rank, is_tvar):
    """Iterative depth-first branch & bound over groups start..n-1.

    Groups before ``start`` stay at l* (endpoint indices (0, B)). Returns
    (found, best, best_a, best_l, evals, nodes, pruned_profit, pruned_risk,
    leaves) where evals counts bound evaluations and nodes applied children.
    """
    B = rbar.shape[1] - 1
    years = gross.size
    two_b = 2 * b
    depth_max = (n - start) * two_b

    a_lo = np.zeros(n, np.int64)
    a_hi = np.full(n, B, np.int64)
    l_lo = np.zeros(n, np.int64)
    l_hi = np.full(n, B, np.int64)
    ca = np.zeros(n, np.int64)  # risk-corner indices per group
    cl = np.full(n, B, np.int64)
    pa = np.zeros(n, np.int64)  # profit-corner indices per group
    pl = np.zeros(n, np.int64)

    n_run = gross.copy()
    for g in range(n):
        rv = rec[g, 0, B]
        for t in range(years):
            n_run[t] -= rv[t]
    p_run = 0.0

    f_alo = np.zeros(depth_max, np.int64)
    f_ahi = np.zeros(depth_max, np.int64)
    f_llo = np.zeros(depth_max, np.int64)
    f_lhi = np.zeros(depth_max, np.int64)
    f_ca = np.zeros(depth_max, np.int64)
    f_cl = np.zeros(depth_max, np.int64)
    f_pa = np.zeros(depth_max, np.int64)
    f_pl = np.zeros(depth_max, np.int64)
    f_p = np.zeros(depth_max)
    child = np.zeros(depth_max, np.int64)

    tmp = np.zeros(years)
    best = -np.inf
    found = False
    best_a = np.zeros(n, np.int64)
    best_l = np.zeros(n, np.int64)
    nodes = 0
    evals = 0
    pruned_profit = 0
    pruned_risk = 0
    leaves = 0

    d = 0
    child[0] = 0
    while d >= 0:
        if child[d] > 1:
            # both children at this depth explored: return to the parent,
            # whose applied child gets undone below
            d -= 1
            if d < 0:
                break
        else:
            # apply child[d] at depth d, saving the frame for undo
            g = start + d // two_b
            j = d % two_b
            f_alo[d] = a_lo[g]
            f_ahi[d] = a_hi[g]
            f_llo[d] = l_lo[g]
            f_lhi[d] = l_hi[g]
            f_ca[d] = ca[g]
            f_cl[d] = cl[g]
            f_pa[d] = pa[g]
            f_pl[d] = pl[g]
            f_p[d] = p_run
            if j % 2 == 0:  # attachment bit first
                mid = (a_lo[g] + a_hi[g]) // 2
                if child[d] == 0:
                    a_hi[g] = mid
                else:
                    a_lo[g] = mid
            else:
                mid = (l_lo[g] + l_hi[g]) // 2
                if child[d] == 0:
                    l_hi[g] = mid
                else:
                    l_lo[g] = mid
            complete = j == two_b - 1
            if complete:
                npa, npl = a_lo[g], l_lo[g]
            else:
                npa, npl = a_hi[g], l_lo[g]
            if j == 0:
                p_run += -rho * rbar[g, npa, npl]
            else:
                p_run += -rho * (rbar[g, npa, npl] - rbar[g, pa[g], pl[g]])
            pa[g] = npa
            pl[g] = npl
            if complete:
                nca, ncl = a_lo[g], l_lo[g]
            else:
                nca, ncl = a_lo[g], l_hi[g]
            if nca != ca[g] or ncl != cl[g]:
                oldv = rec[g, ca[g], cl[g]]
                newv = rec[g, nca, ncl]
                for t in range(years):
                    n_run[t] += oldv[t] - newv[t]
            ca[g] = nca
            cl[g] = ncl

            nodes += 1
            if d == depth_max - 1:
                # leaf: all suffix groups definite; recompute exactly
                leaves += 1
                evals += 2  # exact profit and exact risk
                obj = 0.0
                for h in range(start, n):
                    obj += -rho * rbar[h, a_lo[h], l_lo[h]]
                for t in range(years):
                    tmp[t] = gross[t]
                for h in range(n):
                    if h < start:
                        rv = rec[h, 0, B]
                    else:
                        rv = rec[h, a_lo[h], l_lo[h]]
                    for t in range(years):
                        tmp[t] -= rv[t]
                k = _risk_nb(tmp, rank, is_tvar)
                if k <= kmax and obj > best:
                    best = obj
                    found = True
                    for h in range(n):
                        best_a[h] = a_lo[h]
                        best_l[h] = l_lo[h]
                # fall through to the undo below, then try the sibling
            else:
                ub = p_run + pb[g + 1]
                evals += 1
                if ub <= best - 1e-9:
                    pruned_profit += 1
                else:
                    k_lb = _risk_nb(n_run, rank, is_tvar)
                    evals += 1
                    if k_lb > kmax + 1e-9:
                        pruned_risk += 1
                    else:
                        d += 1
                        child[d] = 0
                        continue

        # undo the child currently applied at depth d, advance to its sibling
        g = start + d // two_b
        if ca[g] != f_ca[d] or cl[g] != f_cl[d]:
            oldv = rec[g, ca[g], cl[g]]
            newv = rec[g, f_ca[d], f_cl[d]]
            for t in range(years):
                n_run[t] += oldv[t] - newv[t]
        a_lo[g] = f_alo[d]
        a_hi[g] = f_ahi[d]
        l_lo[g] = f_llo[d]
        l_hi[g] = f_lhi[d]
        ca[g] = f_ca[d]
        cl[g] = f_cl[d]
        pa[g] = f_pa[d]
        pl[g] = f_pl[d]
        p_run = f_p[d]
        child[d] += 1

    return found, best, best_a, best_l, evals, nodes, pruned_profit, pruned_risk, leaves


def _rank(problem: BnbProblem) -> int:
    years = problem.store.num_trial_years
    return min(int(math.ceil(problem.beta * years)), years)


def branch_and_bound(
    problem: BnbProblem,
    tables: tuple[np.ndarray, np.ndarray, np.ndarray],
    pi_bound: np.ndarray,
    start: int,
):
    """Solve the suffix sub-problem over groups start..n-1; prefix fixed at l*."""
    rec, rbar, gross = tables
    found, best, best_a, best_l, evals, nodes, pp, pr, leaves = _dfs_kernel(
        rec,
        rbar,
        gross,
        pi_bound,
        start,
        problem.n,
        problem.b,
        problem.rho,
        problem.k_max,
        _rank(problem),
        problem.risk_kind == "tvar",
    )
    stats = TreeStats(
        nodes_visited=int(evals),
        expansions=int(nodes),
        pruned_by_profit=int(pp),
        pruned_by_risk=int(pr),
        leaves=int(leaves),
        exhaustive_leaf_count=2 ** (2 * (problem.n - start) * problem.b),
    )
    return bool(found), float(best), best_a, best_l, stats


def solve_cascade(problem: BnbProblem, tables=None) -> CascadeResult:
    """Solve suffix sub-problems from shortest to longest, then the full problem.

    The suffix optimum table pi_max doubles as the profit upper bound at every
    tree depth; its running minimum keeps the bound monotone along paths.
    """
    if tables is None:
        tables = precompute_tables(problem)
    rec, rbar, gross = tables
    n, B = problem.n, 2**problem.b
    a_vals, l_vals = candidate_grids(problem)

    lstar_net = gross - rec[:, 0, B].sum(axis=0)
    k_lstar = problem.risk(lstar_net)
    empty_stats = TreeStats(0, 0, 0, 0, 0, problem.exhaustive_leaf_count)
    if k_lstar > problem.k_max:
        return CascadeResult(
            feasible=False,
            objective=float("-inf"),
            layers=(),
            k_value=k_lstar,
            stats=empty_stats,
            min_achievable_k=k_lstar,
        )

    pi_sfx = np.zeros(n + 1)
    pb = np.zeros(n + 1)
    suffix: list[SubproblemSolution] = []
    total_nodes = 0
    final = None
    for i in range(n - 1, -1, -1):
        found, best, best_a, best_l, stats = branch_and_bound(problem, tables, pb, i)
        total_nodes += stats.nodes_visited
        if not found:
            # all candidate leaves violate K_max; the least risky candidate is
            # every group at (A^min, largest candidate limit)
            min_net = gross - rec[:, 0, B - 1].sum(axis=0)
            return CascadeResult(
                feasible=False,
                objective=float("-inf"),
                layers=(),
                k_value=float("inf"),
                stats=stats,
                suffix=tuple(suffix),
                total_nodes=total_nodes,
                min_achievable_k=problem.risk(min_net),
            )
        pi_sfx[i] = best
        pb[i] = min(pi_sfx[i], pb[i + 1])
        layers = tuple(
            (float(a_vals[h, best_a[h]]), float(l_vals[h, best_l[h]])) for h in range(i, n)
        )
        suffix.append(SubproblemSolution(i, best, layers, stats))
        final = (best, best_a.copy(), best_l.copy(), stats)

    best, best_a, best_l, stats = final
    layers = tuple((float(a_vals[h, best_a[h]]), float(l_vals[h, best_l[h]])) for h in range(n))
    net = gross - sum(rec[h, best_a[h], best_l[h]] for h in range(n))
    return CascadeResult(
        feasible=True,
        objective=best,
        layers=layers,
        k_value=problem.risk(net),
        stats=stats,
        suffix=tuple(suffix),
        total_nodes=total_nodes,
    )


def exhaustive_solve(problem: BnbProblem, tables=None) -> tuple[bool, float, tuple]:
    """Reference enumeration of all 2^(2nb) leaves (tiny instances only)."""
    if 2 * problem.n * problem.b > 16:
        raise ConfigurationError("exhaustive enumeration is limited to 2nb <= 16")
    if tables is None:
        tables = precompute_tables(problem)
    rec, rbar, gross = tables
    n, B = problem.n, 2**problem.b
    best = (False, float("-inf"), ())
    idx = np.zeros(2 * n, dtype=np.int64)

    def rec_enum(pos):
        nonlocal best
        if pos == 2 * n:
            obj = 0.0
            for h in range(n):
                obj += -problem.rho * rbar[h, idx[2 * h], idx[2 * h + 1]]
            net = gross.copy()
            for h in range(n):
                net -= rec[h, idx[2 * h], idx[2 * h + 1]]
            if problem.risk(net) <= problem.k_max and obj > best[1]:
                best = (True, obj, tuple((idx[2 * h], idx[2 * h + 1]) for h in range(n)))
            return
        for v in range(B):
            idx[pos] = v
            rec_enum(pos + 1)

    rec_enum(0)
    return best


def recursive_bound_solver(problem: BnbProblem, tables=None):
    """Reference solver with the recursive (per-node conditioned) profit bound.

    At every tree node the suffix bound is recomputed conditioned on the
    actual prefix corners instead of the l*-prefixed pi_max table, which is
    strictly tighter but recursively expensive. Limited to tiny instances.
    Returns (CascadeResult-like objective, top_level_nodes).
    """
    if problem.n > 4 or problem.b > 2:
        raise ConfigurationError("recursive-bound reference is limited to n <= 4 and b <= 2")
    if tables is None:
        tables = precompute_tables(problem)
    rec, rbar, gross = tables
    n, B = problem.n, 2**problem.b
    rho, kmax = problem.rho, problem.k_max

    lstar_net = gross - rec[:, 0, B].sum(axis=0)
    if problem.risk(lstar_net) > kmax:
        return float("-inf"), 0

    # pi_max table for the running-minimum fallback, as in the cascade
    pi_sfx = np.zeros(n + 1)
    pb = np.zeros(n + 1)
    for i in range(n - 1, -1, -1):
        found, best, _, _, _ = branch_and_bound(problem, tables, pb, i)
        if not found:
            return float("-inf"), 0
        pi_sfx[i] = best
        pb[i] = min(best, pb[i + 1])

    memo: dict = {}

    def cond_opt(g: int, prefix: tuple) -> float:
        """Optimal suffix profit of groups g..n-1 given prefix risk corners."""
        key = (g, prefix)
        if key in memo:
            return memo[key]
        prefix_net = gross.copy()
        for h, (ai, li) in enumerate(prefix):
            prefix_net -= rec[h, ai, li]

        def enum(h: int, net: np.ndarray, profit: float) -> float:
            if h == n:
                return profit if problem.risk(net) <= kmax else float("-inf")
            out = float("-inf")
            for ai in range(B):
                for li in range(B):
                    v = enum(
                        h + 1,
                        net - rec[h, ai, li],
                        profit - rho * rbar[h, ai, li],
                    )
                    if v > out:
                        out = v
            return out

        value = enum(g, prefix_net, 0.0)
        memo[key] = value
        return value

    # top-level DFS mirroring the iterative kernel, with the conditioned bound
    two_b = 2 * problem.b
    a_lo = [0] * n
    a_hi = [B] * n
    l_lo = [0] * n
    l_hi = [B] * n
    best = float("-inf")
    nodes = 0
    rank = _rank(problem)

    def corner_prefix(g: int, complete: bool) -> tuple:
        out = []
        for h in range(g):
            out.append((a_lo[h], l_lo[h]))
        out.append((a_lo[g], l_lo[g] if complete else l_hi[g]))
        return tuple(out)

    def descend(d: int):
        nonlocal best, nodes
        g = d // two_b
        j = d % two_b
        for c in (0, 1):
            saved = (a_lo[g], a_hi[g], l_lo[g], l_hi[g])
            if j % 2 == 0:
                mid = (a_lo[g] + a_hi[g]) // 2
                if c == 0:
                    a_hi[g] = mid
                else:
                    a_lo[g] = mid
            else:
                mid = (l_lo[g] + l_hi[g]) // 2
                if c == 0:
                    l_hi[g] = mid
                else:
                    l_lo[g] = mid
            complete = j == two_b - 1
            nodes += 1
            if d == n * two_b - 1:
                obj = 0.0
                net = gross.copy()
                for h in range(n):
                    obj += -rho * rbar[h, a_lo[h], l_lo[h]]
                    net -= rec[h, a_lo[h], l_lo[h]]
                if problem.risk(net) <= kmax and obj > best:
                    best = obj
            else:
                p_run = 0.0
                for h in range(g):
                    p_run += -rho * rbar[h, a_lo[h], l_lo[h]]
                p_run += -rho * rbar[g, a_lo[g] if complete else a_hi[g], l_lo[g]]
                cond = cond_opt(g + 1, corner_prefix(g, complete))
                ub = p_run + min(cond, pb[g + 1])
                if ub <= best - 1e-9:
                    pass  # pruned by the recursive profit bound
                else:
                    net = gross.copy()
                    for h, (ai, li) in enumerate(corner_prefix(g, complete)):
                        net -= rec[h, ai, li]
                    for h in range(g + 1, n):
                        net -= rec[h, 0, B]
                    k_lb = problem.risk(net)
                    if not k_lb > kmax + 1e-9:
                        descend(d + 1)
            a_lo[g], a_hi[g], l_lo[g], l_hi[g] = saved

    descend(0)
    return best, nodes


def make_problem(
    n: int,
    b: int,
    seed: int = 0,
    years: int = 1000,
    events_per_year: int = 50,
    scale_base: float = 1.2,
    rho: float = 0.1,
    p_attach: float = 0.1,
    risk_kind: str = "tvar",
    beta: float = 0.995,
    k_max: float | None = None,
    k_max_fraction: float = 0.95,
    constant_scale: bool = False,
) -> BnbProblem:
    """Build a synthetic benchmark instance: Pareto losses, one peril per group.

    A^min comes from the attachment-probability constraint, A^max is the
    largest event of the group, L^max the largest yearly ceded loss above
    A^min. K_max defaults to ``k_max_fraction`` of the gross tail risk, which
    makes the constraint bind without being infeasible.
    """
    spec = SyntheticSpec(
        num_groups=n,
        years=years,
        events_per_year=events_per_year,
        scale_base=scale_base,
        seed=seed,
        constant_scale=constant_scale,
    )
    table = generate_synthetic(spec)
    grouping = {p: f"G{p:02d}" for p in range(n)}
    amin_by_group = compute_min_attachments(table, grouping, p_attach)
    a_min = np.array([amin_by_group[grouping[p]] for p in range(n)])
    maxima = table.yearly_maxima()
    a_max = maxima.max(axis=0)
    ceded = np.zeros((years, n))
    excess = np.maximum(0.0, table.loss - a_min[table.peril_id])
    np.add.at(ceded, (table.trial_year, table.peril_id), excess)
    l_max = ceded.max(axis=0)

    compressed, base, _ = compress(table, amin_by_group, grouping)

    problem_wo_store = dict(
        groups=tuple((p,) for p in range(n)),
        a_min=a_min,
        a_max=a_max,
        l_max=l_max,
        b=b,
        rho=rho,
        risk_kind=risk_kind,
        beta=beta,
    )
    # grids need the problem geometry; build a throwaway to derive them
    probe = BnbProblem(store=None, k_max=0.0, **problem_wo_store)  # type: ignore[arg-type]
    grids = threshold_grids(probe)
    store = build_store(compressed, thresholds=grids, base=base)
    if k_max is None:
        gross = store.gross_yearly()
        k_max = k_max_fraction * (_tvar(gross, beta) if risk_kind == "tvar" else _aep(gross, beta))
    return BnbProblem(store=store, k_max=float(k_max), **problem_wo_store)


@dataclass(frozen=True)
class CensusRow:
    n: int
    b: int
    instance: int
    nodes_visited: int
    total_nodes: int
    reduction_factor: float
    objective: float
    feasible: bool


@dataclass(frozen=True)
class CensusResult:
    rows: tuple[CensusRow, ...]
    c1: float
    c0: float

    def fit_nodes(self, n: int, b: int) -> float:
        return 4.0 ** (self.c1 * b * n + self.c0)


def _census_seed(seed: int, b: int, n: int, k: int) -> int:
    return (seed * 1_000_003 + b * 10_007 + n * 101 + k) & 0x7FFFFFFF


def census(
    b_values: Sequence[int] = (1, 2, 3),
    n_max: int = 16,
    instances: int = 10,
    seed: int = 0,
    years: int = 1000,
    events_per_year: int = 50,
    scale_base: float = 1.2,
    threads: int = 1,
    out: str | Path | None = None,
    progress=None,
) -> CensusResult:
    """Solve 10 instances per (n, b) point and fit log4(nodes) = c1*bn + c0.

    ``n`` ranges over 2..n_max//b per b. The fitted exponents follow the
    paper's reporting form for the pruned tree-size envelope.
    """
    points = [(b, n) for b in b_values for n in range(2, n_max // b + 1)]
    jobs = [(b, n, k) for b, n in points for k in range(instances)]

    def solve_one(job):
        b, n, k = job
        problem = make_problem(
            n,
            b,
            seed=_census_seed(seed, b, n, k),
            years=years,
            events_per_year=events_per_year,
            scale_base=scale_base,
        )
        res = solve_cascade(problem)
        return CensusRow(
            n=n,
            b=b,
            instance=k,
            nodes_visited=res.stats.nodes_visited,
            total_nodes=res.total_nodes,
            reduction_factor=res.stats.reduction_factor,
            objective=res.objective,
            feasible=res.feasible,
        )

    rows: list[CensusRow] = []
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for row in pool.map(solve_one, jobs):
                rows.append(row)
                if progress:
                    progress(row)
    else:
        for job in jobs:
            rows.append(solve_one(job))
            if progress:
                progress(rows[-1])

    x = np.array([r.b * r.n for r in rows], dtype=np.float64)
    # fit on the cascade total: the full work of the solver on one instance
    y = np.array([math.log(max(1, r.total_nodes), 4) for r in rows])
    c1, c0 = np.polyfit(x, y, 1)
    result = CensusResult(tuple(rows), float(c1), float(c0))
    if out is not None:
        write_census_csv(result, out)
    return result


def write_census_csv(result: CensusResult, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["n", "b", "instance", "nodes_visited", "total_nodes", "reduction_factor", "objective", "feasible"]
        )
        for r in result.rows:
            writer.writerow(
                [r.n, r.b, r.instance, r.nodes_visited, r.total_nodes, f"{r.reduction_factor:.6g}", repr(r.objective), int(r.feasible)]
            )
