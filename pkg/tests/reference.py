"""Per-event brute-force reference implementation used as a test oracle.

Everything here recomputes contract outcomes directly from the raw event list,
with none of the cumulative-sum machinery, so agreement with the library is
meaningful evidence of correctness rather than shared code paths.
"""

from __future__ import annotations

import numpy as np

from reinsopt.contracts import Contract, PricingCurve
from reinsopt.events import EventLossTable


def brute_layer_recovery(table: EventLossTable, contract: Contract) -> dict:
    """Yearly recovery vector per (group, layer index), by per-event summation."""
    shift_of = {}
    for g in contract.grouping.groups:
        for s in g.subgroups:
            for p in s.perils:
                shift_of[table.peril_index(p)] = (g.name, s.shift)
    out = {}
    for gname, idx, layer in contract.layers():
        agg = np.zeros(table.num_trial_years)
        for t, p, loss in zip(table.trial_year, table.peril_id, table.loss):
            owner, shift = shift_of[int(p)]
            if owner != gname:
                continue
            a_eff = layer.attachment + shift
            agg[t] += min(max(0.0, loss - a_eff), layer.limit)
        out[(gname, idx)] = np.minimum((1 + layer.reinstatements) * layer.limit, agg)
    return out


def brute_evaluate(
    table: EventLossTable,
    contract: Contract,
    pricing: PricingCurve,
    gross_profit: float = 0.0,
) -> dict:
    """Full yearly accounting from raw events; returns a plain dict of arrays."""
    years = table.num_trial_years
    gross = np.zeros(years)
    np.add.at(gross, table.trial_year, table.loss)

    recovery = brute_layer_recovery(table, contract)
    premium = {}
    rstm = {}
    for gname, idx, layer in contract.layers():
        rec = recovery[(gname, idx)]
        avg = rec.mean()
        if pricing.mode == "curve":
            prem = layer.limit * pricing.rate_on_line(avg / layer.limit, gname)
        else:
            prem = (1 + pricing.market_factor) * avg
        premium[(gname, idx)] = prem
        rstm[(gname, idx)] = prem * np.minimum(layer.reinstatements * layer.limit, rec) / layer.limit

    total_rec = sum(recovery.values(), np.zeros(years))
    total_rstm = sum(rstm.values(), np.zeros(years))
    net_loss = gross - (total_rec - total_rstm)
    net_profit = gross_profit - net_loss - sum(premium.values())
    return {
        "gross": gross,
        "recovery": recovery,
        "premium": premium,
        "reinstatement_cost": rstm,
        "retained": gross - total_rec,
        "net_loss": net_loss,
        "net_profit": net_profit,
    }


def brute_max_net_event(table: EventLossTable, contract: Contract) -> np.ndarray:
    """Largest per-event net loss per (year, peril), layers applied in isolation."""
    shift_of = {}
    for g in contract.grouping.groups:
        for s in g.subgroups:
            for p in s.perils:
                shift_of[table.peril_index(p)] = (g.name, s.shift)
    out = np.zeros((table.num_trial_years, table.num_perils))
    for t, p, loss in zip(table.trial_year, table.peril_id, table.loss):
        gname, shift = shift_of[int(p)]
        net = loss
        for layer in contract.towers.get(gname, ()):
            net -= min(max(0.0, loss - (layer.attachment + shift)), layer.limit)
        out[t, p] = max(out[t, p], net)
    return out


def brute_d(table: EventLossTable, year: int, peril: int, x: float) -> float:
    """D(t, p, x) = sum of min(x, loss) over the events of (t, p)."""
    mask = (table.trial_year == year) & (table.peril_id == peril)
    return float(np.minimum(x, table.loss[mask]).sum())
