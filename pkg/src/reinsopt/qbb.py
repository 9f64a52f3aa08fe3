"""Quantum-vs-classical crossover arithmetic for quantum branch & bound.

The model compares a fault-tolerant quantum device executing the branch &
bound oracle out of Toffoli gates against a classical fp16 pipeline. With a
quadratic (Grover-type) speedup, quantum wins once the tree size N satisfies
t_q * sqrt(N) <= t_c * N, i.e. N >= (t_q/t_c)^2. At that crossover point the
wall-clock budget caps how much arithmetic a single oracle call may contain.

All comparisons are carried out in exact rational arithmetic; floats appear
only in the rendered report. The operations budget is derived from the time
ratio rounded to two significant figures, matching the convention used when
such ratios are quoted (e.g. 2.9e7 rather than 2.85e7).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ValidationError

__all__ = [
    "HardwareModel",
    "CrossoverReport",
    "estimate",
    "oracle_cost_lower_bound",
]


@dataclass(frozen=True)
class HardwareModel:
    """Hardware rates entering the crossover estimate.

    Attributes:
        toffoli_rate: Toffoli gates per second on the quantum device.
        and_gates_per_add: AND (Toffoli) gates per 16-bit addition.
        classical_ops_per_second: fp16 operations per second classically.
        max_runtime: wall-clock budget in seconds.
    """

    toffoli_rate: float = 1e5
    and_gates_per_add: int = 15
    classical_ops_per_second: float = 1.9e11
    max_runtime: float = 1e6

    def __post_init__(self):
        for name in ("toffoli_rate", "and_gates_per_add", "classical_ops_per_second", "max_runtime"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be strictly positive")


@dataclass(frozen=True)
class CrossoverReport:
    """Crossover quantities plus a human-readable verdict.

    Attributes:
        t_ratio: quantum-to-classical time per elementary operation, t_q/t_c.
        min_tree_size: smallest tree size N with T_q <= T_c.
        max_ops_per_oracle: additions allowed per oracle call so that the
            quantum run still fits the wall-clock budget at the crossover.
        verdict: one-line summary; mentions the event count when supplied.
        event_count: per-oracle additions lower bound used for the verdict,
            or None when no event count was supplied.
    """

    t_ratio: float
    min_tree_size: int
    max_ops_per_oracle: int
    verdict: str
    event_count: int | None = None

    @property
    def feasible(self) -> bool | None:
        if self.event_count is None:
            return None
        return self.event_count <= self.max_ops_per_oracle

    def to_dict(self) -> dict:
        return {
            "t_ratio": _sig3(self.t_ratio),
            "min_tree_size": self.min_tree_size,
            "max_ops_per_oracle": self.max_ops_per_oracle,
            "event_count": self.event_count,
            "feasible": self.feasible,
            "verdict": self.verdict,
        }


def _sig3(x: float) -> float:
    if x == 0:
        return 0.0
    return float(f"{x:.3g}")


def _round_sig(x: Fraction, digits: int) -> Fraction:
    """Round a positive rational to ``digits`` significant decimal figures."""
    if x <= 0:
        raise ValidationError("significant-figure rounding needs a positive value")
    exponent = math.floor(math.log10(float(x)))
    shift = digits - 1 - exponent
    scaled = x * Fraction(10) ** shift
    # round half away from zero (2.85 -> 2.9), not banker's rounding
    return Fraction(math.floor(scaled + Fraction(1, 2))) * Fraction(10) ** (-shift)


def estimate(model: HardwareModel, event_count: int | None = None) -> CrossoverReport:
    """Compute the crossover report for the given hardware model.

    The tree-size threshold uses the exact ratio; the per-oracle operations
    budget uses the two-significant-figure ratio, whose square root is then
    exact and avoids spurious precision in the headline budget number.

    Args:
        model: hardware rates; see HardwareModel.
        event_count: optional per-oracle additions lower bound (one
            subtraction per event); drives the feasibility verdict.

    Returns:
        CrossoverReport with exact-integer thresholds.
    """
    t_q = Fraction(model.and_gates_per_add) / Fraction(model.toffoli_rate)
    t_c = 1 / Fraction(model.classical_ops_per_second)
    ratio = t_q / t_c
    min_tree = math.ceil(ratio * ratio)

    ratio_2sig = _round_sig(ratio, 2)
    budget = Fraction(model.max_runtime) / (t_q * ratio_2sig)
    max_ops = math.floor(budget)

    if event_count is None:
        verdict = (
            f"quantum advantage requires tree sizes N >= {float(min_tree):.3g} "
            f"and oracles of at most {max_ops} additions"
        )
    else:
        if event_count < 0:
            raise ValidationError("event_count must be >= 0")
        need = oracle_cost_lower_bound(event_count)
        if need <= max_ops:
            verdict = (
                f"feasible: {need} additions per oracle call fit the "
                f"{max_ops}-addition budget"
            )
        else:
            verdict = (
                f"infeasible: {need} additions per oracle call exceed the "
                f"{max_ops}-addition budget by {need / max(1, max_ops):.0f}x"
            )
    return CrossoverReport(
        t_ratio=float(ratio),
        min_tree_size=int(min_tree),
        max_ops_per_oracle=int(max_ops),
        verdict=verdict,
        event_count=event_count,
    )


def oracle_cost_lower_bound(event_count: int) -> int:
    """Minimal additions per bound evaluation: one subtraction per event."""
    if event_count < 0:
        raise ValidationError("event_count must be >= 0")
    return int(event_count)


def format_report(report: CrossoverReport) -> str:
    """Render the report as aligned human-readable lines."""
    lines = [
        f"t_q / t_c ratio      : {_sig3(report.t_ratio):.3g}",
        f"crossover tree size  : {float(report.min_tree_size):.3g}",
        f"additions per oracle : {report.max_ops_per_oracle}",
    ]
    if report.event_count is not None:
        lines.append(f"events per oracle    : {report.event_count}")
    lines.append(f"verdict              : {report.verdict}")
    return "\n".join(lines)
