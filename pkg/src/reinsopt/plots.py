"""Figure rendering for optimizer traces, explored spaces, and census scaling.

All functions render to files with the non-interactive Agg backend so they
work in headless batch runs; each returns the path it wrote.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["plot_trace", "plot_space", "plot_census"]


def plot_trace(trace, path: str | Path) -> Path:
    """Objective and best-so-far per annealing step, one panel per chain."""
    path = Path(path)
    chains = sorted({r.chain for r in trace})
    fig, axes = plt.subplots(
        len(chains) or 1, 1, figsize=(8, 2.2 * max(1, len(chains))), sharex=True, squeeze=False
    )
    for ax, chain in zip(axes.ravel(), chains):
        rows = [r for r in trace if r.chain == chain]
        steps = [r.step for r in rows]
        ax.plot(steps, [r.objective for r in rows], lw=0.6, alpha=0.6, label="objective")
        ax.plot(steps, [r.best_objective for r in rows], lw=1.2, label="best")
        ax.set_ylabel(f"chain {chain}")
        ax.legend(loc="lower right", fontsize="x-small")
    axes.ravel()[-1].set_xlabel("step")
    fig.suptitle("Annealing trace")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_space(space, path: str | Path) -> Path:
    """Explored contract space: tail risk vs profit, colored by feasibility."""
    path = Path(path)
    tvar = np.array([s[0] for s in space])
    profit = np.array([s[1] for s in space])
    feasible = np.array([bool(s[2]) for s in space])
    fig, ax = plt.subplots(figsize=(7, 5))
    if space:
        ax.scatter(
            tvar[~feasible], profit[~feasible], s=8, c="lightcoral", label="infeasible", alpha=0.6
        )
        ax.scatter(
            tvar[feasible], profit[feasible], s=8, c="seagreen", label="feasible", alpha=0.6
        )
        ax.legend(fontsize="small")
    ax.set_xlabel("tail risk (TVaR of net loss)")
    ax.set_ylabel("average net profit")
    ax.set_title("Explored contract space")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_census(result, path: str | Path) -> Path:
    """Tree size vs problem size b*n with the fitted exponent line."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 5))
    markers = {1: "o", 2: "s", 3: "^"}
    for b in sorted({r.b for r in result.rows}):
        rows = [r for r in result.rows if r.b == b]
        x = [r.b * r.n for r in rows]
        y = [math.log(max(1, r.total_nodes), 4) for r in rows]
        ax.scatter(x, y, s=14, marker=markers.get(b, "x"), alpha=0.7, label=f"b={b}")
    xs = np.linspace(min(r.b * r.n for r in result.rows), max(r.b * r.n for r in result.rows), 2)
    ax.plot(xs, result.c1 * xs + result.c0, "k-", lw=1.2, label=f"fit {result.c1:.2f}·bn+{result.c0:.2f}")
    ax.plot(xs, xs + 0.0, "k:", lw=1.0, label="exhaustive (bn)")
    ax.set_xlabel("b · n")
    ax.set_ylabel("log4(nodes visited)")
    ax.set_title("Branch & bound tree-size census")
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
