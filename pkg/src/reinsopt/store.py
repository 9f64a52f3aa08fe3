"""Precomputed cumulative loss sums backing all contract evaluation.

For each peril p and trial year t the store holds D(t, p, x) = sum over events
of min(x, loss) at a fixed grid of thresholds x, so a layer's unconstrained
recovery is the difference of two lookups. Losses are accumulated per (year,
peril) in ascending-loss order with the compressed-away base loss as the first
addend; this makes a store built from a compressed table bit-identical, at
every threshold at or above the compression cutoff, to one built from the
original table.

Once built, a store is immutable and safe for unlimited concurrent readers.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import GridError, ParseError, ValidationError
from .events import BaseLosses, EventLossTable, default_threshold_grid

_STORE_MAGIC = b"RSTO"
_STORE_VERSION = 1

GRID_ATOL = 1e-6  # absolute tolerance for on-grid threshold lookups


@dataclass(frozen=True)
class CumulativeLossStore:
    """Immutable D(t, p, x) tables plus largest-in-year events and totals.

    ``cumsum[p][t, i]`` includes the base loss of (t, p) as its first addend,
    so at thresholds above the compression cutoff it equals the uncompressed
    D exactly. ``max_event`` covers compressed-away events as well. ``totals``
    is the full gross loss per (year, peril) including base loss.
    """

    thresholds: tuple[np.ndarray, ...]
    cumsum: tuple[np.ndarray, ...]
    max_event: np.ndarray
    base_loss: np.ndarray
    totals: np.ndarray
    num_trial_years: int
    peril_names: tuple[str, ...]

    def __post_init__(self):
        for arr in (*self.thresholds, *self.cumsum, self.max_event, self.base_loss, self.totals):
            arr.setflags(write=False)

    @property
    def num_perils(self) -> int:
        return len(self.peril_names)

    def peril_index(self, name: str) -> int:
        try:
            return self.peril_names.index(name)
        except ValueError:
            raise ValidationError(f"unknown peril {name!r}") from None

    def threshold_index(self, peril: int, x: float) -> int:
        grid = self.thresholds[peril]
        i = int(np.searchsorted(grid, x))
        for j in (i, i - 1):
            if 0 <= j < grid.size and abs(grid[j] - x) <= GRID_ATOL:
                return j
        raise GridError(
            f"value {x!r} is not on the threshold grid of peril {self.peril_names[peril]!r}"
        )

    def d_values(self, peril: int, x: float) -> np.ndarray:
        """D(t, peril, x) for every trial year; x must be 0 or on the grid."""
        if x == 0.0:
            return np.zeros(self.num_trial_years)
        return self.cumsum[peril][:, self.threshold_index(peril, x)]

    def gross_yearly(self) -> np.ndarray:
        """Total gross loss per trial year across all perils."""
        return self.totals.sum(axis=1)


def build_store(
    table: EventLossTable,
    thresholds: Mapping[int, np.ndarray] | None = None,
    base: BaseLosses | None = None,
    grid_points: int = 80,
) -> CumulativeLossStore:
    """Build the cumulative-sum store from an event-loss table.

    ``thresholds`` maps peril id to a sorted, strictly positive grid; by
    default a geometric grid of ``grid_points`` values per peril is used.
    ``base`` carries the per-(year, peril) remainder from compression.
    """
    if thresholds is None:
        thresholds = default_threshold_grid(table, grid_points)
    if base is None:
        base = BaseLosses.zeros(table.num_trial_years, table.num_perils)

    years = table.num_trial_years
    pseudo_years = np.arange(years)
    grid_list: list[np.ndarray] = []
    cum_list: list[np.ndarray] = []
    for p in range(table.num_perils):
        grid = np.ascontiguousarray(np.asarray(thresholds.get(p, ()), dtype=np.float64))
        if grid.size == 0:
            grid = np.array([1.0])
        if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
            raise ValidationError(
                f"thresholds for peril {table.peril_names[p]!r} must be sorted ascending and > 0"
            )
        mask = table.peril_id == p
        order = np.argsort(table.loss[mask], kind="stable")
        ev_years = table.trial_year[mask][order]
        ev_loss = table.loss[mask][order]
        bins = np.concatenate([pseudo_years, ev_years])
        cum = np.empty((years, grid.size))
        for i, x in enumerate(grid):
            weights = np.concatenate([base.total[:, p], np.minimum(x, ev_loss)])
            cum[:, i] = np.bincount(bins, weights=weights, minlength=years)
        grid_list.append(grid)
        cum_list.append(cum)

    totals = np.empty((years, table.num_perils))
    for p in range(table.num_perils):
        mask = table.peril_id == p
        order = np.argsort(table.loss[mask], kind="stable")
        bins = np.concatenate([pseudo_years, table.trial_year[mask][order]])
        weights = np.concatenate([base.total[:, p], table.loss[mask][order]])
        totals[:, p] = np.bincount(bins, weights=weights, minlength=years)

    max_event = np.maximum(table.yearly_maxima(), base.max_event)
    return CumulativeLossStore(
        thresholds=tuple(grid_list),
        cumsum=tuple(cum_list),
        max_event=max_event,
        base_loss=base.total.copy(),
        totals=totals,
        num_trial_years=years,
        peril_names=table.peril_names,
    )


def save_store(store: CumulativeLossStore, path: str | Path) -> None:
    """Write the store in the binary columnar format (magic RSTO, version 1)."""
    header = json.dumps(
        {
            "num_trial_years": store.num_trial_years,
            "peril_names": list(store.peril_names),
            "grid_sizes": [int(g.size) for g in store.thresholds],
        }
    ).encode()
    with open(path, "wb") as fh:
        fh.write(_STORE_MAGIC)
        fh.write(struct.pack("<BI", _STORE_VERSION, len(header)))
        fh.write(header)
        for grid in store.thresholds:
            fh.write(grid.astype("<f8").tobytes())
        for cum in store.cumsum:
            fh.write(np.ascontiguousarray(cum, dtype="<f8").tobytes())
        for arr in (store.max_event, store.base_loss, store.totals):
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_store(path: str | Path) -> CumulativeLossStore:
    """Read a store written by :func:`save_store`, checking magic and version."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _STORE_MAGIC:
            raise ParseError(f"not a store file (magic {magic!r})")
        version, header_len = struct.unpack("<BI", fh.read(5))
        if version != _STORE_VERSION:
            raise ParseError(f"unsupported store version {version}")
        meta = json.loads(fh.read(header_len))
        years = meta["num_trial_years"]
        names = tuple(meta["peril_names"])
        sizes = meta["grid_sizes"]

        def read(count: int) -> np.ndarray:
            return np.frombuffer(fh.read(8 * count), dtype="<f8")

        grids = tuple(read(m) for m in sizes)
        cums = tuple(read(years * m).reshape(years, m).copy() for m in sizes)
        max_event = read(years * len(names)).reshape(years, len(names)).copy()
        base_loss = read(years * len(names)).reshape(years, len(names)).copy()
        totals = read(years * len(names)).reshape(years, len(names)).copy()
    return CumulativeLossStore(
        thresholds=tuple(g.copy() for g in grids),
        cumsum=cums,
        max_event=max_event,
        base_loss=base_loss,
        totals=totals,
        num_trial_years=years,
        peril_names=names,
    )
