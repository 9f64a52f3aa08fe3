"""Event-loss tables: ingestion, synthesis, and attachment-based compression.

The event-loss table is the raw input to everything else: one row per gross
loss event, keyed by trial year and peril. Synthetic tables draw Pareto losses
from a counter-based generator so results are reproducible across platforms
and independent of generation order. Compression removes events that can never
be ceded (losses at or below the per-group minimum attachment) while exactly
preserving yearly totals.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ParseError, ValidationError
from .risk import percentile

_EVENTS_MAGIC = b"RXEV"
_EVENTS_VERSION = 1


@dataclass(frozen=True)
class EventLossTable:
    """Gross loss events keyed by (trial year, peril).

    Columns are parallel arrays; row order carries no meaning. Years with no
    events are legal and contribute zero loss.
    """

    trial_year: np.ndarray
    peril_id: np.ndarray
    loss: np.ndarray
    num_trial_years: int
    peril_names: tuple[str, ...]

    def __post_init__(self):
        year = np.ascontiguousarray(self.trial_year, dtype=np.int64)
        peril = np.ascontiguousarray(self.peril_id, dtype=np.int64)
        loss = np.ascontiguousarray(self.loss, dtype=np.float64)
        if not (year.shape == peril.shape == loss.shape) or year.ndim != 1:
            raise ValidationError("trial_year, peril_id and loss must be 1-d arrays of equal length")
        if self.num_trial_years < 1:
            raise ValidationError("num_trial_years must be >= 1")
        if loss.size:
            if not np.all(loss > 0):
                bad = int(np.argmin(loss > 0))
                raise ValidationError(f"event {bad} has non-positive loss {loss[bad]}")
            if year.min() < 0 or year.max() >= self.num_trial_years:
                raise ValidationError("trial_year out of range [0, num_trial_years)")
            if peril.min() < 0 or peril.max() >= len(self.peril_names):
                raise ValidationError("peril_id not present in the peril catalog")
        for arr, name in ((year, "trial_year"), (peril, "peril_id"), (loss, "loss")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def num_events(self) -> int:
        return int(self.loss.size)

    @property
    def num_perils(self) -> int:
        return len(self.peril_names)

    def peril_index(self, name: str) -> int:
        try:
            return self.peril_names.index(name)
        except ValueError:
            raise ValidationError(f"unknown peril {name!r}") from None

    def yearly_totals(self) -> np.ndarray:
        """Total gross loss per (trial_year, peril_id), shape (years, perils)."""
        out = np.zeros((self.num_trial_years, self.num_perils))
        np.add.at(out, (self.trial_year, self.peril_id), self.loss)
        return out

    def yearly_maxima(self) -> np.ndarray:
        """Largest single event loss per (trial_year, peril_id); 0 if none."""
        out = np.zeros((self.num_trial_years, self.num_perils))
        np.maximum.at(out, (self.trial_year, self.peril_id), self.loss)
        return out


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the Pareto event generator.

    Losses take the form ``scale_g * (1 - u) ** -0.5`` with ``u`` uniform in
    [0, 1). ``scale_base`` is the per-group scale base; by default group ``g``
    uses ``scale_base ** (g + 1)`` so groups span geometrically different loss
    scales, while ``constant_scale`` pins every group to ``scale_base``.
    """

    num_groups: int
    years: int = 1000
    events_per_year: int = 50
    scale_base: float = 1.2
    seed: int = 0
    constant_scale: bool = False

    def __post_init__(self):
        if self.num_groups < 1:
            raise ValidationError("num_groups must be >= 1")
        if self.years < 1:
            raise ValidationError("years must be >= 1")
        if self.events_per_year < 1:
            raise ValidationError("events_per_year must be >= 1")
        if not self.scale_base > 1.0:
            raise ValidationError("scale_base must be > 1")

    def group_scale(self, group: int) -> float:
        if self.constant_scale:
            return self.scale_base
        return self.scale_base ** (group + 1)


@dataclass(frozen=True)
class CompressionReport:
    """Summary of an attachment-based compression pass."""

    min_attachment: Mapping[str, float]
    events_before: int
    events_after: int

    @property
    def reduction_factor(self) -> float:
        if self.events_after == 0:
            return float("inf") if self.events_before else 1.0
        return self.events_before / self.events_after


@dataclass(frozen=True)
class BaseLosses:
    """Per-(trial year, peril) remainder of compressed-away events.

    ``total`` preserves yearly totals exactly; ``max_event`` keeps the largest
    compressed-away event so occurrence metrics survive compression.
    """

    total: np.ndarray
    max_event: np.ndarray

    @classmethod
    def zeros(cls, num_trial_years: int, num_perils: int) -> "BaseLosses":
        shape = (num_trial_years, num_perils)
        return cls(total=np.zeros(shape), max_event=np.zeros(shape))


def _splitmix64(x: np.ndarray) -> np.ndarray:
    x = (x + np.uint64(0x9E3779B97F4A7C15)).astype(np.uint64)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def counter_uniforms(seed: int, group: np.ndarray, year: np.ndarray, event: np.ndarray) -> np.ndarray:
    """Uniform [0, 1) variates from a splitmix64 stream keyed by (seed, group, year, event).

    Counter-based, so generation is order-independent and identical across
    platforms for equal seeds.
    """
    h = _splitmix64(np.asarray(seed, dtype=np.uint64).reshape(1))
    h = _splitmix64(h ^ np.asarray(group, dtype=np.uint64))
    h = _splitmix64(h ^ np.asarray(year, dtype=np.uint64))
    h = _splitmix64(h ^ np.asarray(event, dtype=np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * 2.0**-53


def pareto_loss(u: np.ndarray, scale: float) -> np.ndarray:
    """Loss of a single event given its uniform draw: ``scale * (1-u)**-0.5``."""
    return scale * (1.0 - np.asarray(u, dtype=np.float64)) ** -0.5


def generate_synthetic(spec: SyntheticSpec) -> EventLossTable:
    """Generate a Pareto event-loss table, one peril per group."""
    g, t, e = np.meshgrid(
        np.arange(spec.num_groups),
        np.arange(spec.years),
        np.arange(spec.events_per_year),
        indexing="ij",
    )
    g, t, e = g.ravel(), t.ravel(), e.ravel()
    u = counter_uniforms(spec.seed, g, t, e)
    scales = np.array([spec.group_scale(i) for i in range(spec.num_groups)])
    loss = pareto_loss(u, 1.0) * scales[g]
    names = tuple(f"G{i:02d}" for i in range(spec.num_groups))
    return EventLossTable(t, g, loss, spec.years, names)


def compute_min_attachments(
    table: EventLossTable,
    grouping: Mapping[int, str],
    p_attach_max: float,
) -> dict[str, float]:
    """Minimum attachment per group under a maximum attachment probability.

    Returns, for each group, the smallest loss value A such that the fraction
    of trial years whose largest single event in the group exceeds A is at
    most ``p_attach_max`` (the empirical (1 - p)-quantile of yearly maxima,
    nearest rank). Groups with no events get 0.
    """
    if not 0.0 < p_attach_max < 1.0:
        raise ValidationError("p_attach_max must lie strictly between 0 and 1")
    maxima = table.yearly_maxima()
    out: dict[str, float] = {}
    for group in sorted(set(grouping.values())):
        perils = [p for p, gname in grouping.items() if gname == group]
        if not perils:
            out[group] = 0.0
            continue
        group_max = maxima[:, perils].max(axis=1)
        if not np.any(group_max > 0):
            out[group] = 0.0
        else:
            out[group] = float(percentile(group_max, 1.0 - p_attach_max))
    return out


def compress(
    table: EventLossTable,
    min_attachment: Mapping[str, float],
    grouping: Mapping[int, str],
) -> tuple[EventLossTable, BaseLosses, CompressionReport]:
    """Drop events that can never be ceded, folding them into base losses.

    An event of peril p is removed when its loss is <= the minimum attachment
    of p's group. Removed losses are accumulated per (year, peril) in
    ascending-loss order; feeding the result to :func:`reinsopt.store.build_store`
    reproduces the uncompressed store bit for bit at every threshold >= the
    minimum attachment.
    """
    cutoffs = np.zeros(table.num_perils)
    for p in range(table.num_perils):
        group = grouping.get(p)
        if group is not None:
            cutoffs[p] = min_attachment.get(group, 0.0)
    keep = table.loss > cutoffs[table.peril_id]

    base = BaseLosses.zeros(table.num_trial_years, table.num_perils)
    order = np.argsort(table.loss[~keep], kind="stable")
    dropped_year = table.trial_year[~keep][order]
    dropped_peril = table.peril_id[~keep][order]
    dropped_loss = table.loss[~keep][order]
    # np.add.at accumulates in input order, matching the store's ascending-loss
    # accumulation so compression stays bit-exact.
    np.add.at(base.total, (dropped_year, dropped_peril), dropped_loss)
    np.maximum.at(base.max_event, (dropped_year, dropped_peril), dropped_loss)

    compressed = EventLossTable(
        table.trial_year[keep],
        table.peril_id[keep],
        table.loss[keep],
        table.num_trial_years,
        table.peril_names,
    )
    report = CompressionReport(
        min_attachment=dict(min_attachment),
        events_before=table.num_events,
        events_after=compressed.num_events,
    )
    return compressed, base, report


def default_threshold_grid(table: EventLossTable, points: int = 80) -> dict[int, np.ndarray]:
    """Geometric per-peril threshold grid between smallest and largest event loss."""
    if points < 2:
        raise ValidationError("grid needs at least 2 points")
    grids: dict[int, np.ndarray] = {}
    for p in range(table.num_perils):
        losses = table.loss[table.peril_id == p]
        if losses.size == 0:
            grids[p] = np.array([1.0])
            continue
        lo, hi = float(losses.min()), float(losses.max())
        if lo == hi:
            grids[p] = np.array([hi])
        else:
            grids[p] = np.geomspace(lo, hi, points)
    return grids


def load_events(path: str | Path, format: str | None = None) -> EventLossTable:
    """Load an event-loss table from CSV or the binary columnar format."""
    path = Path(path)
    if format is None:
        format = "binary-columnar" if path.suffix in (".bin", ".rxev") else "csv"
    if format == "csv":
        return _load_events_csv(path)
    if format == "binary-columnar":
        return _load_events_binary(path)
    raise ValidationError(f"unknown event format {format!r}")


def _load_events_csv(path: Path) -> EventLossTable:
    years: list[int] = []
    perils: list[int] = []
    losses: list[float] = []
    catalog: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file, expected header trial_year,peril,loss") from None
        if [h.strip() for h in header] != ["trial_year", "peril", "loss"]:
            raise ParseError(f"unexpected header {header}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=lineno)
            try:
                year = int(row[0])
                loss = float(row[2])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            if loss <= 0:
                raise ValidationError(f"line {lineno}: loss must be positive, got {loss}")
            if year < 0:
                raise ValidationError(f"line {lineno}: trial_year must be >= 0, got {year}")
            name = row[1].strip()
            perils.append(catalog.setdefault(name, len(catalog)))
            years.append(year)
            losses.append(loss)
    num_years = max(years) + 1 if years else 1
    return EventLossTable(
        np.array(years, dtype=np.int64),
        np.array(perils, dtype=np.int64),
        np.array(losses),
        num_years,
        tuple(catalog),
    )


def save_events(table: EventLossTable, path: str | Path, format: str | None = None) -> None:
    """Write an event-loss table as CSV or binary columnar."""
    path = Path(path)
    if format is None:
        format = "binary-columnar" if path.suffix in (".bin", ".rxev") else "csv"
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial_year", "peril", "loss"])
            for t, p, x in zip(table.trial_year, table.peril_id, table.loss):
                writer.writerow([int(t), table.peril_names[p], repr(float(x))])
    elif format == "binary-columnar":
        header = json.dumps(
            {
                "num_trial_years": table.num_trial_years,
                "peril_names": list(table.peril_names),
                "num_events": table.num_events,
            }
        ).encode()
        with open(path, "wb") as fh:
            fh.write(_EVENTS_MAGIC)
            fh.write(struct.pack("<BI", _EVENTS_VERSION, len(header)))
            fh.write(header)
            fh.write(table.trial_year.astype("<i8").tobytes())
            fh.write(table.peril_id.astype("<i8").tobytes())
            fh.write(table.loss.astype("<f8").tobytes())
    else:
        raise ValidationError(f"unknown event format {format!r}")


def _load_events_binary(path: Path) -> EventLossTable:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _EVENTS_MAGIC:
            raise ParseError(f"not an event file (magic {magic!r})")
        version, header_len = struct.unpack("<BI", fh.read(5))
        if version != _EVENTS_VERSION:
            raise ParseError(f"unsupported event file version {version}")
        meta = json.loads(fh.read(header_len))
        n = meta["num_events"]
        year = np.frombuffer(fh.read(8 * n), dtype="<i8")
        peril = np.frombuffer(fh.read(8 * n), dtype="<i8")
        loss = np.frombuffer(fh.read(8 * n), dtype="<f8")
    return EventLossTable(year, peril, loss, meta["num_trial_years"], tuple(meta["peril_names"]))


def grouping_map(table: EventLossTable, groups: Mapping[str, Iterable[str]]) -> dict[int, str]:
    """Turn a {group: [peril names]} mapping into {peril_id: group}."""
    out: dict[int, str] = {}
    for group, names in groups.items():
        for name in names:
            pid = table.peril_index(name)
            if pid in out:
                raise ValidationError(f"peril {name!r} assigned to two groups")
            out[pid] = group
    return out
