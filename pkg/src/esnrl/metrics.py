"""Run records and output writers.

Every experiment produces :class:`EpisodeLog` objects (one per episode,
per-step arrays inside) and, for sweeps, a :class:`SweepSummary`. CSV
outputs carry a ``#schema=<n>`` comment as their first line so downstream
plotting can detect column-set changes; floats are written with ``repr`` so
identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SCHEMA_VERSION = 1


@dataclass
class EpisodeLog:
    """Per-step arrays for one episode plus its scalar summary.

    ``error_norms`` and ``dw_norms`` are None for methods without an
    adaptation module. Latencies are wall-clock per-step times and are kept
    out of deterministic CSV outputs.
    """

    seed: int
    episode: int
    sweep_value: float | None = None
    rewards: list[float] = field(default_factory=list)
    error_norms: list[float] | None = None
    dw_norms: list[float] | None = None
    latencies_us: list[float] = field(default_factory=list)

    @property
    def length(self) -> int:
        return len(self.rewards)

    @property
    def episode_return(self) -> float:
        return float(sum(self.rewards))

    def validate(self) -> None:
        n = len(self.rewards)
        for name in ("error_norms", "dw_norms"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != n:
                raise ValueError(f"{name} has {len(arr)} entries for {n} steps")
        if len(self.latencies_us) not in (0, n):
            raise ValueError(f"latencies_us has {len(self.latencies_us)} entries for {n} steps")
        if any(lat <= 0.0 for lat in self.latencies_us):
            raise ValueError("latencies must be positive")
        if not all(np.isfinite(r) for r in self.rewards):
            raise ValueError("non-finite reward in episode log")


@dataclass
class SweepRow:
    method: str
    sweep_value: float
    mean_return: float
    std_return: float
    seed_returns: dict[int, float]


@dataclass
class SweepSummary:
    rows: list[SweepRow]

    def row(self, method: str, sweep_value: float) -> SweepRow:
        for r in self.rows:
            if r.method == method and r.sweep_value == sweep_value:
                return r
        raise KeyError(f"no summary row for ({method}, {sweep_value})")


def summarize_sweep(long_rows: Sequence[tuple], method: str) -> SweepSummary:
    """Aggregate (method, sweep_value, seed, episode, return) rows.

    Per-seed returns are averaged over episodes first; the reported mean and
    std (population) are then taken across seeds, so each independent trial
    counts once regardless of episode count.
    """
    by_value: dict[float, dict[int, list[float]]] = {}
    for m, value, seed, _episode, ret in long_rows:
        if m != method:
            continue
        by_value.setdefault(value, {}).setdefault(seed, []).append(ret)
    rows = []
    for value in sorted(by_value):
        seed_means = {seed: float(np.mean(rets)) for seed, rets in sorted(by_value[value].items())}
        means = np.array(list(seed_means.values()))
        rows.append(
            SweepRow(
                method=method,
                sweep_value=value,
                mean_return=float(means.mean()),
                std_return=float(means.std()),
                seed_returns=seed_means,
            )
        )
    return SweepSummary(rows=rows)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write a schema-versioned CSV with deterministic float formatting."""
    with open(path, "w", newline="") as fh:
        fh.write(f"#schema={SCHEMA_VERSION}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    """Read back a schema-versioned CSV; returns (header, rows of strings)."""
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("#schema="):
            raise ValueError(f"{path} is missing the #schema header line")
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]
