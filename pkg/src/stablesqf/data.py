"""Dataset container, long-format CSV I/O, and a synthetic panel generator."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

STD_FLOOR = 1e-8


@dataclass
class Series:
    sid: str
    values: np.ndarray
    period: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.period < 1:
            raise ValueError("seasonal period must be at least 1")


@dataclass
class Dataset:
    series: list[Series] = field(default_factory=list)

    def __len__(self):
        return len(self.series)

    def __iter__(self):
        return iter(self.series)

    def __getitem__(self, i):
        return self.series[i]

    def by_id(self, sid: str) -> Series:
        for s in self.series:
            if s.sid == sid:
                return s
        raise KeyError(sid)


def load_dataset(path, period: int = 1) -> Dataset:
    """Read a long-format CSV with columns series_id, time_index, value.

    Time indices must be contiguous within each series and values finite;
    violations are reported with their line number.
    """
    groups: dict[str, list[float]] = {}
    last_index: dict[str, int] = {}
    order: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header] != ["series_id", "time_index", "value"]:
            raise ValueError(f"{path}: expected header 'series_id,time_index,value'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            sid = row[0]
            try:
                t = int(row[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: time_index {row[1]!r} is not an integer") from None
            try:
                v = float(row[2])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: value {row[2]!r} is not a number") from None
            if not np.isfinite(v):
                raise ValueError(f"{path}:{lineno}: non-finite value for series {sid!r}")
            if sid in last_index and t != last_index[sid] + 1:
                raise ValueError(
                    f"{path}:{lineno}: series {sid!r} jumps from time_index "
                    f"{last_index[sid]} to {t}; indices must be contiguous"
                )
            if sid not in groups:
                groups[sid] = []
                order.append(sid)
            groups[sid].append(v)
            last_index[sid] = t
    if not groups:
        raise ValueError(f"{path}: no data rows")
    return Dataset([Series(sid, np.array(groups[sid]), period) for sid in order])


def save_dataset(dataset: Dataset, path):
    """Write the long format with LF endings and full-precision dot decimals."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "time_index", "value"])
        for s in dataset:
            for t, v in enumerate(s.values):
                writer.writerow([s.sid, t, repr(float(v))])


@dataclass
class SynthSpec:
    """Knobs for the synthetic panel: level + trend + seasonality + AR noise."""

    n_series: int = 200
    length: int = 120
    period: int = 12
    level_range: tuple = (10.0, 50.0)
    trend_scale: float = 0.05
    season_scale: float = 4.0
    ar_coef: float = 0.7
    noise_scale: float = 1.5
    zero_rate: float = 0.0


def gen_synthetic(spec: SynthSpec, seed: int) -> Dataset:
    """Seeded nonnegative panel; optional zero-inflation mimics intermittency."""
    rng = np.random.default_rng(seed)
    out = []
    t = np.arange(spec.length)
    for i in range(spec.n_series):
        level = rng.uniform(*spec.level_range)
        trend = rng.normal(0.0, spec.trend_scale) * t
        amp = rng.uniform(0.3, 1.0) * spec.season_scale
        phase = rng.uniform(0, 2 * np.pi)
        season = amp * np.sin(2 * np.pi * t / spec.period + phase)
        eps = rng.normal(0.0, spec.noise_scale, size=spec.length)
        noise = np.empty(spec.length)
        acc = 0.0
        for k in range(spec.length):
            acc = spec.ar_coef * acc + eps[k]
            noise[k] = acc
        y = np.maximum(level + trend + season + noise, 0.0)
        if spec.zero_rate > 0:
            y = np.where(rng.uniform(size=spec.length) < spec.zero_rate, 0.0, y)
        out.append(Series(f"s{i:04d}", y, spec.period))
    return Dataset(out)


def series_stats(values: np.ndarray, exclude_last: int = 0):
    """Standardization mean and floored std, ignoring trailing test observations."""
    y = np.asarray(values, dtype=float)
    if exclude_last > 0:
        y = y[:-exclude_last]
    if y.size == 0:
        raise ValueError("no observations left after exclusion")
    return float(y.mean()), max(float(y.std()), STD_FLOOR)


def standardize(values: np.ndarray, loc: float, scale: float) -> np.ndarray:
    return (np.asarray(values, dtype=float) - loc) / scale


def destandardize(values: np.ndarray, loc: float, scale: float) -> np.ndarray:
    return np.asarray(values, dtype=float) * scale + loc
