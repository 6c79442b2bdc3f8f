"""Turning raw CO2/occupancy series into model-ready sliding windows.

The detector consumes 15 consecutive 1-minute mean CO2 values and
predicts the occupancy of the window's final minute. Windows never cross
a day boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta

import numpy as np

from .co2 import Co2Series
from .errors import DomainError, ParseError
from .occupancy import MINUTES_PER_DAY, OccupancyTrace

WINDOW_LENGTH = 15


@dataclass
class LabeledMinuteSeries:
    """Per-minute CO2 with binary occupancy labels and day segmentation.

    day_starts are ascending start indices of contiguous day segments;
    the first entry is 0.
    """

    co2: np.ndarray
    labels: np.ndarray
    day_starts: tuple[int, ...] = (0,)

    def __post_init__(self):
        self.co2 = np.asarray(self.co2, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.co2.shape != self.labels.shape:
            raise DomainError("co2 and labels must have equal length")
        if not set(np.unique(self.labels)) <= {0, 1}:
            raise DomainError("labels must be binary")
        if self.day_starts[0] != 0 or list(self.day_starts) != sorted(set(self.day_starts)):
            raise DomainError(f"bad day_starts: {self.day_starts}")

    def segments(self) -> list[tuple[int, int]]:
        bounds = list(self.day_starts) + [len(self.co2)]
        return [(bounds[i], bounds[i + 1]) for i in range(len(self.day_starts))]


@dataclass
class WindowSet:
    """A batch of sliding-window samples: inputs (N, L) ppm, labels (N,)."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.labels = np.asarray(self.labels, dtype=np.int8)
        if self.inputs.ndim != 2 or len(self.inputs) != len(self.labels):
            raise DomainError("inputs must be (N, L) with one label per row")

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, idx):
        return self.inputs[idx], self.labels[idx]

    @classmethod
    def concat(cls, parts: list["WindowSet"]) -> "WindowSet":
        return cls(inputs=np.concatenate([p.inputs for p in parts]),
                   labels=np.concatenate([p.labels for p in parts]))


def downsample_mean(series: Co2Series) -> np.ndarray:
    """Aggregate a sub-minute series to 1-minute means; partial tail dropped."""
    if 60 % series.step != 0:
        raise DomainError(f"step must divide 60 s, got {series.step}")
    per_minute = int(round(60 / series.step))
    n_min = len(series.values) // per_minute
    if n_min == 0:
        return np.empty(0)
    return series.values[:n_min * per_minute].reshape(n_min, per_minute).mean(axis=1)


def binarize_labels(occupant_counts) -> np.ndarray:
    """1 iff at least one occupant."""
    counts = np.asarray(occupant_counts)
    if np.any(counts < 0):
        raise DomainError("occupant counts must be >= 0")
    return (counts >= 1).astype(np.int8)


def make_windows(series: LabeledMinuteSeries, length: int = WINDOW_LENGTH,
                 stride: int = 1) -> WindowSet:
    """Sliding windows per day segment, labeled by the final minute.

    Segments shorter than `length` yield no samples.
    """
    if length < 1 or stride < 1:
        raise DomainError("length and stride must be >= 1")
    inputs, labels = [], []
    for start, end in series.segments():
        n = end - start
        count = (n - length) // stride + 1
        for j in range(max(0, count)):
            lo = start + j * stride
            inputs.append(series.co2[lo:lo + length])
            labels.append(series.labels[lo + length - 1])
    if not inputs:
        return WindowSet(inputs=np.empty((0, length)), labels=np.empty(0, dtype=np.int8))
    return WindowSet(inputs=np.stack(inputs), labels=np.array(labels, dtype=np.int8))


def split(samples: WindowSet, fraction: float = 0.2) -> tuple[WindowSet, WindowSet]:
    """Chronological split: the final `fraction` becomes the validation set."""
    if not 0 < fraction < 1:
        raise DomainError(f"fraction must be in (0, 1), got {fraction}")
    n = len(samples)
    n_val = round(n * fraction)
    n_train = n - n_val
    return (WindowSet(samples.inputs[:n_train], samples.labels[:n_train]),
            WindowSet(samples.inputs[n_train:], samples.labels[n_train:]))


def trace_minutes(series: Co2Series, traces: list[OccupancyTrace]) -> LabeledMinuteSeries:
    """Minute means of a simulated 1 s series, labeled from the day traces."""
    co2 = downsample_mean(series)
    labels = binarize_labels(np.concatenate([t.occ for t in traces]))
    n = min(len(co2), len(labels))
    starts = tuple(d * MINUTES_PER_DAY for d in range(len(traces))
                   if d * MINUTES_PER_DAY < n)
    return LabeledMinuteSeries(co2=co2[:n], labels=labels[:n], day_starts=starts)


def sensor_minutes(series: Co2Series, counts: np.ndarray) -> LabeledMinuteSeries:
    """One ingested sensor log (a single day) to labeled minutes.

    A minute counts as occupied if any sample within it has occupants.
    """
    co2 = downsample_mean(series)
    per_minute = int(round(60 / series.step))
    n_min = len(counts) // per_minute
    minute_counts = np.asarray(counts)[:n_min * per_minute] \
        .reshape(n_min, per_minute).max(axis=1)
    n = min(len(co2), n_min)
    return LabeledMinuteSeries(co2=co2[:n], labels=binarize_labels(minute_counts[:n]))


def read_sensor_csv(path) -> tuple[Co2Series, np.ndarray]:
    """Read a sensor log CSV: timestamp,co2_ppm,occupant_count.

    Timestamps are ISO-8601 at a constant sub-minute step. Malformed rows
    raise ParseError carrying the 1-based line number.
    """
    times: list[float] = []
    co2: list[float] = []
    counts: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp", "co2_ppm", "occupant_count"]:
            raise ParseError(f"unexpected sensor header: {header}", line=1)
        for line_no, row in enumerate(reader, start=2):
            try:
                stamp = datetime.fromisoformat(row[0])
                value = float(row[1])
                count = int(row[2])
            except (ValueError, IndexError) as exc:
                raise ParseError(f"line {line_no}: malformed row {row!r}",
                                 line=line_no) from exc
            times.append(stamp.timestamp())
            co2.append(value)
            counts.append(count)
    if len(times) < 2:
        raise ParseError("sensor file needs at least two samples", line=len(times) + 1)
    step = times[1] - times[0]
    if step <= 0 or step >= 60:
        raise ParseError(f"sensor step must be a positive sub-minute value, got {step}",
                         line=3)
    diffs = np.diff(times)
    bad = np.nonzero(np.abs(diffs - step) > 1e-6)[0]
    if len(bad):
        raise ParseError(f"irregular sampling step at line {int(bad[0]) + 3}",
                         line=int(bad[0]) + 3)
    series = Co2Series(start_time=times[0], step=step, values=np.array(co2))
    return series, np.array(counts, dtype=int)


def write_sensor_csv(path, series: Co2Series, counts: np.ndarray,
                     start: datetime) -> None:
    """Write a sensor-log CSV in the ingestion format."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "co2_ppm", "occupant_count"])
        for i, (value, count) in enumerate(zip(series.values, counts)):
            stamp = start + timedelta(seconds=i * series.step)
            writer.writerow([stamp.isoformat(), repr(float(value)), int(count)])


def write_samples(path, samples: WindowSet) -> None:
    """Window samples to CSV: v1,...,vL,label."""
    length = samples.inputs.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"v{i + 1}" for i in range(length)] + ["label"])
        for row, label in zip(samples.inputs, samples.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def read_samples(path) -> WindowSet:
    """Read a write_samples CSV back."""
    inputs, labels = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[-1] != "label":
            raise ParseError(f"unexpected samples header: {header}", line=1)
        width = len(header) - 1
        for line_no, row in enumerate(reader, start=2):
            try:
                inputs.append([float(v) for v in row[:width]])
                labels.append(int(row[width]))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"line {line_no}: malformed row {row!r}",
                                 line=line_no) from exc
    if not inputs:
        return WindowSet(inputs=np.empty((0, width)), labels=np.empty(0, dtype=np.int8))
    return WindowSet(inputs=np.array(inputs), labels=np.array(labels, dtype=np.int8))
