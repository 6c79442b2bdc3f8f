"""Stochastic single-occupant day simulation.

Each simulated day combines a jittered event schedule (arrival, two short
breaks, lunch, departure) with two-state Markov chains: one for short
random absences while at work, one for the window (closed/open) state.
All times are minutes since midnight; a day is 1440 minutes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError

MINUTES_PER_DAY = 1440


@dataclass(frozen=True)
class ScheduleSpec:
    """Nominal event times (minutes since midnight) and the uniform jitter."""

    arrival: int = 480
    break1_start: int = 600
    lunch_start: int = 720
    break2_start: int = 900
    departure: int = 1080
    lunch_duration: int = 60
    break_duration: int = 15
    max_shift: int = 15


DEFAULT_SCHEDULE = ScheduleSpec()


@dataclass(frozen=True)
class DaySchedule:
    """One day's realized event times, with fixed lunch/break durations."""

    arrival: int
    break1_start: int
    lunch_start: int
    break2_start: int
    departure: int
    lunch_duration: int = 60
    break_duration: int = 15

    def __post_init__(self):
        starts = (self.arrival, self.break1_start, self.lunch_start,
                  self.break2_start, self.departure)
        if list(starts) != sorted(starts):
            raise DomainError(f"schedule events out of order: {starts}")
        for start, end in self.presence_spans():
            if end <= start:
                raise DomainError("absence intervals overlap or touch")

    def presence_spans(self) -> list[tuple[int, int]]:
        """Half-open [start, end) spans of scheduled presence."""
        return [
            (self.arrival, self.break1_start),
            (self.break1_start + self.break_duration, self.lunch_start),
            (self.lunch_start + self.lunch_duration, self.break2_start),
            (self.break2_start + self.break_duration, self.departure),
        ]


@dataclass(frozen=True)
class SojournParams:
    """Expected dwell times (minutes) for a two-state chain.

    s0 is the expected stay in state 0 (absent / closed), s1 in state 1
    (present / open).
    """

    s0: float
    s1: float
    role: str = "presence"

    def __post_init__(self):
        if self.s0 < 1 or self.s1 < 1:
            raise DomainError(
                f"sojourn times must be >= 1 minute, got s0={self.s0}, s1={self.s1}")


@dataclass(frozen=True)
class TransitionMatrix:
    """Per-minute transition probabilities of a two-state chain."""

    p00: float
    p01: float
    p10: float
    p11: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.p00, self.p01], [self.p10, self.p11]])


def transition_matrix(params: SojournParams) -> TransitionMatrix:
    """Build the chain matrix with leave probabilities 1/s0 and 1/s1."""
    p01 = 1.0 / params.s0
    p10 = 1.0 / params.s1
    return TransitionMatrix(p00=1.0 - p01, p01=p01, p10=p10, p11=1.0 - p10)


@dataclass(frozen=True)
class SimBounds:
    """Per-day sampling ranges for sojourn times and the airing multiplier."""

    presence_s0: tuple[float, float] = (10.0, 60.0)
    presence_s1: tuple[float, float] = (30.0, 180.0)
    window_s0: tuple[float, float] = (60.0, 480.0)
    window_s1: tuple[float, float] = (5.0, 30.0)
    vm_range: tuple[float, float] = (10.0, 100.0)


DEFAULT_BOUNDS = SimBounds()


def perturbed_bounds(bounds: SimBounds = DEFAULT_BOUNDS,
                     sojourn_scale: float = 1.2,
                     vm_range: tuple[float, float] = (5.0, 60.0)) -> SimBounds:
    """Shifted behavior bounds for generating a held-out pseudo-measured room."""
    scale = float(sojourn_scale)
    return replace(
        bounds,
        presence_s0=(bounds.presence_s0[0] * scale, bounds.presence_s0[1] * scale),
        presence_s1=(bounds.presence_s1[0] * scale, bounds.presence_s1[1] * scale),
        window_s0=(bounds.window_s0[0] * scale, bounds.window_s0[1] * scale),
        window_s1=(bounds.window_s1[0] * scale, bounds.window_s1[1] * scale),
        vm_range=vm_range,
    )


@dataclass
class OccupancyTrace:
    """Per-minute presence, window state and ventilation multiplier for one day."""

    day_index: int
    occ: np.ndarray            # (1440,) int8 in {0, 1}
    window: np.ndarray         # (1440,) int8 in {0, 1}
    vent_multiplier: np.ndarray  # (1440,) float, 1 while closed

    def check(self, vm_range: tuple[float, float] = (10.0, 100.0)) -> None:
        """Raise AssertionError if any trace invariant is violated."""
        assert self.occ.shape == self.window.shape == self.vent_multiplier.shape \
            == (MINUTES_PER_DAY,)
        assert set(np.unique(self.occ)) <= {0, 1}
        assert set(np.unique(self.window)) <= {0, 1}
        closed = self.window == 0
        assert np.all(self.vent_multiplier[closed] == 1.0)
        open_vm = self.vent_multiplier[~closed]
        assert np.all((open_vm >= vm_range[0]) & (open_vm <= vm_range[1]))


def sample_day_schedule(rng: np.random.Generator,
                        spec: ScheduleSpec = DEFAULT_SCHEDULE) -> DaySchedule:
    """Jitter each nominal event by an independent integer shift in +-max_shift."""
    s = spec.max_shift

    def jitter(nominal: int) -> int:
        return int(nominal + rng.integers(-s, s + 1))

    return DaySchedule(
        arrival=jitter(spec.arrival),
        break1_start=jitter(spec.break1_start),
        lunch_start=jitter(spec.lunch_start),
        break2_start=jitter(spec.break2_start),
        departure=jitter(spec.departure),
        lunch_duration=spec.lunch_duration,
        break_duration=spec.break_duration,
    )


def simulate_chain(n_steps: int, matrix: TransitionMatrix, init_state: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Run the two-state chain for n_steps minutes starting from init_state.

    Exactly n_steps uniform draws are consumed; state[0] is the state one
    step after init_state.
    """
    u = rng.random(n_steps)
    out = np.empty(n_steps, dtype=np.int8)
    state = int(init_state)
    p01, p10 = matrix.p01, matrix.p10
    for i in range(n_steps):
        if state == 0:
            if u[i] < p01:
                state = 1
        else:
            if u[i] < p10:
                state = 0
        out[i] = state
    return out


def simulate_presence(schedule: DaySchedule, params: SojournParams,
                      rng: np.random.Generator) -> np.ndarray:
    """Per-minute presence for one day.

    Inside each scheduled presence span the chain starts present (the
    occupant just walked in) and then evolves minute by minute; outside
    the spans presence is 0.
    """
    tm = transition_matrix(params)
    occ = np.zeros(MINUTES_PER_DAY, dtype=np.int8)
    for start, end in schedule.presence_spans():
        occ[start] = 1
        if end - start > 1:
            occ[start + 1:end] = simulate_chain(end - start - 1, tm, 1, rng)
    return occ


def simulate_windows(schedule: DaySchedule, params: SojournParams,
                     rng: np.random.Generator,
                     vm_range: tuple[float, float] = (10.0, 100.0),
                     ) -> tuple[np.ndarray, np.ndarray]:
    """Per-minute window state and ventilation multiplier for one day.

    The window chain starts closed at arrival and runs uninterrupted until
    departure (state persists through lunch, breaks and random absences).
    Each closed->open transition draws a fresh multiplier uniformly from
    vm_range, held until the window closes again; the multiplier is 1
    whenever the window is closed.
    """
    window = np.zeros(MINUTES_PER_DAY, dtype=np.int8)
    vm = np.ones(MINUTES_PER_DAY, dtype=float)
    start, end = schedule.arrival, schedule.departure
    n = end - start - 1
    if n > 0:
        tm = transition_matrix(params)
        window[start + 1:end] = simulate_chain(n, tm, 0, rng)
    lo, hi = vm_range
    prev = 0
    current_vm = 1.0
    for t in range(start, end):
        s = window[t]
        if s == 1 and prev == 0:
            current_vm = lo + (hi - lo) * rng.random()
        if s == 1:
            vm[t] = current_vm
        prev = s
    return window, vm


def simulate_day(day_index: int, bounds: SimBounds, rng: np.random.Generator,
                 spec: ScheduleSpec = DEFAULT_SCHEDULE) -> OccupancyTrace:
    """One day: fresh schedule, fresh per-chain sojourn draws, both chains."""
    schedule = sample_day_schedule(rng, spec)
    p_lo0, p_hi0 = bounds.presence_s0
    p_lo1, p_hi1 = bounds.presence_s1
    w_lo0, w_hi0 = bounds.window_s0
    w_lo1, w_hi1 = bounds.window_s1
    presence = SojournParams(s0=p_lo0 + (p_hi0 - p_lo0) * rng.random(),
                             s1=p_lo1 + (p_hi1 - p_lo1) * rng.random(),
                             role="presence")
    window_params = SojournParams(s0=w_lo0 + (w_hi0 - w_lo0) * rng.random(),
                                  s1=w_lo1 + (w_hi1 - w_lo1) * rng.random(),
                                  role="window")
    occ = simulate_presence(schedule, presence, rng)
    window, vm = simulate_windows(schedule, window_params, rng, bounds.vm_range)
    return OccupancyTrace(day_index=day_index, occ=occ, window=window,
                          vent_multiplier=vm)


def day_rng(base_seed: int, day_index: int) -> np.random.Generator:
    """Independent per-day stream; days can be simulated in any order."""
    return np.random.default_rng(int(base_seed) ^ int(day_index))


def simulate_days(n_days: int, bounds: SimBounds = DEFAULT_BOUNDS,
                  seed: int = 0,
                  spec: ScheduleSpec = DEFAULT_SCHEDULE) -> list[OccupancyTrace]:
    """Simulate n_days independent days from per-day derived random streams."""
    if n_days < 1:
        raise DomainError(f"n_days must be >= 1, got {n_days}")
    return [simulate_day(d, bounds, day_rng(seed, d), spec)
            for d in range(n_days)]


def presence_rate(traces: list[OccupancyTrace]) -> float:
    """Occupied minutes divided by total minutes over full 24 h days."""
    occupied = sum(int(t.occ.sum()) for t in traces)
    return occupied / (len(traces) * MINUTES_PER_DAY)


def write_traces(path, traces: list[OccupancyTrace]) -> None:
    """CSV export, one row per minute: day,minute,occ,window,vm."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["day", "minute", "occ", "window", "vm"])
        for trace in traces:
            for minute in range(MINUTES_PER_DAY):
                writer.writerow([
                    trace.day_index, minute,
                    int(trace.occ[minute]), int(trace.window[minute]),
                    repr(float(trace.vent_multiplier[minute])),
                ])


def read_traces(path) -> list[OccupancyTrace]:
    """Read a CSV written by write_traces back into per-day traces."""
    by_day: dict[int, OccupancyTrace] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["day", "minute", "occ", "window", "vm"]:
            raise DomainError(f"unexpected trace header: {header}")
        for row in reader:
            day, minute = int(row[0]), int(row[1])
            if day not in by_day:
                by_day[day] = OccupancyTrace(
                    day_index=day,
                    occ=np.zeros(MINUTES_PER_DAY, dtype=np.int8),
                    window=np.zeros(MINUTES_PER_DAY, dtype=np.int8),
                    vent_multiplier=np.ones(MINUTES_PER_DAY),
                )
            trace = by_day[day]
            trace.occ[minute] = int(row[2])
            trace.window[minute] = int(row[3])
            trace.vent_multiplier[minute] = float(row[4])
    return [by_day[d] for d in sorted(by_day)]
