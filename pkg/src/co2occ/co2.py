"""Indoor CO2 mass balance, integrated at one-second resolution.

The concentration follows dc/dt = (V_flow/V)(c_out - c) + 1e6 * S/V where
S is the volumetric CO2 source of the present occupants (m^3/s) and
V_flow the current air exchange (infiltration, times the airing
multiplier while a window is open). Explicit Euler with dt = 1 s;
occupant and window state are held constant within each minute.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, ParseError
from .occupancy import MINUTES_PER_DAY, OccupancyTrace

SECONDS_PER_DAY = MINUTES_PER_DAY * 60


@dataclass(frozen=True)
class RoomConfig:
    """Physical room parameters.

    volume            m^3
    infiltration_flow m^3/s, steady air exchange with windows closed
    outdoor_co2       ppm
    occupant_gen      l/min CO2 exhaled per present occupant
    air_density       g/l of dry air at standard conditions
    co2_density       g/l of CO2 at standard conditions (only used by the
                      mass-form conversion helpers; it cancels in the
                      volumetric balance)
    """

    volume: float = 77.5
    infiltration_flow: float = 0.0046
    outdoor_co2: float = 360.0
    occupant_gen: float = 0.24
    air_density: float = 1.2754
    co2_density: float = 1.977

    def __post_init__(self):
        for name in ("volume", "infiltration_flow", "outdoor_co2",
                     "occupant_gen", "air_density", "co2_density"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be > 0")


DEFAULT_ROOM = RoomConfig()


def perturbed_room(cfg: RoomConfig = DEFAULT_ROOM,
                   infiltration_scale: float = 1.5) -> RoomConfig:
    """Room variant with scaled infiltration, for pseudo-measured data."""
    return replace(cfg, infiltration_flow=cfg.infiltration_flow * infiltration_scale)


@dataclass
class Co2Series:
    """Evenly sampled concentration series; start_time in seconds."""

    start_time: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.step <= 0:
            raise DomainError(f"step must be > 0, got {self.step}")

    def times(self) -> np.ndarray:
        return self.start_time + self.step * np.arange(len(self.values))


def generation_volumetric(n: int, cfg: RoomConfig) -> float:
    """Volumetric CO2 source of n occupants, m^3/s (l/min -> m^3/s)."""
    if n < 0:
        raise DomainError(f"occupant count must be >= 0, got {n}")
    return n * cfg.occupant_gen / 60000.0


def generation_mass(n: int, cfg: RoomConfig) -> float:
    """Mass form of the occupant source, mg/s: n * g * rho_co2 * 1000 / 60.

    Dividing by co2_density recovers generation_volumetric; the simulator
    itself works volumetrically.
    """
    if n < 0:
        raise DomainError(f"occupant count must be >= 0, got {n}")
    return n * cfg.occupant_gen * cfg.co2_density * 1000.0 / 60.0


def mass_flow(volumetric_flow: float, cfg: RoomConfig) -> float:
    """Air mass flow in g/s for a volumetric flow in m^3/s."""
    return volumetric_flow * cfg.air_density * 1000.0


def effective_flow(window_state: int, vm: float, cfg: RoomConfig) -> float:
    """Current air exchange: infiltration, scaled by vm while airing."""
    if vm < 1:
        raise DomainError(f"ventilation multiplier must be >= 1, got {vm}")
    if window_state:
        return cfg.infiltration_flow * vm
    return cfg.infiltration_flow


def step_co2(c: float, n: int, flow: float, cfg: RoomConfig, dt: float = 1.0) -> float:
    """One explicit Euler step of the mass balance."""
    dcdt = (flow / cfg.volume) * (cfg.outdoor_co2 - c) \
        + 1e6 * generation_volumetric(n, cfg) / cfg.volume
    return c + dt * dcdt


def steady_state(n: int, flow: float, cfg: RoomConfig) -> float:
    """Analytic fixed point of the balance at constant occupancy and flow."""
    return cfg.outdoor_co2 + 1e6 * generation_volumetric(n, cfg) / flow


def simulate_co2(traces: list[OccupancyTrace], cfg: RoomConfig = DEFAULT_ROOM,
                 c0: float | None = None) -> Co2Series:
    """Continuous multi-day 1 s Euler series driven by the day traces.

    Day d+1 continues from day d's final concentration. Within each
    minute the coefficients are constant, so the 60 Euler iterates are
    evaluated in closed form (identical up to float rounding, far below
    any physical tolerance).
    """
    if not traces:
        raise DomainError("at least one day trace is required")
    if c0 is None:
        c0 = cfg.outdoor_co2
    if c0 < 0:
        raise DomainError(f"initial concentration must be >= 0, got {c0}")

    dt = 1.0
    v_inf = cfg.infiltration_flow
    source_one = 1e6 * generation_volumetric(1, cfg) / cfg.volume  # ppm/s
    k = np.arange(60.0)
    values = np.empty(len(traces) * SECONDS_PER_DAY)
    c = float(c0)
    for i, trace in enumerate(traces):
        flow = np.where(trace.window == 1,
                        v_inf * trace.vent_multiplier, v_inf)
        a = flow / cfg.volume                       # 1/s, per minute
        b = trace.occ.astype(float) * source_one    # ppm/s, per minute
        c_star = cfg.outdoor_co2 + b / a            # Euler fixed point
        r = 1.0 - a * dt
        r_pows = np.power(r[:, None], k[None, :])   # r^0 .. r^59
        r60 = r_pows[:, 59] * r

        starts = np.empty(MINUTES_PER_DAY)
        for m in range(MINUTES_PER_DAY):
            starts[m] = c
            c = c_star[m] + r60[m] * (c - c_star[m])
        day = c_star[:, None] + r_pows * (starts - c_star)[:, None]
        values[i * SECONDS_PER_DAY:(i + 1) * SECONDS_PER_DAY] = day.ravel()
    return Co2Series(start_time=0.0, step=1.0, values=values)


def minute_states(traces: list[OccupancyTrace]) -> tuple[np.ndarray, np.ndarray]:
    """Concatenated per-minute occupancy and window state over all days."""
    occ = np.concatenate([t.occ for t in traces])
    window = np.concatenate([t.window for t in traces])
    return occ, window


def write_series_csv(path, series: Co2Series, traces: list[OccupancyTrace],
                     granularity: str = "1s") -> None:
    """CSV export: timestamp_s,co2_ppm,occ,window at 1 s or 1 min steps."""
    occ, window = minute_states(traces)
    if granularity == "1s":
        times = np.arange(len(series.values), dtype=np.int64)
        co2 = series.values
        occ_out = np.repeat(occ, 60)
        win_out = np.repeat(window, 60)
    elif granularity == "1min":
        n_min = len(series.values) // 60
        times = 60 * np.arange(n_min, dtype=np.int64)
        co2 = series.values[:n_min * 60].reshape(n_min, 60).mean(axis=1)
        occ_out = occ[:n_min]
        win_out = window[:n_min]
    else:
        raise DomainError(f"granularity must be '1s' or '1min', got {granularity!r}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp_s", "co2_ppm", "occ", "window"])
        for t, v, o, w in zip(times, co2, occ_out, win_out):
            writer.writerow([int(t), repr(float(v)), int(o), int(w)])


def read_series_csv(path) -> tuple[Co2Series, np.ndarray, np.ndarray]:
    """Read a write_series_csv file back: (series, occ, window).

    The step is inferred from the timestamps and must be constant.
    """
    times, co2, occ, window = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp_s", "co2_ppm", "occ", "window"]:
            raise ParseError(f"unexpected series header: {header}", line=1)
        for line_no, row in enumerate(reader, start=2):
            try:
                times.append(int(row[0]))
                co2.append(float(row[1]))
                occ.append(int(row[2]))
                window.append(int(row[3]))
            except (ValueError, IndexError) as exc:
                raise ParseError(f"line {line_no}: malformed row {row!r}",
                                 line=line_no) from exc
    if len(times) < 2:
        raise ParseError(f"{path}: need at least 2 rows to infer the step")
    steps = np.diff(times)
    if steps.min() != steps.max() or steps[0] <= 0:
        raise ParseError(f"{path}: timestamps must advance at a constant step")
    series = Co2Series(start_time=float(times[0]), step=float(steps[0]),
                       values=np.array(co2))
    return series, np.array(occ, dtype=np.int8), np.array(window, dtype=np.int8)
