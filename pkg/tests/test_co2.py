import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from co2occ.co2 import (
    DEFAULT_ROOM,
    SECONDS_PER_DAY,
    Co2Series,
    RoomConfig,
    effective_flow,
    generation_mass,
    generation_volumetric,
    mass_flow,
    perturbed_room,
    read_series_csv,
    simulate_co2,
    steady_state,
    step_co2,
    write_series_csv,
)
from co2occ.errors import DomainError, ParseError
from co2occ.occupancy import MINUTES_PER_DAY, OccupancyTrace, simulate_days

CFG = DEFAULT_ROOM


def constant_trace(occ=0, window=0, vm=1.0):
    return OccupancyTrace(
        day_index=0,
        occ=np.full(MINUTES_PER_DAY, occ, dtype=np.int8),
        window=np.full(MINUTES_PER_DAY, window, dtype=np.int8),
        vent_multiplier=np.full(MINUTES_PER_DAY, vm),
    )


class TestRoomConfig:
    def test_defaults(self):
        assert CFG.volume == 77.5
        assert CFG.infiltration_flow == 0.0046
        assert CFG.outdoor_co2 == 360.0
        assert CFG.occupant_gen == 0.24

    @pytest.mark.parametrize("field", ["volume", "infiltration_flow",
                                       "outdoor_co2", "occupant_gen"])
    def test_positive_parameters_required(self, field):
        with pytest.raises(DomainError):
            RoomConfig(**{field: 0.0})

    def test_perturbed_room_scales_infiltration(self):
        assert perturbed_room().infiltration_flow == pytest.approx(0.0069)
        assert perturbed_room().volume == CFG.volume


class TestSources:
    def test_volumetric_values(self):
        assert generation_volumetric(0, CFG) == 0.0
        assert generation_volumetric(1, CFG) == pytest.approx(4.0e-6, rel=1e-12)

    def test_mass_form_value(self):
        assert generation_mass(1, CFG) == pytest.approx(7.908, rel=1e-12)

    def test_mass_and_volumetric_forms_agree(self):
        # mg/s over density in g/l gives ml/s; another 1e3 reaches l/s, 1e6 m^3/s
        for n in range(4):
            recovered = generation_mass(n, CFG) / CFG.co2_density * 1e-6
            assert recovered == pytest.approx(generation_volumetric(n, CFG), rel=1e-12)

    def test_negative_count_rejected(self):
        with pytest.raises(DomainError):
            generation_volumetric(-1, CFG)

    def test_mass_flow(self):
        assert mass_flow(0.0046, CFG) == pytest.approx(0.0046 * 1.2754 * 1000)


class TestEffectiveFlow:
    def test_closed_ignores_multiplier(self):
        assert effective_flow(0, 50.0, CFG) == 0.0046

    def test_open_scales_infiltration(self):
        assert effective_flow(1, 10.0, CFG) == pytest.approx(0.046)
        assert effective_flow(1, 100.0, CFG) == pytest.approx(0.46)

    def test_multiplier_below_one_rejected(self):
        with pytest.raises(DomainError):
            effective_flow(1, 0.5, CFG)


class TestStep:
    def test_empty_room_decay_example(self):
        out = step_co2(1000.0, 0, 0.0046, CFG)
        assert out == pytest.approx(999.962012, abs=1e-6)

    def test_occupied_from_outdoor_example(self):
        out = step_co2(360.0, 1, 0.0046, CFG)
        assert out == pytest.approx(360.051613, abs=1e-6)

    def test_outdoor_level_is_exact_fixed_point_when_empty(self):
        assert step_co2(360.0, 0, 0.0046, CFG) == 360.0

    def test_steady_state_is_fixed_point(self):
        c = steady_state(1, 0.0046, CFG)
        assert step_co2(c, 1, 0.0046, CFG) == pytest.approx(c, abs=1e-9)

    def test_decay_direction(self):
        assert step_co2(1000.0, 0, 0.0046, CFG) < 1000.0
        assert step_co2(360.0, 1, 0.0046, CFG) > 360.0


class TestSteadyState:
    def test_empty_room_sits_at_outdoor(self):
        assert steady_state(0, 0.0046, CFG) == 360.0

    def test_closed_window_example(self):
        assert steady_state(1, 0.0046, CFG) == pytest.approx(1229.565, abs=0.01)

    def test_minimum_airing_example(self):
        assert steady_state(1, 0.046, CFG) == pytest.approx(446.96, abs=0.01)


class TestSimulate:
    def test_empty_trace_list_rejected(self):
        with pytest.raises(DomainError):
            simulate_co2([])

    def test_negative_initial_rejected(self):
        with pytest.raises(DomainError):
            simulate_co2([constant_trace()], c0=-1.0)

    def test_sampling_grid(self):
        series = simulate_co2([constant_trace()])
        assert series.step == 1.0
        assert series.start_time == 0.0
        assert len(series.values) == SECONDS_PER_DAY

    def test_empty_room_stays_at_outdoor_exactly(self):
        series = simulate_co2([constant_trace()])
        assert np.all(series.values == 360.0)

    def test_pure_decay_matches_exponential(self):
        series = simulate_co2([constant_trace()], c0=1000.0)
        lam = CFG.infiltration_flow / CFG.volume
        t = np.arange(8 * 3600, dtype=float)
        exact = 360.0 + (1000.0 - 360.0) * np.exp(-lam * t)
        assert np.max(np.abs(series.values[:len(t)] - exact)) < 0.5

    def test_closed_form_equals_literal_euler_stepping(self):
        trace = simulate_days(1, seed=0)[0]
        series = simulate_co2([trace])
        # cover the morning ramp-up where occupancy and airing both vary
        lo = 7 * 3600
        manual = np.empty(3 * 3600)
        c = series.values[lo - 1]
        for i in range(lo, lo + len(manual)):
            m = (i - 1) // 60  # the step out of sample i-1 uses that minute's state
            flow = effective_flow(int(trace.window[m]),
                                  float(trace.vent_multiplier[m]), CFG)
            manual[i - lo] = c = step_co2(c, int(trace.occ[m]), flow, CFG)
        assert np.max(np.abs(series.values[lo:lo + len(manual)] - manual)) < 1e-9

    def test_day_seam_continues_the_state(self):
        traces = simulate_days(2, seed=3)
        series = simulate_co2(traces)
        m = MINUTES_PER_DAY - 1
        flow = effective_flow(int(traces[0].window[m]),
                              float(traces[0].vent_multiplier[m]), CFG)
        expected = step_co2(series.values[SECONDS_PER_DAY - 1],
                            int(traces[0].occ[m]), flow, CFG)
        assert series.values[SECONDS_PER_DAY] == pytest.approx(expected, abs=1e-9)

    def test_prefix_day_is_unchanged_by_later_days(self):
        traces = simulate_days(2, seed=3)
        both = simulate_co2(traces)
        first = simulate_co2(traces[:1])
        assert np.array_equal(both.values[:SECONDS_PER_DAY], first.values)

    def test_bounded_by_physical_envelope(self):
        trace = simulate_days(1, seed=5)[0]
        series = simulate_co2([trace])
        assert series.values.min() >= 360.0
        assert series.values.max() <= steady_state(1, CFG.infiltration_flow, CFG)

    def test_relaxation_toward_outdoor_is_monotone(self):
        series = simulate_co2([constant_trace()], c0=1500.0)
        gaps = np.abs(series.values - 360.0)
        assert np.all(np.diff(gaps) <= 1e-12)

    @settings(max_examples=10, deadline=None)
    @given(seed=st.integers(0, 2**31 - 1))
    def test_any_day_stays_in_envelope(self, seed):
        trace = simulate_days(1, seed=seed)[0]
        series = simulate_co2([trace])
        assert series.values.min() >= 360.0 - 1e-9
        assert series.values.max() <= steady_state(1, CFG.infiltration_flow, CFG) + 1e-9


class TestSeriesCsv:
    def test_roundtrip_full_rate(self, tmp_path):
        traces = simulate_days(1, seed=2)
        series = simulate_co2(traces)
        path = tmp_path / "series.csv"
        write_series_csv(path, series, traces, granularity="1s")
        back, occ, window = read_series_csv(path)
        assert back.step == 1.0
        assert np.array_equal(back.values, series.values)
        assert np.array_equal(occ, np.repeat(traces[0].occ, 60))
        assert np.array_equal(window, np.repeat(traces[0].window, 60))

    def test_minute_rows_hold_minute_means(self, tmp_path):
        traces = simulate_days(1, seed=2)
        series = simulate_co2(traces)
        path = tmp_path / "series.csv"
        write_series_csv(path, series, traces, granularity="1min")
        back, occ, window = read_series_csv(path)
        assert back.step == 60.0
        assert len(back.values) == MINUTES_PER_DAY
        means = series.values.reshape(-1, 60).mean(axis=1)
        assert np.max(np.abs(back.values - means)) < 1e-9
        assert np.array_equal(occ, traces[0].occ)

    def test_unknown_granularity_rejected(self, tmp_path):
        traces = simulate_days(1, seed=2)
        series = simulate_co2(traces)
        with pytest.raises(DomainError):
            write_series_csv(tmp_path / "x.csv", series, traces, granularity="2h")

    def test_malformed_row_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        rows = ["timestamp_s,co2_ppm,occ,window"] + \
            [f"{i},400.0,0,0" for i in range(6)]
        rows[4] = "3,not-a-number,0,0"
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(ParseError) as err:
            read_series_csv(path)
        assert err.value.line == 5

    def test_wrong_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ParseError) as err:
            read_series_csv(path)
        assert err.value.line == 1

    def test_irregular_step_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("timestamp_s,co2_ppm,occ,window\n"
                        "0,400,0,0\n1,401,0,0\n5,402,0,0\n")
        with pytest.raises(ParseError):
            read_series_csv(path)


def test_series_requires_positive_step():
    with pytest.raises(DomainError):
        Co2Series(start_time=0.0, step=0.0, values=np.zeros(3))


def test_series_times():
    series = Co2Series(start_time=10.0, step=2.0, values=np.zeros(3))
    assert series.times().tolist() == [10.0, 12.0, 14.0]
