import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snn_faultlab import circuit
from snn_faultlab.circuit import (
    AXON_HILLOCK_DRIVE,
    DUMMY_DRIVE,
    VOLTAGE_AMP_DRIVE,
    CalibrationDomainError,
    CircuitParams,
    DefenseConfigError,
    DefenseVariant,
    DriveParams,
    NeuronKind,
    NeverSpikesError,
    TransductionCurve,
    amplitude_to_psp_scale,
    axon_hillock_params,
    detect_vdd_anomaly,
    driver_current,
    dummy_spike_count,
    threshold_shift,
    time_to_first_spike,
    voltage_amp_params,
)

AH = NeuronKind.AxonHillock
VA = NeuronKind.VoltageAmpIF
D = DefenseVariant


def simulate_first_spike(drive: DriveParams, neuron: CircuitParams, max_periods=10**7):
    """Accumulate net charge period by period until the threshold charge is reached."""
    q_thr = neuron.v_thr * neuron.c_mem
    q_net = drive.amplitude * drive.pulse_width - neuron.leak_current * drive.period
    q = 0.0
    k = 0
    while q < q_thr:
        k += 1
        q += q_net
        if k > max_periods:
            raise RuntimeError("no spike")
    return k * drive.period + neuron.refractory_offset


def simulate_spike_count(drive: DriveParams, neuron: CircuitParams, window: float):
    """Event-driven dummy neuron: piecewise-constant drive, instantaneous reset.

    Charge keeps flowing during the pulse after a reset; a refractory offset
    blocks input for its duration.
    """
    q_thr = neuron.v_thr * neuron.c_mem
    t = 0.0
    q = 0.0
    blocked_until = 0.0
    spikes = 0
    period, width, amp = drive.period, drive.pulse_width, drive.amplitude
    n_periods = int(window / period)
    for k in range(n_periods):
        start = k * period
        seg_lo, seg_hi = max(start, blocked_until), start + width
        while seg_lo < seg_hi:
            t_cross = seg_lo + (q_thr - q) / amp
            if t_cross <= seg_hi:
                spikes += 1
                q = 0.0
                blocked_until = t_cross + neuron.refractory_offset
                seg_lo = max(t_cross, blocked_until)
            else:
                q += amp * (seg_hi - seg_lo)
                seg_lo = seg_hi
    return spikes


class TestDriverCurrent:
    @pytest.mark.parametrize("v, expected", [(0.8, 136e-9), (1.0, 200e-9), (1.2, 264e-9)])
    def test_anchors_exact(self, v, expected):
        assert driver_current(v, D.NoDefense) == expected

    def test_interpolated(self):
        assert driver_current(1.1) == pytest.approx(232e-9, rel=1e-12)

    def test_affine_slope(self):
        vs = np.linspace(0.8, 1.2, 41)
        amps = np.array([driver_current(v) for v in vs])
        assert np.allclose(np.diff(amps) / np.diff(vs), 320e-9, rtol=1e-9)

    @pytest.mark.parametrize("v", [0.8, 0.93, 1.0, 1.2])
    def test_robust_driver_constant(self, v):
        assert driver_current(v, D.RobustDriver) == 200e-9

    @pytest.mark.parametrize("v", [0.79, 1.21, 0.0])
    def test_out_of_range(self, v):
        with pytest.raises(CalibrationDomainError):
            driver_current(v)


class TestThresholdShift:
    @pytest.mark.parametrize(
        "v, kind, defense, expected",
        [
            (0.8, AH, D.NoDefense, -0.1791),
            (1.2, AH, D.NoDefense, 0.1676),
            (0.8, VA, D.NoDefense, -0.1801),
            (1.2, VA, D.NoDefense, 0.1714),
            (0.8, AH, D.SizedW32, -0.0523),
            (1.2, AH, D.SizedW32, 0.032),
            (0.8, VA, D.BandgapThreshold, 0.0),
            (1.2, AH, D.Comparator, 0.0),
            (1.0, VA, D.NoDefense, 0.0),
        ],
    )
    def test_anchors(self, v, kind, defense, expected):
        assert threshold_shift(v, kind, defense) == expected

    def test_interpolation(self):
        assert threshold_shift(0.9, AH) == pytest.approx(-0.08955, abs=1e-12)

    @pytest.mark.parametrize("kind", list(NeuronKind))
    @pytest.mark.parametrize("defense", list(DefenseVariant))
    def test_nominal_is_zero(self, kind, defense):
        try:
            assert threshold_shift(1.0, kind, defense) == 0.0
        except DefenseConfigError:
            assert defense not in (D.NoDefense, D.RobustDriver)

    @pytest.mark.parametrize(
        "kind, defense",
        [(VA, D.SizedW32), (VA, D.Comparator), (AH, D.BandgapThreshold)],
    )
    def test_incompatible_pairs(self, kind, defense):
        with pytest.raises(DefenseConfigError):
            threshold_shift(0.9, kind, defense)

    def test_robust_driver_leaves_threshold_channel(self):
        assert threshold_shift(0.8, AH, D.RobustDriver) == -0.1791

    def test_out_of_range(self):
        with pytest.raises(CalibrationDomainError):
            threshold_shift(1.25, AH)


class TestTransductionCurve:
    def test_requires_nominal_anchor(self):
        with pytest.raises(ValueError):
            TransductionCurve(((0.8, -0.1), (1.2, 0.1)))

    def test_requires_increasing(self):
        with pytest.raises(ValueError):
            TransductionCurve(((0.8, 0.0), (1.0, 0.0), (1.0, 0.1), (1.2, 0.0)))

    def test_requires_span(self):
        with pytest.raises(ValueError):
            TransductionCurve(((0.9, -0.1), (1.0, 0.0), (1.2, 0.1)))

    @given(st.floats(0.8, 1.2))
    def test_between_neighbouring_anchors(self, v):
        curve = circuit.THRESHOLD_CURVES[(AH, D.NoDefense)]
        y = curve(v)
        assert -0.1791 <= y <= 0.1676


class TestPspScale:
    @pytest.mark.parametrize("amp, expected", [(200e-9, 1.0), (136e-9, 0.68), (264e-9, 1.32)])
    def test_values(self, amp, expected):
        assert amplitude_to_psp_scale(amp) == pytest.approx(expected, rel=1e-12)

    def test_negative(self):
        with pytest.raises(ValueError):
            amplitude_to_psp_scale(-1e-9)


class TestTimeToFirstSpike:
    def test_axon_hillock_nominal(self):
        assert time_to_first_spike(AXON_HILLOCK_DRIVE, axon_hillock_params()) == pytest.approx(2.5e-6, rel=1e-12)

    def test_axon_hillock_high_amplitude(self):
        base = time_to_first_spike(AXON_HILLOCK_DRIVE, axon_hillock_params())
        fast = time_to_first_spike(AXON_HILLOCK_DRIVE.with_amplitude(264e-9), axon_hillock_params())
        assert fast == pytest.approx(76 * 25e-9, rel=1e-12)
        assert 1 - fast / base == pytest.approx(0.24, abs=1e-12)

    def test_voltage_amp_offsets(self):
        neuron = voltage_amp_params()
        assert neuron.refractory_offset == pytest.approx(2.6 * 1000 * 50e-9, rel=1e-12)
        base = time_to_first_spike(VOLTAGE_AMP_DRIVE, neuron)
        fast = time_to_first_spike(VOLTAGE_AMP_DRIVE.with_amplitude(264e-9), neuron)
        slow = time_to_first_spike(VOLTAGE_AMP_DRIVE.with_amplitude(136e-9), neuron)
        # n = 758 and 1471 whole periods
        assert 1 - fast / base == pytest.approx(1 - (758 * 50e-9 + 130e-6) / 180e-6, rel=1e-9)
        assert slow / base - 1 == pytest.approx((1471 * 50e-9 + 130e-6) / 180e-6 - 1, rel=1e-9)

    def test_doubled_amplitude_more_than_halves(self):
        neuron = axon_hillock_params()
        base = time_to_first_spike(AXON_HILLOCK_DRIVE, neuron)
        double = time_to_first_spike(AXON_HILLOCK_DRIVE.with_amplitude(400e-9), neuron)
        assert double <= base / 2

    def test_never_spikes(self):
        neuron = CircuitParams(1e-12, 0.5, leak_current=200e-9)
        with pytest.raises(NeverSpikesError):
            time_to_first_spike(AXON_HILLOCK_DRIVE, neuron)

    def test_monotone_grid(self):
        amps = np.linspace(50e-9, 400e-9, 15)
        thrs = np.linspace(0.1, 0.9, 9)
        caps = np.linspace(0.5e-12, 5e-12, 10)
        leaks = np.linspace(0, 40e-9, 9)
        drive = VOLTAGE_AMP_DRIVE
        t_amp = [time_to_first_spike(drive.with_amplitude(a), CircuitParams(1e-12, 0.5, leak_current=5e-9)) for a in amps]
        assert all(b <= a for a, b in zip(t_amp, t_amp[1:]))
        t_thr = [time_to_first_spike(drive, CircuitParams(1e-12, v)) for v in thrs]
        assert all(b >= a for a, b in zip(t_thr, t_thr[1:]))
        t_cap = [time_to_first_spike(drive, CircuitParams(c, 0.5)) for c in caps]
        assert all(b >= a for a, b in zip(t_cap, t_cap[1:]))
        t_leak = [time_to_first_spike(drive, CircuitParams(1e-12, 0.5, leak_current=l)) for l in leaks]
        assert all(b >= a for a, b in zip(t_leak, t_leak[1:]))

    def test_matches_discrete_accumulation(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            period = rng.uniform(10e-9, 500e-9)
            drive = DriveParams(rng.uniform(20e-9, 500e-9), period * rng.uniform(0.05, 1.0), period)
            q = drive.amplitude * drive.pulse_width
            neuron = CircuitParams(
                c_mem=rng.uniform(0.2e-12, 5e-12),
                v_thr=rng.uniform(0.05, 0.95),
                leak_current=rng.uniform(0, 0.8) * q / period,
                refractory_offset=rng.uniform(0, 5e-6),
            )
            assert time_to_first_spike(drive, neuron) == pytest.approx(
                simulate_first_spike(drive, neuron), rel=1e-12
            )


class TestDummyNeuron:
    def test_nominal_count(self):
        assert dummy_spike_count(1.0, 0.1, AH).count == 20000

    def test_low_vdd_drops_over_ten_percent(self):
        assert dummy_spike_count(0.8, 0.1, AH).count < 0.9 * 20000

    def test_high_vdd_rises(self):
        assert dummy_spike_count(1.2, 0.1, AH).count > 1.1 * 20000

    def test_short_window(self):
        assert dummy_spike_count(1.0, 4e-6, AH).count == 0

    @pytest.mark.parametrize("kind", list(NeuronKind))
    def test_nominal_independent_of_defense(self, kind):
        counts = set()
        for d in DefenseVariant:
            try:
                counts.add(dummy_spike_count(1.0, 0.1, kind, d).count)
            except DefenseConfigError:
                pass
        assert len(counts) == 1

    @pytest.mark.parametrize("v_dd", [0.8, 0.9, 1.0, 1.1, 1.2])
    def test_axon_hillock_matches_event_simulation(self, v_dd):
        drive, neuron = circuit.dummy_neuron_state(v_dd, AH)
        window = 2e-3
        simulated = simulate_spike_count(drive, neuron, window)
        assert abs(dummy_spike_count(v_dd, window, AH).count - simulated) <= 1

    @pytest.mark.parametrize("v_dd", [0.8, 1.0, 1.2])
    def test_voltage_amp_matches_event_simulation(self, v_dd):
        drive, neuron = circuit.dummy_neuron_state(v_dd, VA)
        window = 20e-3
        simulated = simulate_spike_count(drive, neuron, window)
        assert dummy_spike_count(v_dd, window, VA).count == pytest.approx(simulated, rel=0.01)

    def test_never_spikes_flag(self, monkeypatch):
        leaky = CircuitParams(1e-12, 0.5, leak_current=1e-6)
        monkeypatch.setattr(circuit, "neuron_params", lambda kind: leaky)
        result = dummy_spike_count(1.0, 0.1, AH)
        assert result.count == 0 and result.never_spikes


class TestDetectAnomaly:
    @pytest.mark.parametrize(
        "observed, baseline, flag",
        [(20000, 20000, False), (13513, 20000, True), (18001, 20000, False), (22000, 20000, True)],
    )
    def test_examples(self, observed, baseline, flag):
        assert detect_vdd_anomaly(observed, baseline) is flag

    def test_zero_baseline(self):
        with pytest.raises(ValueError):
            detect_vdd_anomaly(5, 0)

    @given(st.integers(0, 40000), st.integers(1, 40000))
    def test_symmetric(self, dev, baseline):
        assert detect_vdd_anomaly(baseline + dev, baseline) == detect_vdd_anomaly(baseline - dev, baseline)

    @given(st.integers(0, 20000), st.integers(0, 20000))
    def test_monotone(self, a, b):
        small, large = sorted((a, b))
        if detect_vdd_anomaly(20000 + small, 20000):
            assert detect_vdd_anomaly(20000 + large, 20000)


def test_calibration_table_lists_every_anchor():
    rows = circuit.calibration_table()
    assert len(rows) == 3 + 3 * len(circuit.THRESHOLD_CURVES)
    driver = [r for r in rows if r.channel == "driver"]
    assert [r.value for r in driver] == [136e-9, 200e-9, 264e-9]


def test_drive_constants():
    assert AXON_HILLOCK_DRIVE.period == AXON_HILLOCK_DRIVE.pulse_width == 25e-9
    assert VOLTAGE_AMP_DRIVE.period == 50e-9
    assert (DUMMY_DRIVE.pulse_width, DUMMY_DRIVE.period) == (100e-9, 200e-9)
    assert math.isclose(circuit.BANDGAP_RESIDUAL, 0.0056)
