import math

import numpy as np
import pytest

from deltacpt.atomic_params import TWO_PI
from deltacpt.errors import AmbiguousPeakError, NoPeakError, SweepError
from deltacpt.spectra import (FEATURE_KIND, Spectrum, SweepSpec, evaluate_point,
                              lineshape_metrics, mw_rabi, provenance, reference_spec,
                              shift_vs_power, spectrum_baseline, sweep)
from oracles import lorentzian

KHZ, MHZ = TWO_PI * 1e3, TWO_PI * 1e6


def _spec(x, y, **kw):
    return Spectrum(np.asarray(x, float), np.asarray(y, float), **kw)


@pytest.mark.parametrize("hwhm,x0", [(1.0, 0.0), (0.37, 1.3), (2.5, -4.0)])
def test_lorentzian_fwhm(hwhm, x0):
    # wide window so the Lorentzian tails do not lift the baseline
    x = np.linspace(-400, 400, 80001)
    m = lineshape_metrics(_spec(x, lorentzian(x, x0, hwhm, amp=2.0, base=1.0)), "peak")
    assert m.fwhm == pytest.approx(2 * hwhm, rel=1e-2)
    assert abs(m.center - x0) <= np.diff(x)[0]
    assert m.contrast == pytest.approx(2.0, rel=1e-2)
    assert m.polarity == 1 and m.left < m.center < m.right


def test_dip_contrast_is_positive():
    x = np.linspace(-20, 20, 801)
    m = lineshape_metrics(_spec(x, lorentzian(x, 0.5, 1.0, amp=-0.4, base=1.0)), "dip")
    assert m.polarity == -1 and m.contrast == pytest.approx(0.4, rel=1e-2)
    assert m.fwhm == pytest.approx(2.0, rel=1e-2)


def test_zero_baseline_contrast_is_excursion():
    x = np.linspace(-50, 50, 1001)
    y = 3.0 * np.exp(-x ** 2)  # tails underflow to exactly 0
    m = lineshape_metrics(_spec(x, y), "peak")
    assert m.baseline == 0.0
    assert m.contrast == pytest.approx(3.0, rel=1e-3)
    assert m.fwhm == pytest.approx(2 * np.sqrt(np.log(2)), rel=1e-2)


def test_flat_spectrum_has_no_peak():
    with pytest.raises(NoPeakError):
        lineshape_metrics(_spec(np.arange(50), np.full(50, 0.3)))


def test_two_equal_peaks_are_ambiguous():
    x = np.linspace(-20, 20, 801)
    y = lorentzian(x, -5, 1) + lorentzian(x, 5, 1)
    with pytest.raises(AmbiguousPeakError) as info:
        lineshape_metrics(_spec(x, y), "peak")
    assert sorted(round(c) for c in info.value.candidates) == [-5, 5]


def test_small_secondary_peak_is_tolerated():
    x = np.linspace(-20, 20, 801)
    m = lineshape_metrics(_spec(x, lorentzian(x, -5, 1) + 0.3 * lorentzian(x, 5, 1)), "peak")
    assert abs(m.center + 5) < 0.05


def test_half_max_outside_range():
    x = np.linspace(-1, 1, 41)
    y = lorentzian(x, 0.9, 0.5) + 0.01 * x
    with pytest.raises(NoPeakError):
        lineshape_metrics(_spec(x, y), "peak")


def test_baseline_is_outer_median():
    y = np.r_[np.full(10, 2.0), np.zeros(80), np.full(10, 4.0)]
    assert spectrum_baseline(y) == 3.0


def test_spectrum_validation():
    with pytest.raises(ValueError):
        _spec([0, 1, 1], [0, 0, 0])
    with pytest.raises(ValueError):
        _spec([0, 1, 2], [0, np.nan, 0])


def test_sweep_spec_validation(fig3):
    s = fig3.sweep
    with pytest.raises(ValueError):
        s.with_(start=s.stop)
    with pytest.raises(ValueError):
        s.with_(points=4)
    with pytest.raises(ValueError):
        s.with_(swept_parameter="laser_power")
    with pytest.raises(ValueError):
        s.with_(backend="fast")


def test_two_photon_enforced(fig3):
    f = fig3.sweep.fields_at(MHZ)
    assert f.delta_p == MHZ and f.delta_c == -MHZ


def test_power_axis_routes_through_dbm_map(fig3):
    s = fig3.sweep.with_(swept_parameter="mw_power_dBm", start=-22.0, stop=2.0, points=5)
    assert s.fields_at(-10.0).omega_mu == pytest.approx(s.mw_rabi(-10.0))
    assert mw_rabi(None) == 0.0 and mw_rabi(-math.inf) == 0.0


def test_lambda_spectrum_is_centred(weak_probe):
    for backend in ("analytic", "full_numeric"):
        s = sweep(reference_spec(weak_probe.with_(backend=backend)))
        m = lineshape_metrics(s, FEATURE_KIND[s.observable])
        assert abs(m.center) <= s.step
        assert m.fwhm > 0 and m.contrast >= 0


def test_sweep_is_deterministic_and_thread_invariant(fig3):
    spec = fig3.sweep.with_(points=21)
    a, b = sweep(spec), sweep(spec)
    c = sweep(spec, threads=4)
    assert np.array_equal(a.values, b.values) and np.array_equal(a.values, c.values)
    assert a.provenance == c.provenance


def test_analytic_fast_path_matches_point_loop(weak_probe):
    spec = weak_probe.with_(backend="analytic", points=31)
    fast = sweep(spec)
    loop = np.array([evaluate_point(spec, v) for v in spec.axis()])
    assert np.allclose(fast.values, loop, rtol=1e-12, atol=0)


def test_sweep_error_carries_axis_value(fig3):
    spec = fig3.sweep.with_(decays=fig3.decays.__class__(), points=5,
                            fields=fig3.fields.with_(omega_p=0.0, omega_c=0.0, omega_mu=0.0))
    with pytest.raises(SweepError) as info:
        sweep(spec)
    assert info.value.axis_value == spec.start


def test_provenance_is_complete(fig3):
    p = provenance(fig3.sweep)
    for key in ("fields.omega_p", "decays.gamma_bc", "thermal.temperature", "cell.density",
                "backend", "observable", "mw_gain"):
        assert key in p
    assert isinstance(p["fields.omega_p"], (float, dict))


def test_transmission_observable_is_peak(weak_probe):
    s = sweep(weak_probe.with_(backend="analytic", observable="transmission", points=41))
    m = lineshape_metrics(s, FEATURE_KIND["transmission"])
    assert m.polarity == 1 and 0 < s.values.max() <= 1.0


def test_shift_table_mw_off_rows_are_zero(weak_probe):
    spec = weak_probe.with_(backend="analytic", points=61)
    rows = shift_vs_power([-KHZ, KHZ], [None, -math.inf], spec)
    assert len(rows) == 4
    assert all(r.valid and r.shift == 0.0 and r.omega_mu == 0.0 for r in rows)


def test_shift_table_marks_failing_cells(weak_probe):
    spec = weak_probe.with_(backend="analytic", points=21)
    # at 100 dBm the microwave destroys the dip inside the window
    rows = shift_vs_power([0.0], [-10.0, 100.0], spec)
    assert [r.valid for r in rows] == [True, False]
    assert rows[1].error.split(":")[0] in ("AmbiguousPeakError", "NoPeakError")
    assert math.isnan(rows[1].shift)


def test_shift_table_requires_detuning_axis(fig3):
    with pytest.raises(ValueError):
        shift_vs_power([0.0], [0.0], fig3.sweep.with_(swept_parameter="mw_detuning",
                                                      start=-KHZ, stop=KHZ))


def test_shift_antisymmetry_beyond_intrinsic_shift(fig3):
    # opposite signs once |delta_mu| exceeds twice the delta_mu = 0 shift
    rows = shift_vs_power([-2 * KHZ, 2 * KHZ], [0.0], fig3.sweep)
    assert all(r.valid for r in rows)
    assert rows[0].shift * rows[1].shift < 0
