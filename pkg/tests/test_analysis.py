import math

import numpy as np
import pytest

from tpisim.analysis import (FitResult, ScanRow, fit_beat, fit_cross_fringe,
                             fit_envelope, fit_oscillation,
                             fit_self_oscillation, fit_spi_coarse, normalize,
                             visibility_product_check)
from tpisim.errors import (AliasingError, ConfigError, NoBaselineError,
                           SpanError)

SIGMA12 = 107.24948888911979


def rows_from(dx, counts, duration=60.0):
    return [ScanRow(float(x), float(c), 0.0, 0.0, 0.0, 0.0, duration)
            for x, c in zip(dx, counts)]


# --- normalize -----------------------------------------------------------------

def test_normalize_flat_channel():
    dx = np.linspace(-800, 800, 33)
    n = normalize(rows_from(dx, np.full(dx.size, 1234.5)), "singles1", 100.0)
    assert np.allclose(n.values, 1.0, atol=1e-12)


def test_normalize_scale_invariance():
    dx = np.linspace(-800, 800, 33)
    counts = 1000.0 + 37.0 * np.cos(dx / 11.0)
    a = normalize(rows_from(dx, counts), "singles1", 100.0)
    b = normalize(rows_from(dx, 7.25 * counts), "singles1", 100.0)
    assert np.allclose(a.values, b.values, atol=1e-12)


def test_normalize_peak_value():
    # phase-randomized self peak at V=0.90 normalizes to 1.405 at center
    cfg_peak = 1.0 + 0.5 * 0.9**2
    dx = np.concatenate([np.linspace(-800, 800, 81), [0.0]])
    counts = 1000.0 * (1.0 + 0.5 * 0.9**2 * np.exp(-dx**2 / 171.69**2))
    rows = [ScanRow(float(x), 0.0, 0.0, 0.0, float(c), 0.0, 60.0)
            for x, c in zip(dx, counts)]
    n = normalize(rows, "self1", SIGMA12)
    assert n.values[np.argmin(np.abs(n.delta_x_um))] == \
        pytest.approx(cfg_peak, rel=1e-6)


def test_normalize_requires_baseline():
    dx = np.linspace(-100, 100, 21)
    with pytest.raises(NoBaselineError):
        normalize(rows_from(dx, np.ones(dx.size)), "singles1", 100.0)


def test_normalize_unknown_channel():
    with pytest.raises(ConfigError):
        normalize(rows_from([0.0], [1.0]), "nope", 100.0)


def test_normalize_poisson_sigma():
    dx = np.linspace(-800, 800, 17)
    n = normalize(rows_from(dx, np.full(dx.size, 900.0), duration=3.0),
                  "singles1", 100.0, with_poisson_sigma=True)
    assert n.sigma == pytest.approx(np.sqrt(900.0) / 3.0 / 300.0, rel=1e-12)


# --- oscillation fit -------------------------------------------------------------

def osc_values(x, b, v, p_um, phi=0.0):
    return b * (1.0 + v * np.cos(2 * np.pi * x / p_um + phi))


def test_fit_oscillation_roundtrip_exact():
    x = np.arange(-1.0, 1.0 + 1e-12, 0.04)
    y = osc_values(x, 1.0, 0.98, 0.81063, math.pi)
    fit = fit_oscillation(x, y, period_hint_um=0.81063)
    assert fit.visibility == pytest.approx(0.98, abs=1e-9)
    assert fit.period_um == pytest.approx(0.81063, rel=1e-9)
    assert fit.visibility_stderr < 1e-6


def test_fit_oscillation_poisson_noise_within_tolerance(rng):
    x = np.arange(-1.0, 1.0 + 1e-12, 0.04)
    truth = osc_values(x, 1.0, 0.90, 0.79844)
    base = 3e5 * 60.0
    for _ in range(5):
        counts = rng.poisson(truth * base)
        y = counts / base
        sig = np.sqrt(np.clip(counts, 1, None)) / base
        fit = fit_oscillation(x, y, period_hint_um=0.79844, sigma=sig)
        assert abs(fit.visibility - 0.90) <= 0.02


def test_fit_oscillation_flat_consistent_with_zero(rng):
    x = np.arange(-1.0, 1.0 + 1e-12, 0.04)
    base = 1e6
    counts = rng.poisson(np.full(x.size, base))
    y = counts / base
    fit = fit_oscillation(x, y, period_hint_um=0.81,
                          sigma=np.full(x.size, math.sqrt(base) / base))
    assert fit.visibility <= 3.0 * fit.visibility_stderr + 1e-4


def test_fit_oscillation_insufficient_sampling():
    x = np.arange(-1.0, 1.0, 0.3)
    y = osc_values(x, 1.0, 0.5, 0.81)
    with pytest.raises(AliasingError):
        fit_oscillation(x, y, period_hint_um=0.81)


def test_fit_oscillation_fft_period_recovery():
    x = np.arange(-30.0, 30.0, 0.25)
    y = osc_values(x, 2.0, 0.4, 6.5)
    fit = fit_oscillation(x, y)
    assert fit.period_um == pytest.approx(6.5, rel=1e-6)
    assert fit.baseline == pytest.approx(2.0, rel=1e-9)


# --- envelope fit ----------------------------------------------------------------

def test_fit_envelope_spi_roundtrip():
    x = np.linspace(-720, 720, 241)
    y = 1.0 + 0.98 * np.exp(-x**2 / (2 * 171.69**2))
    fit = fit_envelope(x, y, kind="spi")
    assert fit.sigma_um == pytest.approx(171.69, rel=1e-3)
    assert fit.amplitude == pytest.approx(0.98, rel=1e-6)


def test_fit_envelope_spi_dip():
    x = np.linspace(-720, 720, 241)
    y = 1.0 - 0.9 * np.exp(-x**2 / (2 * 120.0**2))
    fit = fit_envelope(x, y, kind="spi")
    assert fit.amplitude == pytest.approx(-0.9, rel=1e-6)
    assert fit.visibility == pytest.approx(0.9, rel=1e-6)


def test_fit_envelope_self_peak_roundtrip():
    x = np.linspace(-600, 600, 401)
    v = 0.83
    y = 1.0 + 0.5 * v * v * np.exp(-x**2 / 84.53**2)
    fit = fit_envelope(x, y, kind="self_peak")
    assert fit.sigma_um == pytest.approx(84.53, rel=1e-3)
    assert fit.amplitude == pytest.approx(0.5 * v * v, rel=1e-6)


def test_fit_envelope_flat_amplitude_zero():
    x = np.linspace(-720, 720, 101)
    fit = fit_envelope(x, np.ones(x.size), kind="spi")
    assert fit.amplitude == 0.0


def test_fit_envelope_span_too_narrow():
    x = np.linspace(-100, 100, 101)
    y = 1.0 + 0.9 * np.exp(-x**2 / (2 * 171.69**2))
    with pytest.raises(SpanError):
        fit_envelope(x, y, kind="spi")


# --- beat fit ---------------------------------------------------------------------

BEAT = 53.09593250205113


def beat_values(x, a=0.441, period=BEAT, s12=SIGMA12, psi=0.0):
    return 1.0 - a * np.cos(2 * np.pi * x / period + psi) * \
        np.exp(-x**2 / s12**2)


def test_fit_beat_roundtrip():
    x = np.arange(-720.0, 720.0 + 1e-9, 2.0)
    fit = fit_beat(x, beat_values(x), period_hint_um=BEAT,
                   sigma12_hint_um=SIGMA12)
    assert fit.period_um == pytest.approx(BEAT, rel=2e-3)
    assert fit.amplitude == pytest.approx(0.441, rel=1e-6)
    assert fit.sigma_um == pytest.approx(SIGMA12, rel=1e-3)


def test_fit_beat_recovers_jitter_phase_shift():
    x = np.arange(-720.0, 720.0 + 1e-9, 2.0)
    fit = fit_beat(x, beat_values(x, psi=0.48), period_hint_um=BEAT,
                   sigma12_hint_um=SIGMA12)
    assert fit.params["phase_rad"][0] == pytest.approx(0.48, abs=1e-6)
    assert fit.amplitude == pytest.approx(0.441, rel=1e-6)


def test_fit_beat_poisson_noise_period_stderr(rng):
    x = np.arange(-720.0, 720.0 + 1e-9, 2.0)
    base = 900.0 * 60.0
    counts = rng.poisson(beat_values(x) * base)
    y = counts / base
    sig = np.sqrt(np.clip(counts, 1, None)) / base
    fit = fit_beat(x, y, period_hint_um=BEAT, sigma12_hint_um=SIGMA12,
                   sigma=sig)
    assert fit.period_stderr <= 0.2
    assert abs(fit.period_um - BEAT) <= 4 * fit.period_stderr


def test_fit_beat_period_consistent_with_delta_omega(rng):
    # fitted beat period times the configured angular-frequency difference
    # recovers 2*pi*c within the fit uncertainty
    from tpisim.spectral import C_VACUUM_M_S
    x = np.arange(-720.0, 720.0 + 1e-9, 2.0)
    base = 900.0 * 60.0
    counts = rng.poisson(beat_values(x) * base)
    sig = np.sqrt(np.clip(counts, 1, None)) / base
    fit = fit_beat(x, counts / base, period_hint_um=BEAT,
                   sigma12_hint_um=SIGMA12, sigma=sig)
    delta_omega = 3.547638168396584e13  # 2*pi*c / configured beat period
    product = fit.period_um * 1e-6 * delta_omega
    tolerance = 4 * fit.period_stderr * 1e-6 * delta_omega
    assert abs(product - 2 * math.pi * C_VACUUM_M_S) <= tolerance


def test_fit_beat_flat_raises():
    x = np.arange(-720.0, 720.0 + 1e-9, 2.0)
    with pytest.raises(AliasingError):
        fit_beat(x, np.ones(x.size), period_hint_um=BEAT)


def test_fit_beat_undersampled_raises():
    x = np.arange(-720.0, 720.0 + 1e-9, 16.0)  # 3.3 samples per period
    with pytest.raises(AliasingError):
        fit_beat(x, beat_values(x), period_hint_um=BEAT)


# --- coarse singles fit ---------------------------------------------------------

def test_fit_spi_coarse_roundtrip():
    x = np.arange(-720.0, 720.0 + 1e-9, 2.0)
    lam = 0.81063
    y = 1.0 - 0.98 * np.cos(2 * np.pi * x / lam) * \
        np.exp(-x**2 / (2 * 171.69**2))
    fit = fit_spi_coarse(x, y, 810.63, 171.69)
    assert fit.visibility == pytest.approx(0.98, abs=1e-6)
    assert fit.sigma_um == pytest.approx(171.69, rel=1e-4)
    assert fit.period_um == pytest.approx(lam, rel=1e-9)


# --- self fringe fit -------------------------------------------------------------

def self_values(x, v, lam_um, sign=+1.0):
    th = 2 * np.pi * x / lam_um
    return 1.0 + sign * 2 * v * np.cos(th) + 0.5 * v * v * (1 + np.cos(2 * th))


def test_fit_self_oscillation_roundtrip():
    x = np.arange(-1.0, 1.0 + 1e-12, 0.04)
    for sign, v, lam in ((-1.0, 0.98, 0.81063), (+1.0, 0.90, 0.79844)):
        fit = fit_self_oscillation(x, self_values(x, v, lam, sign),
                                   period_hint_um=lam)
        assert fit.visibility == pytest.approx(v * v, abs=1e-6)
        assert fit.period_um == pytest.approx(lam, rel=1e-6)
        assert fit.params["v_eff"][0] == pytest.approx(v, abs=1e-6)


# --- cross fringe fit ------------------------------------------------------------

def cross_values(x, v1, v2, l1_um, l2_um, s1, s2):
    p1 = 2 * np.pi * x / l1_um
    p2 = 2 * np.pi * x / l2_um
    e1 = np.exp(-x**2 / (2 * s1**2))
    e2 = np.exp(-x**2 / (2 * s2**2))
    return (1 - v1 * np.cos(p1) * e1 + v2 * np.cos(p2) * e2
            - 0.5 * v1 * v2 * (np.cos(p1 + p2) + np.cos(p1 - p2)) * e1 * e2)


def test_fit_cross_fringe_roundtrip():
    x = np.arange(-2.0, 2.0 + 1e-12, 0.04)
    y = cross_values(x, 0.98, 0.90, 0.81063, 0.79844, 171.69, 84.53)
    fit = fit_cross_fringe(x, y, 810.63, 798.44, 171.69, 84.53,
                           v1_hint=0.9, v2_hint=0.8)
    assert fit.params["v1"][0] == pytest.approx(0.98, abs=1e-3)
    assert fit.params["v2"][0] == pytest.approx(0.90, abs=1e-3)
    assert fit.params["asymmetry"][0] == pytest.approx(0.08, abs=2e-3)
    assert fit.period_um * 1e3 == pytest.approx(402.2444127353067, rel=1e-4)
    assert fit.visibility == pytest.approx(0.98 * 0.90, rel=1e-3)


def test_fit_cross_fringe_symmetric_case():
    x = np.arange(-2.0, 2.0 + 1e-12, 0.04)
    y = cross_values(x, 0.9, 0.9, 0.81063, 0.79844, 171.69, 84.53)
    fit = fit_cross_fringe(x, y, 810.63, 798.44, 171.69, 84.53,
                           v1_hint=0.85, v2_hint=0.95)
    assert fit.params["asymmetry"][0] == pytest.approx(0.0, abs=1e-4)


# --- product check ---------------------------------------------------------------

def fr(kind, vis, err, amp=None, amp_err=None):
    return FitResult(kind=kind, visibility=vis, visibility_stderr=err,
                     amplitude=amp, amplitude_stderr=amp_err)


def test_product_check_beat_passes():
    spi1 = fr("spi", 0.98, 1e-4)
    spi2 = fr("spi", 0.90, 1e-4)
    beat = fr("beat", 0.441, 1e-4, amp=0.441, amp_err=1e-4)
    report = visibility_product_check(spi1, spi2, beat)
    assert report.passed
    assert report.expected == pytest.approx(0.882)
    assert report.observed == pytest.approx(0.882)


def test_product_check_perfect_visibility():
    spi = fr("spi", 1.0, 0.0)
    beat = fr("beat", 0.5, 0.0, amp=0.5, amp_err=0.0)
    report = visibility_product_check(spi, spi, beat)
    assert report.passed and report.expected == 1.0


def test_product_check_self_tabulated_comparison():
    # reference numbers: self-TPI visibility 0.93 vs V1^2 = 0.96; the check
    # reports the comparison, equality is not asserted
    spi = fr("spi", 0.98, 0.005)
    tpi = fr("tpi_self", 0.93, 0.01)
    report = visibility_product_check(spi, None, tpi)
    assert report.expected == pytest.approx(0.9604)
    assert report.observed == pytest.approx(0.93)
    assert report.n_sigma > 0
    assert "tpi_self" in str(report)


def test_product_check_detects_mismatch():
    spi = fr("spi", 0.98, 1e-5)
    bad = fr("tpi_self", 0.5, 1e-5)
    assert not visibility_product_check(spi, None, bad).passed


# --- fit result validation --------------------------------------------------------

def test_fit_result_rejects_bad_visibility():
    from tpisim.errors import InvariantViolation
    with pytest.raises(InvariantViolation):
        FitResult(kind="spi", visibility=1.5, visibility_stderr=0.01)
    with pytest.raises(InvariantViolation):
        FitResult(kind="spi", visibility=-0.1, visibility_stderr=0.01)
    with pytest.raises(InvariantViolation):
        FitResult(kind="spi", sigma_um=-5.0)
