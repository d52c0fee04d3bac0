"""Acceptance suite: one test per exit criterion.

Each test prints one ``ACCEPTANCE n: PASS/FAIL`` line (visible with
``pytest -s``) and asserts the criterion at its stated tolerance.
Criteria with Monte Carlo content use the count-level sampler (mode
'poisson'), the statistical twin of the event-stream path whose own
fidelity is covered by the module tests and the selftest suite.
"""

import dataclasses
import math
import time

import numpy as np
import pytest

import tpisim.fringes as fringes
from tpisim import analysis, reference_config
from tpisim.configio import FIG5_VISIBILITIES, REFERENCE_MEASUREMENTS
from tpisim.coincidence import _match_cross_kernel, count_cross
from tpisim.events import EventStream
from tpisim.fringes import ExperimentConfig, JitterSpec
from tpisim.scan import ScanPlan, reproduce_figure, run_scan
from tpisim.selftest import greedy_pairs_oracle, run_selftest
from tpisim.spectral import SpectralFilter, SpectralPair

SIGMA12 = 107.24948888911979
BEAT_CONFIGURED = 53.09593250205113
SUM_PERIOD_NM = 402.2444127353067


def _report(criterion: int, passed: bool, detail: str):
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, f"criterion {criterion}: {detail}"


# -- criterion 1: master factorization ------------------------------------------

def test_criterion_1_master_factorization():
    rng = np.random.default_rng(1)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(10_000):
        pair = SpectralPair(
            SpectralFilter(rng.uniform(500, 1100), rng.uniform(30, 300), 1),
            SpectralFilter(rng.uniform(500, 1100), rng.uniform(30, 300), 2))
        cfg = ExperimentConfig(
            filters=pair, v1=rng.uniform(0, 1), v2=rng.uniform(0, 1),
            r1_inf_cps=rng.uniform(1e3, 1e6), r2_inf_cps=rng.uniform(1e3, 1e6),
            resolving_time_ns=rng.uniform(1, 100), self_delay_ns=200.0)
        dx = rng.uniform(-6, 6) * pair.sigma12_um
        lhs = fringes.tpi_rate_cross(cfg, dx)
        rhs = (fringes.spi_rate(1, cfg, dx) * fringes.spi_rate(2, cfg, dx)
               * cfg.resolving_time_s)
        worst = max(worst, abs(lhs - rhs) / max(rhs, cfg.rc_inf_cps))
    elapsed = time.perf_counter() - t0
    _report(1, worst <= 1e-12 and elapsed < 1.0,
            f"max rel err {worst:.2e} (<=1e-12) over 1e4 configs in "
            f"{elapsed:.2f} s (<1 s)")


# -- criterion 2: figure-3 recovery ----------------------------------------------

def _fig3_fits(mode: str, seed: int):
    datasets = reproduce_figure(3, mode=mode, master_seed=seed)
    coarse, fine = datasets["coarse"], datasets["fine"]
    weighted = mode != "analytic"
    out = {}
    for ch, lam_nm, sig_um, v in (("singles1", 810.63, 171.69, 0.98),
                                  ("singles2", 798.44, 84.53, 0.90)):
        n = analysis.normalize(coarse, ch, SIGMA12,
                               with_poisson_sigma=weighted)
        fit = analysis.fit_spi_coarse(n.delta_x_um, n.values, lam_nm, sig_um,
                                      sigma=n.sigma)
        out[f"sigma_{ch}"] = fit.sigma_um
        nf = analysis.normalize(fine, ch, SIGMA12, with_poisson_sigma=weighted)
        mask = np.abs(nf.delta_x_um) <= 1.0
        fit = analysis.fit_oscillation(
            nf.delta_x_um[mask], nf.values[mask],
            period_hint_um=lam_nm * 1e-3,
            sigma=None if nf.sigma is None else nf.sigma[mask])
        out[f"v_{ch}"] = fit.visibility
    for ch, lam_nm in (("self1", 810.63), ("self2", 798.44)):
        nf = analysis.normalize(fine, ch, SIGMA12, with_poisson_sigma=weighted)
        mask = np.abs(nf.delta_x_um) <= 1.0
        fit = analysis.fit_self_oscillation(
            nf.delta_x_um[mask], nf.values[mask],
            period_hint_um=lam_nm * 1e-3,
            sigma=None if nf.sigma is None else nf.sigma[mask])
        out[f"vis_{ch}"] = fit.visibility
    return out


def _fig3_ok(fits) -> bool:
    return (abs(fits["v_singles1"] - 0.98) <= 0.02
            and abs(fits["v_singles2"] - 0.90) <= 0.02
            and abs(fits["sigma_singles1"] / 171.69 - 1.0) <= 0.02
            and abs(fits["sigma_singles2"] / 84.53 - 1.0) <= 0.02
            and abs(fits["vis_self1"] - 0.98**2) <= 0.03
            and abs(fits["vis_self2"] - 0.90**2) <= 0.03)


def test_criterion_2_fig3_visibilities_and_widths():
    t0 = time.perf_counter()
    exact = _fig3_fits("analytic", seed=0)
    analytic_ok = (abs(exact["v_singles1"] - 0.98) <= 1e-3
                   and abs(exact["v_singles2"] - 0.90) <= 1e-3
                   and abs(exact["sigma_singles1"] / 171.69 - 1) <= 1e-3
                   and abs(exact["sigma_singles2"] / 84.53 - 1) <= 1e-3
                   and _fig3_ok(exact))
    passes = sum(_fig3_ok(_fig3_fits("poisson", seed=1000 + s))
                 for s in range(20))
    elapsed = time.perf_counter() - t0
    _report(2, analytic_ok and passes >= 18 and elapsed < 180.0,
            f"analytic exact recovery {analytic_ok}; Monte Carlo 60 s/point "
            f"{passes}/20 seeds within tolerance (>=18); {elapsed:.0f} s "
            f"(<180 s)")


# -- criterion 3: figure-4 phase-resolved cross fringe ----------------------------

def _fit_fig4(cfg):
    datasets = reproduce_figure(4, cfg=cfg, mode="analytic")
    nf = analysis.normalize(datasets["fine"], "cross", SIGMA12)
    mask = np.abs(nf.delta_x_um) <= 2.0
    return analysis.fit_cross_fringe(
        nf.delta_x_um[mask], nf.values[mask], 810.63, 798.44, 171.69, 84.53,
        v1_hint=0.9, v2_hint=0.8), nf.delta_x_um[mask], nf.values[mask]


def test_criterion_3_fig4_sum_frequency_and_asymmetry():
    fit, x, y = _fit_fig4(reference_config())
    period_ok = abs(fit.period_um * 1e3 - SUM_PERIOD_NM) / SUM_PERIOD_NM <= 0.01
    asym, asym_err = fit.params["asymmetry"]
    asym_ok = abs(asym - abs(0.98 - 0.90)) <= max(3 * asym_err, 1e-3)

    # the fitted model (including the difference-frequency beat term)
    # accounts for the data; the beat modulation is really there
    v1, v2 = fit.params["v1"][0], fit.params["v2"][0]
    l1, l2 = fit.params["lambda1_um"][0], fit.params["lambda2_um"][0]
    p1, p2 = 2 * np.pi * x / l1, 2 * np.pi * x / l2
    e1 = np.exp(-x**2 / (2 * 171.69**2))
    e2 = np.exp(-x**2 / (2 * 84.53**2))
    model = (1 - v1 * np.cos(p1) * e1 + v2 * np.cos(p2) * e2
             - 0.5 * v1 * v2 * (np.cos(p1 + p2) + np.cos(p1 - p2)) * e1 * e2)
    # the normalization baseline carries the ~1e-3-level singles-envelope
    # tail of the wide arm; the fringe structure itself is O(1)
    residual = float(np.max(np.abs(model - y)))
    residual_ok = residual <= 1e-3
    beat_term = 0.5 * v1 * v2 * np.cos(p1 - p2) * e1 * e2
    beat_present = beat_term.max() - beat_term.min() > 0.01

    fit_eq, _, _ = _fit_fig4(dataclasses.replace(reference_config(),
                                                 v1=0.9, v2=0.9))
    asym_eq, asym_eq_err = fit_eq.params["asymmetry"]
    control_ok = asym_eq <= max(3 * asym_eq_err, 1e-3)

    _report(3, period_ok and asym_ok and residual_ok and beat_present
            and control_ok,
            f"sum-frequency period {fit.period_um * 1e3:.2f} nm vs "
            f"{SUM_PERIOD_NM:.2f} (<=1%); asymmetry {asym:.4f} vs 0.08; "
            f"equal-V control {asym_eq:.2e}; beat modulation present "
            f"{beat_present}; model residual {residual:.1e}")


# -- criterion 4: figure-5 randomized-phase reproduction --------------------------

def test_criterion_4_fig5_peaks_widths_beat():
    v1, v2 = FIG5_VISIBILITIES
    checks = []
    details = []
    for mode, seed in (("analytic", 0), ("poisson", 42)):
        datasets = reproduce_figure(5, mode=mode, master_seed=seed)
        rows = datasets["coarse"]
        weighted = mode != "analytic"
        for ch, sig_t, v_t in (("self1", 171.69, v1), ("self2", 84.53, v2)):
            n = analysis.normalize(rows, ch, SIGMA12,
                                   with_poisson_sigma=weighted)
            fit = analysis.fit_envelope(n.delta_x_um, n.values,
                                        kind="self_peak", sigma=n.sigma)
            peak = 1.0 + fit.amplitude
            target = 1.0 + 0.5 * v_t * v_t
            tol = 0.02 if weighted else 1e-4
            checks.append(abs(peak - target) <= tol)
            checks.append(abs(fit.sigma_um / sig_t - 1.0) <= 0.02)
            if weighted:
                details.append(f"{ch} peak {peak:.4f} (target {target:.4f})")
        n = analysis.normalize(rows, "cross", SIGMA12,
                               with_poisson_sigma=weighted)
        fit = analysis.fit_beat(n.delta_x_um, n.values,
                                period_hint_um=BEAT_CONFIGURED,
                                sigma12_hint_um=SIGMA12, sigma=n.sigma)
        checks.append(abs(fit.period_um / BEAT_CONFIGURED - 1.0) <= 0.005)
        if weighted:
            details.append(f"beat {fit.period_um:.3f} um")
    # the bundled reference measurement is a known ~2% discrepancy, not a bug
    ref = REFERENCE_MEASUREMENTS["beat_period_um"]
    ref_gap = abs(BEAT_CONFIGURED - ref) / BEAT_CONFIGURED
    checks.append(ref_gap <= 0.025)
    _report(4, all(checks),
            f"peaks 1+V^2/2 within +/-0.02 MC, widths within 2%, beat period "
            f"within 0.5% [{'; '.join(details)}]; reference 52.13 um sits "
            f"{100 * ref_gap:.1f}% from configured (<2.5%, documented)")


# -- criterion 5: residual fringe suppression under randomization ------------------

def test_criterion_5_randomization_suppression():
    cfg = reference_config()
    lam_max = max(cfg.filters.f1.wavelength_um, cfg.filters.f2.wavelength_um)
    amp = 10.0 * lam_max
    cfg = dataclasses.replace(
        cfg, jitter=JitterSpec(enabled=False, amplitude_um=amp,
                               dwell_time_us=100.0))
    plan = ScanPlan(mode="poisson", range_um=(-720.0, 720.0, 36.0),
                    fine_window_um=(0.0, 1.0, 0.04), randomize_phase=True,
                    channels=("singles1", "singles2"), master_seed=5,
                    duration_per_point_s=60.0)
    rows = run_scan(plan, cfg)
    residuals = {}
    for ch, lam_nm in (("singles1", 810.63), ("singles2", 798.44)):
        n = analysis.normalize(rows, ch, SIGMA12, with_poisson_sigma=True)
        mask = np.abs(n.delta_x_um) <= 1.0
        fit = analysis.fit_oscillation(n.delta_x_um[mask], n.values[mask],
                                       period_hint_um=lam_nm * 1e-3,
                                       sigma=n.sigma[mask])
        residuals[ch] = fit.visibility
    bound = 1.0 / (10 * math.pi)
    _report(5, all(v < 0.05 for v in residuals.values()),
            f"residual single-frequency visibilities "
            f"{residuals['singles1']:.4f}/{residuals['singles2']:.4f} < 0.05 "
            f"at jitter span 10*lambda (sinc bound {bound:.3f})")


# -- criterion 6: coincidence engine ----------------------------------------------

def test_criterion_6_engine_exactness_and_speed():
    rng = np.random.default_rng(6)
    exact = True
    for _ in range(100):
        n = int(rng.integers(0, 1000))
        m = int(rng.integers(0, 1000))
        a = np.unique(rng.integers(0, 40_000, n)).astype(np.int64)
        b = np.unique(rng.integers(0, 40_000, m)).astype(np.int64)
        w = float(rng.integers(1, 60))
        exact &= _match_cross_kernel(a, b, w / 2.0) == \
            greedy_pairs_oracle(a, b, w)

    n_big = 10_000_000
    gaps = rng.exponential(100.0, int(1.02 * n_big))
    a = np.unique(np.cumsum(gaps).astype(np.int64))[:n_big]
    gaps = rng.exponential(100.0, int(1.02 * n_big))
    b = np.unique(np.cumsum(gaps).astype(np.int64))[:n_big]
    dur = (max(a[-1], b[-1]) + 1) / 1e9
    sa = EventStream("D1", a, dur)
    sb = EventStream("D2", b, dur)
    count_cross(sa, sb, 10.0)  # warm the jit cache before timing
    t0 = time.perf_counter()
    res = count_cross(sa, sb, 10.0)
    elapsed = time.perf_counter() - t0
    _report(6, exact and elapsed < 10.0,
            f"oracle-exact on 100 random instances; 1e7-event pair counted "
            f"in {elapsed:.2f} s (<10 s), {res.pair_count} pairs")


# -- criterion 7: property suite via selftest --------------------------------------

def test_criterion_7_selftest_invariants():
    results = run_selftest(verbose=True)
    failed = [r.name for r in results if not r.passed]
    _report(7, not failed,
            f"{len(results) - len(failed)}/{len(results)} selftest invariants "
            f"pass" + (f"; failed: {failed}" if failed else ""))
