"""Runnable invariant suite behind the ``selftest`` CLI command.

Each check exercises one module-level invariant with an independent oracle
(closed-form identity, brute-force matcher, or statistical bound) and reports
one PASS/FAIL line. The suite is deterministic.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import fringes
from .analysis import fit_oscillation, normalize, ScanRow
from .coincidence import _match_cross_kernel, _match_self_kernel
from .configio import build_config, reference_config
from .events import EventStream, apply_dead_time, generate_stream, sample_jitter
from .fringes import ExperimentConfig, JitterSpec
from .scan import ScanPlan, run_scan
from .spectral import (C_VACUUM_M_S, SpectralFilter, SpectralPair,
                       angular_frequency_difference, beat_period, envelope,
                       effective_index_for_shift, joint_envelope,
                       tilted_center_wavelength)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __str__(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.detail}"


def greedy_pairs_oracle(a, b, window_ns: float) -> int:
    """Quadratic reference matcher: for each early event in time order, pair
    the earliest still-unmatched partner within the closed window."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.float64)
    half = window_ns / 2.0
    used = np.zeros(b.size, dtype=bool)
    count = 0
    for ta in a:
        cand = np.flatnonzero(~used & (np.abs(b - ta) <= half))
        if cand.size:
            used[cand[0]] = True
            count += 1
    return count


def _random_filters(rng):
    l1 = rng.uniform(500.0, 1100.0)
    l2 = rng.uniform(500.0, 1100.0)
    s1 = rng.uniform(30.0, 300.0)
    s2 = rng.uniform(30.0, 300.0)
    return SpectralPair(SpectralFilter(l1, s1, 1), SpectralFilter(l2, s2, 2))


def check_envelope_product_identity() -> CheckResult:
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(10_000):
        pair = _random_filters(rng)
        dx = rng.uniform(-5.0, 5.0) * pair.sigma12_um
        lhs = joint_envelope(pair, dx)
        rhs = envelope(pair.f1, dx) * envelope(pair.f2, dx)
        worst = max(worst, abs(lhs - rhs) / rhs)
    return CheckResult("envelope product identity", worst <= 1e-12,
                       f"max rel err {worst:.2e} (<= 1e-12) over 1e4 draws")


def check_beat_identity() -> CheckResult:
    rng = np.random.default_rng(102)
    two_pi_c = 2.0 * math.pi * C_VACUUM_M_S
    worst = 0.0
    for _ in range(1000):
        pair = _random_filters(rng)
        if pair.is_degenerate:
            continue
        prod = beat_period(pair.f1, pair.f2) * 1e-6 * \
            angular_frequency_difference(pair.f1, pair.f2)
        worst = max(worst, abs(prod - two_pi_c) / two_pi_c)
    return CheckResult("beat period x delta omega identity", worst <= 1e-12,
                       f"max rel err vs 2*pi*c {worst:.2e} (<= 1e-12)")


def check_tilt_roundtrip() -> CheckResult:
    rng = np.random.default_rng(103)
    worst = 0.0
    for _ in range(1000):
        lam0 = rng.uniform(500.0, 1100.0)
        theta = rng.uniform(1.0, 80.0)
        n = rng.uniform(1.2, 2.5)
        shifted = tilted_center_wavelength(lam0, theta, n)
        n_back = effective_index_for_shift(lam0, theta, shifted)
        worst = max(worst, abs(n_back - n) / n)
    return CheckResult("tilt model round trip", worst <= 1e-9,
                       f"max rel err {worst:.2e} (<= 1e-9)")


def _random_config(rng) -> ExperimentConfig:
    return ExperimentConfig(
        filters=_random_filters(rng),
        v1=rng.uniform(0.0, 1.0), v2=rng.uniform(0.0, 1.0),
        r1_inf_cps=rng.uniform(1e3, 1e6), r2_inf_cps=rng.uniform(1e3, 1e6),
        resolving_time_ns=rng.uniform(1.0, 100.0),
        self_delay_ns=200.0, dead_time_ns=50.0)


def check_master_factorization() -> CheckResult:
    """Cross-coincidence fringe == product of the two singles fringes x T_R."""
    rng = np.random.default_rng(104)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(10_000):
        cfg = _random_config(rng)
        dx = rng.uniform(-6.0, 6.0) * cfg.filters.sigma12_um
        lhs = fringes.tpi_rate_cross(cfg, dx)
        rhs = (fringes.spi_rate(1, cfg, dx) * fringes.spi_rate(2, cfg, dx)
               * cfg.resolving_time_s)
        worst = max(worst, abs(lhs - rhs) / max(rhs, cfg.rc_inf_cps))
    elapsed = time.perf_counter() - t0
    return CheckResult(
        "master factorization (cross == singles product x T_R)",
        worst <= 1e-12,
        f"max rel err {worst:.2e} (<= 1e-12) over 1e4 configs, {elapsed:.2f} s")


def check_degenerate_consistency() -> CheckResult:
    rng = np.random.default_rng(105)
    worst = 0.0
    for _ in range(1000):
        lam = rng.uniform(500.0, 1100.0)
        sig = rng.uniform(30.0, 300.0)
        pair = SpectralPair(SpectralFilter(lam, sig, 1),
                            SpectralFilter(lam, sig, 2))
        cfg = ExperimentConfig(filters=pair, v1=rng.uniform(0, 1),
                               v2=rng.uniform(0, 1))
        dx = rng.uniform(-4.0, 4.0) * sig
        lhs = fringes.tpi_rate_degenerate(cfg, dx)
        rhs = fringes.tpi_rate_cross(cfg, dx)
        worst = max(worst, abs(lhs - rhs) / max(rhs, cfg.rc_inf_cps))
    return CheckResult("degenerate fringe == cross fringe with equal filters",
                       worst <= 1e-12, f"max rel err {worst:.2e} (<= 1e-12)")


def phase_shifted_cross_average(cfg: ExperimentConfig, delta_x_um: float,
                                offsets_um: np.ndarray) -> float:
    """Cross rate averaged over a common offset injected into the phase terms
    only (envelopes held at delta_x); reference model for randomization."""
    f1, f2 = cfg.filters.f1, cfg.filters.f2
    x = delta_x_um + offsets_um
    ph1 = 2.0 * np.pi * x / f1.wavelength_um
    ph2 = 2.0 * np.pi * x / f2.wavelength_um
    e1 = float(envelope(f1, delta_x_um))
    e2 = float(envelope(f2, delta_x_um))
    vals = (1.0 - cfg.v1 * np.cos(ph1) * e1 + cfg.v2 * np.cos(ph2) * e2
            - 0.5 * cfg.v1 * cfg.v2
            * (np.cos(ph1 + ph2) + np.cos(ph1 - ph2)) * e1 * e2)
    return cfg.rc_inf_cps * float(vals.mean())


def randomization_bound(cfg: ExperimentConfig, delta_x_um: float,
                        amplitude_um: float) -> float:
    """Analytic bound on |phase-averaged cross rate - ideal randomized rate|.

    Each single-frequency cosine averaged over a uniform offset of span L is
    suppressed to |sinc(pi L / lam)| <= lam/(pi L); the surviving beat term
    differs from the ideal one by at most a = pi L / beat_period in phase plus
    1 - sinc(a) in amplitude, bounded by a*(1 + a/6).
    """
    f1, f2 = cfg.filters.f1, cfg.filters.f2
    e1 = float(envelope(f1, delta_x_um))
    e2 = float(envelope(f2, delta_x_um))
    bound = 0.0
    for v, lam, e in ((cfg.v1, f1.wavelength_um, e1),
                      (cfg.v2, f2.wavelength_um, e2)):
        bound += v * e * lam / (math.pi * amplitude_um)
    lam_sum = 1.0 / (1.0 / f1.wavelength_um + 1.0 / f2.wavelength_um)
    bound += 0.5 * cfg.v1 * cfg.v2 * e1 * e2 * lam_sum / \
        (math.pi * amplitude_um)
    a = math.pi * amplitude_um / cfg.filters.beat_period_um
    bound += 0.5 * cfg.v1 * cfg.v2 * e1 * e2 * a * (1.0 + a / 6.0)
    return cfg.rc_inf_cps * bound


def check_phase_average_consistency() -> CheckResult:
    cfg = reference_config()
    lam_max = max(cfg.filters.f1.wavelength_um, cfg.filters.f2.wavelength_um)
    amp = 10.0 * lam_max
    # midpoint rule over the offset span; dense enough that quadrature error
    # is negligible against the analytic bound
    m = 4001
    offsets = (np.arange(m) + 0.5) * amp / m
    ok = True
    worst_ratio = 0.0
    for dx in np.linspace(-150.0, 150.0, 11):
        avg = phase_shifted_cross_average(cfg, dx, offsets)
        ideal = float(fringes.tpi_rate_randomized_cross(cfg, dx))
        bound = randomization_bound(cfg, dx, amp) + 1e-5 * cfg.rc_inf_cps
        ratio = abs(avg - ideal) / bound
        worst_ratio = max(worst_ratio, ratio)
        ok &= ratio <= 1.0
    return CheckResult(
        "phase-averaged cross rate -> randomized rate (sinc bound)",
        ok, f"max |avg-ideal|/bound {worst_ratio:.3f} (<= 1) at L={amp:.2f} um")


def check_dead_time_idempotence() -> CheckResult:
    rng = np.random.default_rng(106)
    ok = True
    for _ in range(100):
        n = int(rng.integers(0, 400))
        ts = np.unique(rng.integers(0, 20_000, n))
        stream = EventStream("D1", ts.astype(np.int64), 1.0)
        dead = float(rng.integers(1, 200))
        once = apply_dead_time(stream, dead)
        twice = apply_dead_time(once, dead)
        gaps_ok = (len(once) < 2
                   or np.diff(once.timestamps_ns).min() >= round(dead))
        ok &= np.array_equal(once.timestamps_ns, twice.timestamps_ns)
        ok &= gaps_ok
        ok &= np.all(np.isin(once.timestamps_ns, ts))
    return CheckResult("dead-time filter idempotent, order-preserving", ok,
                       "100 random streams")


def check_determinism() -> CheckResult:
    cfg = reference_config()
    s_a = generate_stream(1, cfg, 25.0, 0.2, seed=42)
    s_b = generate_stream(1, cfg, 25.0, 0.2, seed=42)
    ok = np.array_equal(s_a.timestamps_ns, s_b.timestamps_ns)
    cfg_small = build_config(r1_inf_cps=2e4, r2_inf_cps=2e4)
    plan = ScanPlan(mode="montecarlo", range_um=(-400.0, 400.0, 200.0),
                    duration_per_point_s=0.5, master_seed=7)
    rows_a = run_scan(plan, cfg_small)
    rows_b = run_scan(plan, cfg_small)
    ok &= rows_a == rows_b
    return CheckResult("bit-identical regeneration from equal seeds", ok,
                       f"stream len {len(s_a)}, {len(rows_a)} scan rows")


def check_normalization_scale_invariance() -> CheckResult:
    rng = np.random.default_rng(107)
    dx = np.linspace(-800, 800, 41)
    counts = rng.uniform(1e3, 2e3, dx.size)
    gain = 37.5

    def rows_for(scale):
        return [ScanRow(x, scale * c, 1.0, 1.0, 1.0, 1.0, 2.0)
                for x, c in zip(dx, counts)]

    base = normalize(rows_for(1.0), "singles1", 100.0)
    scaled = normalize(rows_for(gain), "singles1", 100.0)
    worst = float(np.max(np.abs(base.values - scaled.values)))
    return CheckResult("normalization invariant under uniform gain",
                       worst <= 1e-12, f"max diff {worst:.2e} at gain {gain}")


def check_estimator_calibration(n_runs: int = 200) -> CheckResult:
    """Fitted 2-sigma intervals cover the true visibility and period in at
    least 90% of Poisson-noise syntheses at default counting statistics."""
    cfg = reference_config()
    rng = np.random.default_rng(108)
    x = np.arange(-1.0, 1.0 + 1e-9, 0.04)
    duration = 60.0
    lam_um = cfg.filters.f1.wavelength_um
    rate = np.asarray(fringes.spi_rate(1, cfg, x))
    base = cfg.r1_inf_cps * duration
    v_cover = 0
    p_cover = 0
    for _ in range(n_runs):
        counts = rng.poisson(rate * duration)
        y = counts / base
        sig = np.sqrt(np.clip(counts, 1, None)) / base
        fit = fit_oscillation(x, y, period_hint_um=lam_um, sigma=sig)
        if abs(fit.visibility - cfg.v1) <= 2.0 * fit.visibility_stderr:
            v_cover += 1
        if abs(fit.period_um - lam_um) <= 2.0 * fit.period_stderr:
            p_cover += 1
    ok = v_cover >= 0.9 * n_runs and p_cover >= 0.9 * n_runs
    return CheckResult(
        "estimator calibration (2-sigma coverage >= 90%)", ok,
        f"visibility {v_cover}/{n_runs}, period {p_cover}/{n_runs}")


def check_coincidence_oracle(n_seeds: int = 20) -> CheckResult:
    rng = np.random.default_rng(109)
    ok = True
    for _ in range(n_seeds):
        n = int(rng.integers(0, 300))
        m = int(rng.integers(0, 300))
        a = np.unique(rng.integers(0, 5000, n)).astype(np.int64)
        b = np.unique(rng.integers(0, 5000, m)).astype(np.int64)
        w = float(rng.integers(1, 40))
        ok &= _match_cross_kernel(a, b, w / 2.0) == greedy_pairs_oracle(a, b, w)
        delay = float(rng.integers(30, 120))
        ok &= (_match_self_kernel(a, delay, w / 2.0)
               == greedy_pairs_oracle(a, a + delay, w))
    return CheckResult("coincidence kernels == quadratic greedy oracle", ok,
                       f"{n_seeds} random instances, cross and self")


def check_jitter_suppression() -> CheckResult:
    cfg = reference_config()
    lam = cfg.filters.f1.wavelength_um
    amp = 10.0 * lam
    spec = JitterSpec(enabled=True, amplitude_um=amp, dwell_time_us=100.0)
    offsets = sample_jitter(spec, 60.0, seed=11)
    m = offsets.size
    noise = 5.0 * 0.71 / math.sqrt(m)
    bound = lam / (math.pi * amp)
    ok = True
    worst = 0.0
    for dx in (0.0, 13.7, 200.0):
        resid = abs(float(np.mean(np.cos(2 * np.pi * (dx + offsets) / lam))))
        worst = max(worst, resid)
        ok &= resid <= bound + noise
    # beat survives: attenuation matches sinc(pi L / Lambda) with the L/2 shift
    beat = cfg.filters.beat_period_um
    arg = math.pi * amp / beat
    sinc = math.sin(arg) / arg
    emp = float(np.mean(np.cos(2 * np.pi * offsets / beat)))
    expect = sinc * math.cos(arg)  # cos(2pi (0 + L/2) / Lambda)
    ok &= abs(emp - sinc * math.cos(arg)) <= noise
    return CheckResult(
        "jitter suppresses single-lambda terms, preserves beat", ok,
        f"max residual {worst:.4f} (bound {bound + noise:.4f}); beat factor "
        f"{emp:.4f} vs sinc model {expect:.4f}")


ALL_CHECKS = [
    check_envelope_product_identity,
    check_beat_identity,
    check_tilt_roundtrip,
    check_master_factorization,
    check_degenerate_consistency,
    check_phase_average_consistency,
    check_dead_time_idempotence,
    check_determinism,
    check_normalization_scale_invariance,
    check_estimator_calibration,
    check_coincidence_oracle,
    check_jitter_suppression,
]


def run_selftest(verbose: bool = True) -> list[CheckResult]:
    results = []
    for check in ALL_CHECKS:
        result = check()
        results.append(result)
        if verbose:
            print(result)
    return results
