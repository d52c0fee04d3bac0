"""Normalization and model fitting for scan data.

Fits are nonlinear least squares (scipy.optimize.curve_fit) with analytic
models, initialized from linear probes (cos/sin regression at a fixed trial
period) and, for periods, from the FFT-dominant frequency. Reported
uncertainties are the square roots of the covariance diagonal scaled by the
reduced chi-square; Poisson weights sqrt(N) are attached upstream by
:func:`normalize` when counts are available.

Visibility conventions (one symbol, two fringe shapes):

* single-cosine oscillations report V = (max-min)/(max+min), i.e. the fitted
  relative modulation amplitude;
* peak/dip fringes report V = (extremum - baseline)/baseline;
* the two-harmonic self fringe and the cross fringe report the two-photon
  oscillation visibility, i.e. twice the half-amplitude of the
  doubled-frequency term, which equals the product of the generating
  single-arm visibilities (V_i^2 for self, V1*V2 for cross).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .errors import (AliasingError, ConfigError, FitConvergenceError,
                     InvariantViolation, NoBaselineError, SpanError)

CHANNELS = ("singles1", "singles2", "cross", "self1", "self2")
_CHANNEL_ATTR = {
    "singles1": "singles1",
    "singles2": "singles2",
    "cross": "coinc_cross",
    "self1": "coinc_self1",
    "self2": "coinc_self2",
}
# Baseline region: joint envelope < 1e-15 there, so the mean is bias-free.
BASELINE_SIGMA12 = 6.0


@dataclass(frozen=True)
class ScanRow:
    """Per-scan-point measured (or expected) counts for every channel."""

    delta_x_um: float
    singles1: float
    singles2: float
    coinc_cross: float
    coinc_self1: float
    coinc_self2: float
    duration_s: float
    seed: int = 0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise ConfigError("duration_s must be > 0")
        for name in _CHANNEL_ATTR.values():
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")


@dataclass(frozen=True)
class NormalizedScan:
    delta_x_um: np.ndarray
    values: np.ndarray
    sigma: np.ndarray | None = None


@dataclass(frozen=True)
class FitResult:
    """Extracted fringe parameters with standard errors; unused fields are None."""

    kind: str
    visibility: float | None = None
    visibility_stderr: float | None = None
    sigma_um: float | None = None
    sigma_stderr: float | None = None
    period_um: float | None = None
    period_stderr: float | None = None
    baseline: float | None = None
    amplitude: float | None = None
    amplitude_stderr: float | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.visibility is not None:
            err = self.visibility_stderr or 0.0
            if not np.isfinite(self.visibility) or self.visibility < 0 \
                    or self.visibility > 1.0 + 3.0 * err + 1e-12:
                raise InvariantViolation(
                    f"{self.kind}: visibility {self.visibility} outside "
                    f"[0, 1 + 3*stderr]"
                )
        if self.sigma_um is not None and not self.sigma_um > 0:
            raise InvariantViolation(f"{self.kind}: sigma_um must be > 0")

    def iter_report_rows(self):
        """Yield (param, value, stderr) rows for the fit-report CSV."""
        fields = [
            ("visibility", self.visibility, self.visibility_stderr),
            ("sigma_um", self.sigma_um, self.sigma_stderr),
            ("period_um", self.period_um, self.period_stderr),
            ("baseline", self.baseline, None),
            ("amplitude", self.amplitude, self.amplitude_stderr),
        ]
        for name, value, err in fields:
            if value is not None:
                yield name, value, (err if err is not None else 0.0)
        for name, (value, err) in self.params.items():
            yield name, value, err


def normalize(rows, channel: str, sigma12_um: float,
              with_poisson_sigma: bool = False) -> NormalizedScan:
    """Divide one channel by its far-envelope baseline mean.

    The baseline region is |delta_x| >= 6*sigma12. Values are per-second rates
    before division, so mixed per-point durations are handled; a uniform
    multiplicative gain on the counts cancels exactly.
    """
    if channel not in _CHANNEL_ATTR:
        raise ConfigError(f"unknown channel '{channel}'")
    rows = list(rows)
    if not rows:
        raise NoBaselineError("empty scan")
    dx = np.array([r.delta_x_um for r in rows])
    counts = np.array([getattr(r, _CHANNEL_ATTR[channel]) for r in rows])
    dur = np.array([r.duration_s for r in rows])
    baseline_mask = np.abs(dx) >= BASELINE_SIGMA12 * sigma12_um
    if not baseline_mask.any():
        raise NoBaselineError(
            f"no scan points with |delta_x| >= {BASELINE_SIGMA12}*sigma12 "
            f"= {BASELINE_SIGMA12 * sigma12_um:.1f} um"
        )
    rates = counts / dur
    base = rates[baseline_mask].mean()
    if not base > 0:
        raise NoBaselineError("baseline region has zero rate")
    sigma = None
    if with_poisson_sigma:
        sigma = np.sqrt(np.clip(counts, 1.0, None)) / dur / base
    return NormalizedScan(dx, rates / base, sigma)


def dominant_period(delta_x, values) -> float:
    """Period of the FFT-dominant non-DC component of a uniformly sampled scan."""
    x = np.asarray(delta_x, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 4:
        raise AliasingError("need at least 4 samples for period estimation")
    step = float(np.median(np.diff(x)))
    amp = np.abs(np.fft.rfft(y - y.mean()))
    freqs = np.fft.rfftfreq(x.size, step)
    k = 1 + int(np.argmax(amp[1:]))
    if amp[k] == 0 or freqs[k] == 0:
        raise AliasingError("no identifiable oscillation in the data")
    return 1.0 / freqs[k]


def _fit(model, x, y, p0, sigma=None, bounds=(-np.inf, np.inf)):
    try:
        with warnings.catch_warnings():
            # zero-residual fits have a singular covariance; stderr -> inf
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(model, x, y, p0=p0, sigma=sigma,
                                   absolute_sigma=False, maxfev=20000,
                                   bounds=bounds)
    except RuntimeError as exc:
        resid = y - model(x, *p0)
        raise FitConvergenceError(
            f"fit failed to converge: {exc}; initial residual rms "
            f"{float(np.sqrt(np.mean(resid**2))):.3g} over {x.size} points"
        ) from exc
    perr = np.sqrt(np.abs(np.diag(pcov)))
    perr[~np.isfinite(perr)] = np.inf
    return popt, perr, pcov


def _linear_cos_probe(x, y, period_um, n_harmonics=1):
    """Least-squares amplitudes of cos/sin at the trial period (and harmonics)."""
    cols = [np.ones_like(x)]
    for h in range(1, n_harmonics + 1):
        th = h * 2.0 * np.pi * x / period_um
        cols.extend([np.cos(th), np.sin(th)])
    coef, *_ = np.linalg.lstsq(np.stack(cols, axis=1), y, rcond=None)
    return coef


def _check_sampling(x, period_um, min_per_period, min_span_periods, what):
    step = float(np.median(np.abs(np.diff(np.sort(x)))))
    if step <= 0:
        raise AliasingError("degenerate sampling grid")
    if period_um / step < min_per_period:
        raise AliasingError(
            f"{what}: {period_um / step:.1f} samples/period, "
            f"need >= {min_per_period}"
        )
    span = float(x.max() - x.min())
    if span < min_span_periods * period_um:
        raise AliasingError(
            f"{what}: span {span:.3g} um covers fewer than "
            f"{min_span_periods} periods of {period_um:.3g} um"
        )


def fit_oscillation(delta_x, values, period_hint_um=None, sigma=None,
                    kind: str = "spi") -> FitResult:
    """Fit y = b*(1 + v*cos(2*pi*x/p + phi0)) to a phase-resolved fringe."""
    x = np.asarray(delta_x, dtype=float)
    y = np.asarray(values, dtype=float)
    p = float(period_hint_um) if period_hint_um else dominant_period(x, y)
    _check_sampling(x, p, 10.0, 2.0, "oscillation fit")
    c0, a, b_ = _linear_cos_probe(x, y, p)[:3]
    v0 = math.hypot(a, b_) / max(c0, 1e-30)
    phi0 = math.atan2(-b_, a)
    if v0 < 1e-12:
        # Structurally flat input: the period is unconstrained, report v ~ 0
        # with the probe's residual scatter as its uncertainty.
        resid = y - c0
        verr = float(np.sqrt(np.mean(resid**2)) / max(c0, 1e-30)
                     * math.sqrt(2.0 / x.size))
        return FitResult(kind=kind, visibility=v0, visibility_stderr=verr,
                         period_um=p, period_stderr=np.inf, baseline=float(c0))

    def model(x, b, v, p, phi):
        return b * (1.0 + v * np.cos(2.0 * np.pi * x / p + phi))

    popt, perr, _ = _fit(model, x, y, [c0, v0, p, phi0], sigma=sigma)
    b, v, p, phi = popt
    if v < 0:
        v, phi = -v, phi + math.pi
    phi = (phi + math.pi) % (2.0 * math.pi) - math.pi
    return FitResult(kind=kind, visibility=float(v),
                     visibility_stderr=float(perr[1]),
                     period_um=float(p), period_stderr=float(perr[2]),
                     baseline=float(b),
                     params={"phase_rad": (float(phi), float(perr[3]))})


def fit_envelope(delta_x, values, kind: str = "spi", sigma=None) -> FitResult:
    """Fit a Gaussian envelope to normalized, non-oscillating data.

    kind='spi' fits y = 1 + a*exp(-x^2/(2 s^2)) (envelope magnitude; a may be
    negative for a dip); kind='self_peak' fits y = 1 + a*exp(-x^2/s^2), the
    squared-envelope form of the phase-randomized self peak.
    """
    if kind not in ("spi", "self_peak"):
        raise ConfigError("fit_envelope kind must be 'spi' or 'self_peak'")
    x = np.asarray(delta_x, dtype=float)
    y = np.asarray(values, dtype=float)
    denom = 2.0 if kind == "spi" else 1.0

    center = np.argmin(np.abs(x))
    a0 = float(y[center] - 1.0)
    s0 = _log_parabola_sigma(x, y - 1.0, denom)
    if s0 is None:
        s0 = float(max(np.abs(x).max(), 1.0)) / 6.0
    if abs(a0) < 1e-12:
        resid = y - 1.0
        aerr = float(np.sqrt(np.mean(resid**2)) * math.sqrt(2.0 / x.size))
        return FitResult(kind=kind, visibility=0.0, visibility_stderr=aerr,
                         sigma_um=s0, sigma_stderr=np.inf, baseline=1.0,
                         amplitude=a0, amplitude_stderr=aerr)

    def model(x, a, s):
        return 1.0 + a * np.exp(-(x * x) / (denom * s * s))

    popt, perr, _ = _fit(model, x, y, [a0, s0], sigma=sigma)
    a, s = float(popt[0]), float(abs(popt[1]))
    if np.abs(x).max() < 3.0 * s:
        raise SpanError(
            f"scan spans {np.abs(x).max():.3g} um, below 3*sigma = {3*s:.3g} um"
        )
    return FitResult(kind=kind, visibility=abs(a),
                     visibility_stderr=float(perr[0]), sigma_um=s,
                     sigma_stderr=float(perr[1]), baseline=1.0, amplitude=a,
                     amplitude_stderr=float(perr[0]))


def _log_parabola_sigma(x, dev, denom):
    """Gaussian scale from a parabola fit to log |deviation| (initializer only)."""
    mag = np.abs(dev)
    top = mag.max()
    if top <= 0:
        return None
    mask = mag > 0.2 * top
    if mask.sum() < 3:
        return None
    coef = np.polyfit(x[mask] ** 2, np.log(mag[mask]), 1)
    if coef[0] >= 0:
        return None
    return float(1.0 / math.sqrt(-denom * coef[0]))


def fit_beat(delta_x, values, period_hint_um=None, sigma12_hint_um=None,
             sigma=None) -> FitResult:
    """Fit the phase-randomized cross fringe y = 1 - a*cos(2*pi*x/P + psi)*
    exp(-x^2/s^2).

    The phase offset psi absorbs the centroid shift introduced by a one-sided
    jitter drive; it fits to ~0 for ideally randomized data. The reported
    visibility is the oscillation amplitude a (baseline is pinned at 1), whose
    target under the product rule is V1*V2/2.
    """
    x = np.asarray(delta_x, dtype=float)
    y = np.asarray(values, dtype=float)
    dev = 1.0 - y
    if float(np.abs(dev).max()) < 1e-9:
        raise AliasingError("no beat signal: amplitude consistent with 0")
    period = float(period_hint_um) if period_hint_um else dominant_period(x, y)
    _check_sampling(x, period, 4.0, 3.0, "beat fit")
    s0 = float(sigma12_hint_um) if sigma12_hint_um else \
        _log_parabola_sigma(x, dev, 1.0) or (x.max() - x.min()) / 6.0
    env = np.exp(-(x * x) / (s0 * s0))
    th = 2.0 * np.pi * x / period
    design = np.stack([np.cos(th) * env, np.sin(th) * env], axis=1)
    (ac, as_), *_ = np.linalg.lstsq(design, dev, rcond=None)
    a0 = math.hypot(ac, as_)
    psi0 = math.atan2(-as_, ac)
    if a0 < 1e-9:
        raise AliasingError("no beat signal: amplitude consistent with 0")

    def model(x, a, p, psi, s):
        return 1.0 - a * np.cos(2.0 * np.pi * x / p + psi) * \
            np.exp(-(x * x) / (s * s))

    popt, perr, _ = _fit(model, x, y, [a0, period, psi0, s0], sigma=sigma)
    a, p, psi, s = popt
    if a < 0:
        a, psi = -a, psi + math.pi
    psi = (psi + math.pi) % (2.0 * math.pi) - math.pi
    return FitResult(kind="beat", visibility=float(a),
                     visibility_stderr=float(perr[0]), sigma_um=float(abs(s)),
                     sigma_stderr=float(perr[3]), period_um=float(p),
                     period_stderr=float(perr[1]), baseline=1.0,
                     amplitude=float(a), amplitude_stderr=float(perr[0]),
                     params={"phase_rad": (float(psi), float(perr[2]))})


def fit_spi_coarse(delta_x, values, wavelength_hint_nm, sigma_hint_um,
                   sigma=None, kind: str = "spi") -> FitResult:
    """Fit the full coarse singles fringe y = b*(1 + v*cos(2*pi*x/lam + phi)*
    exp(-x^2/(2 s^2))).

    The coarse grid aliases the optical oscillation, so convergence relies on
    the wavelength hint (the configured filter center); the envelope scale and
    visibility are then recovered from the whole scan at once.
    """
    x = np.asarray(delta_x, dtype=float)
    y = np.asarray(values, dtype=float)
    lam0 = wavelength_hint_nm * 1e-3
    s0 = float(sigma_hint_um)
    b0 = float(np.median(y))
    v0 = (y.max() - y.min()) / (y.max() + y.min())
    center = np.argmin(np.abs(x))
    phi0 = math.pi if y[center] < b0 else 0.0

    def model(x, b, v, lam, phi, s):
        return b * (1.0 + v * np.cos(2.0 * np.pi * x / lam + phi) *
                    np.exp(-(x * x) / (2.0 * s * s)))

    popt, perr, _ = _fit(model, x, y, [b0, v0, lam0, phi0, s0], sigma=sigma)
    b, v, lam, phi, s = popt
    if v < 0:
        v, phi = -v, phi + math.pi
    if np.abs(x).max() < 3.0 * abs(s):
        raise SpanError(
            f"scan spans {np.abs(x).max():.3g} um, below 3*sigma = "
            f"{3 * abs(s):.3g} um"
        )
    return FitResult(kind=kind, visibility=float(v),
                     visibility_stderr=float(perr[1]),
                     sigma_um=float(abs(s)), sigma_stderr=float(perr[4]),
                     period_um=float(lam), period_stderr=float(perr[2]),
                     baseline=float(b))


def fit_self_oscillation(delta_x, values, period_hint_um,
                         sigma=None) -> FitResult:
    """Fit the phase-resolved delayed self fringe near delta_x ~ 0.

    Model: y = 1 + c1*cos(th) + c2*(1 + cos(2 th)), th = 2*pi*x/p + psi, the
    envelope being ~1 over a phase-resolved window. For data generated by the
    self-coincidence fringe, c1 = +/-2V and c2 = V^2/2. The reported
    visibility is 2*c2 = V^2, the two-photon oscillation visibility.
    """
    x = np.asarray(delta_x, dtype=float)
    y = np.asarray(values, dtype=float)
    p0 = float(period_hint_um)
    # 10 samples per fundamental leaves 5 per doubled-frequency harmonic
    _check_sampling(x, p0, 10.0, 2.0, "self-fringe fit")
    th0 = 2.0 * np.pi * x / p0
    design = np.stack([np.cos(th0), np.sin(th0),
                       1.0 + np.cos(2.0 * th0), np.sin(2.0 * th0)], axis=1)
    coef, *_ = np.linalg.lstsq(design, y - 1.0, rcond=None)
    c1_0 = math.hypot(coef[0], coef[1])
    psi0 = math.atan2(-coef[1], coef[0])
    c2_0 = max(float(coef[2]), 1e-6)
    sign = 1.0 if coef[0] >= 0 else -1.0
    if sign < 0:
        # fold the sign of c1 into psi so c1 stays >= 0 at the initial point
        psi0 = math.atan2(coef[1], -coef[0])

    def model(x, c1, c2, p, psi):
        th = 2.0 * np.pi * x / p + psi
        return 1.0 + c1 * np.cos(th) + c2 * (1.0 + np.cos(2.0 * th))

    popt, perr, _ = _fit(model, x, y, [c1_0, c2_0, p0, psi0], sigma=sigma)
    c1, c2, p, psi = popt
    psi = (psi + math.pi) % (2.0 * math.pi) - math.pi
    return FitResult(kind="tpi_self", visibility=float(2.0 * c2),
                     visibility_stderr=float(2.0 * perr[1]),
                     period_um=float(p), period_stderr=float(perr[2]),
                     baseline=float(1.0 + c2), amplitude=float(c1),
                     amplitude_stderr=float(perr[0]),
                     params={"phase_rad": (float(psi), float(perr[3])),
                             "v_eff": (float(math.sqrt(max(2.0 * c2, 0.0))),
                                       float(perr[1] /
                                             max(math.sqrt(max(2.0 * c2, 1e-12)), 1e-12)))})


def fit_cross_fringe(delta_x, values, lambda1_hint_nm, lambda2_hint_nm,
                     sigma1_um, sigma2_um, v1_hint=0.9, v2_hint=0.9,
                     sigma=None) -> FitResult:
    """Fit the phase-resolved cross fringe with both SPI terms and the
    sum/difference-frequency oscillations.

    Free parameters: V1, V2 and both wavelengths; the envelope scales are held
    at the supplied values (they are indistinguishable from 1 over a
    phase-resolved window). Reports the sum-frequency period
    lam1*lam2/(lam1+lam2) and the SPI-asymmetry amplitude |V1-V2|.
    """
    x = np.asarray(delta_x, dtype=float)
    y = np.asarray(values, dtype=float)
    s1sq, s2sq = float(sigma1_um) ** 2, float(sigma2_um) ** 2

    def model(x, v1, v2, l1, l2):
        p1 = 2.0 * np.pi * x / l1
        p2 = 2.0 * np.pi * x / l2
        e1 = np.exp(-(x * x) / (2.0 * s1sq))
        e2 = np.exp(-(x * x) / (2.0 * s2sq))
        return (1.0 - v1 * np.cos(p1) * e1 + v2 * np.cos(p2) * e2
                - 0.5 * v1 * v2 * (np.cos(p1 + p2) + np.cos(p1 - p2)) * e1 * e2)

    p0 = [v1_hint, v2_hint, lambda1_hint_nm * 1e-3, lambda2_hint_nm * 1e-3]
    sum0 = p0[2] * p0[3] / (p0[2] + p0[3])
    _check_sampling(x, sum0, 8.0, 2.0, "cross-fringe fit")
    popt, perr, pcov = _fit(model, x, y, p0, sigma=sigma)
    v1, v2, l1, l2 = popt
    period = l1 * l2 / (l1 + l2)
    g1 = (l2 / (l1 + l2)) ** 2
    g2 = (l1 / (l1 + l2)) ** 2
    period_var = (g1 * g1 * pcov[2, 2] + g2 * g2 * pcov[3, 3]
                  + 2.0 * g1 * g2 * pcov[2, 3])
    asym = abs(v1 - v2)
    asym_var = pcov[0, 0] + pcov[1, 1] - 2.0 * pcov[0, 1]
    vis = v1 * v2
    vis_var = (v2 * v2 * pcov[0, 0] + v1 * v1 * pcov[1, 1]
               + 2.0 * v1 * v2 * pcov[0, 1])
    return FitResult(
        kind="tpi_cross", visibility=float(vis),
        visibility_stderr=float(math.sqrt(max(vis_var, 0.0))),
        period_um=float(period),
        period_stderr=float(math.sqrt(max(period_var, 0.0))),
        baseline=1.0,
        params={
            "v1": (float(v1), float(perr[0])),
            "v2": (float(v2), float(perr[1])),
            "lambda1_um": (float(l1), float(perr[2])),
            "lambda2_um": (float(l2), float(perr[3])),
            "asymmetry": (float(asym), float(math.sqrt(max(asym_var, 0.0)))),
        })


@dataclass(frozen=True)
class ProductCheckReport:
    """Two-photon visibility compared against the product of SPI visibilities."""

    kind: str
    expected: float
    expected_stderr: float
    observed: float
    observed_stderr: float
    n_sigma: float
    passed: bool

    def __str__(self):
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{self.kind}: observed {self.observed:.4f} +/- "
                f"{self.observed_stderr:.4f} vs product "
                f"{self.expected:.4f} +/- {self.expected_stderr:.4f} "
                f"({self.n_sigma:.2f} sigma) {verdict}")


def visibility_product_check(spi1: FitResult, spi2: FitResult | None,
                             tpi: FitResult) -> ProductCheckReport:
    """Check that a TPI fringe's oscillation visibility equals the product of
    the generating SPI visibilities (V1*V2 cross, V_i^2 self) at 3 sigma."""
    v1, e1 = spi1.visibility, spi1.visibility_stderr or 0.0
    if spi2 is None:
        expected = v1 * v1
        expected_err = 2.0 * v1 * e1
    else:
        v2, e2 = spi2.visibility, spi2.visibility_stderr or 0.0
        expected = v1 * v2
        expected_err = math.hypot(v2 * e1, v1 * e2)
    if tpi.kind == "beat":
        # the beat fringe's oscillation amplitude targets half the product
        observed = 2.0 * (tpi.amplitude or 0.0)
        observed_err = 2.0 * (tpi.amplitude_stderr or 0.0)
    else:
        observed = tpi.visibility or 0.0
        observed_err = tpi.visibility_stderr or 0.0
    comb = math.hypot(expected_err, observed_err)
    diff = abs(observed - expected)
    n_sigma = diff / max(comb, 1e-12)
    passed = diff <= max(3.0 * comb, 1e-9)
    return ProductCheckReport(tpi.kind, expected, expected_err, observed,
                              observed_err, n_sigma, passed)
