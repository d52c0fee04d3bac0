"""Closed-form singles and coincidence rate functions.

The interferometer's two output ports carry opposite fringe signs:

* arm 1 singles:  R1 = R1_inf * (1 - V1 cos(phi1) F1)
* arm 2 singles:  R2 = R2_inf * (1 + V2 cos(phi2) F2)

Because the photons are uncorrelated, every registered coincidence is
accidental, so the cross-detector coincidence rate is the product of the two
singles rates times the resolving time. Expanding that product yields the
three-phase-term coincidence fringe implemented by :func:`tpi_rate_cross`;
the product identity is the master consistency check of this module. The
delayed single-detector coincidence is the square of one singles rate times
the resolving time. Under phase randomization only the difference-frequency
(spatial beat) term survives in the cross channel, and only the Gaussian
peak in the self channels.

All rate functions are pure, accept scalar or ndarray ``delta_x_um``, and
return counts/s.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .spectral import SpectralPair, envelope, phase

NS_PER_S = 1e9


@dataclass(frozen=True)
class JitterSpec:
    """Piecewise-constant random path offset driven by the phase-scrambling actuator.

    ``amplitude_um`` is the upper edge of the uniform offset range [0, L];
    ``dwell_time_us`` is the resample interval. When enabled inside an
    :class:`ExperimentConfig`, the amplitude must span at least ten optical
    wavelengths (so the single-wavelength phase terms average out) while
    staying below a fifth of the beat period (so the beat fringe survives);
    those context-dependent bounds are enforced by the config, not here.
    """

    enabled: bool = False
    amplitude_um: float = 0.0
    dwell_time_us: float = 100.0

    def __post_init__(self):
        if self.amplitude_um < 0:
            raise ConfigError("jitter amplitude_um must be >= 0")
        if not self.dwell_time_us > 0:
            raise ConfigError("jitter dwell_time_us must be > 0")
        if self.enabled and self.amplitude_um == 0:
            raise ConfigError("enabled jitter requires amplitude_um > 0")


@dataclass(frozen=True)
class ExperimentConfig:
    """Interferometer plus detection parameters for one experiment.

    ``rc_inf_override_cps`` replaces the default far-envelope coincidence
    baseline R1_inf * R2_inf * T_R. Overriding it breaks the accidental
    identity (and with it the product factorization between singles and
    cross coincidences); it exists only for what-if studies.
    """

    filters: SpectralPair
    v1: float = 0.98
    v2: float = 0.90
    r1_inf_cps: float = 3e5
    r2_inf_cps: float = 3e5
    resolving_time_ns: float = 10.0
    self_delay_ns: float = 60.0
    dead_time_ns: float = 50.0
    jitter: JitterSpec = field(default_factory=JitterSpec)
    seed: int = 0
    rc_inf_override_cps: float | None = None

    def __post_init__(self):
        for name in ("v1", "v2"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0,1]")
        for name in ("r1_inf_cps", "r2_inf_cps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if not self.resolving_time_ns > 0:
            raise ConfigError("resolving_time_ns must be > 0")
        if self.dead_time_ns < 0:
            raise ConfigError("dead_time_ns must be >= 0")
        if not self.self_delay_ns > self.dead_time_ns:
            raise ConfigError("self_delay_ns must exceed dead_time_ns")
        if self.rc_inf_override_cps is not None and self.rc_inf_override_cps < 0:
            raise ConfigError("rc_inf_override_cps must be >= 0")
        if self.jitter.enabled:
            lam_max_um = max(self.filters.f1.wavelength_um,
                             self.filters.f2.wavelength_um)
            lo = 10.0 * lam_max_um
            if self.jitter.amplitude_um < lo * (1.0 - 1e-12):
                raise ConfigError(
                    f"jitter amplitude_um must be >= 10*max(lambda) = {lo:.4f} um"
                )
            if not self.filters.is_degenerate:
                hi = self.filters.beat_period_um / 5.0
                if self.jitter.amplitude_um > hi * (1.0 + 1e-12):
                    raise ConfigError(
                        f"jitter amplitude_um must be <= beat_period/5 = {hi:.4f} um"
                    )

    @property
    def resolving_time_s(self) -> float:
        return self.resolving_time_ns / NS_PER_S

    @property
    def uses_accidental_identity(self) -> bool:
        return self.rc_inf_override_cps is None

    @property
    def rc_inf_cps(self) -> float:
        """Far-envelope cross-coincidence baseline, R1_inf*R2_inf*T_R by default."""
        if self.rc_inf_override_cps is not None:
            return self.rc_inf_override_cps
        return self.r1_inf_cps * self.r2_inf_cps * self.resolving_time_s

    def rc_self_inf_cps(self, arm: int) -> float:
        """Far-envelope self-coincidence baseline, Ri_inf^2 * T_R."""
        r = self.r1_inf_cps if arm == 1 else self.r2_inf_cps
        return r * r * self.resolving_time_s


@dataclass(frozen=True)
class RateSample:
    """All channel rates evaluated at one scan position."""

    delta_x_um: float
    r1_cps: float
    r2_cps: float
    rc_cross_cps: float
    rc_self1_cps: float
    rc_self2_cps: float

    def __post_init__(self):
        for name in ("r1_cps", "r2_cps", "rc_cross_cps", "rc_self1_cps",
                     "rc_self2_cps"):
            value = getattr(self, name)
            if value < 0.0:
                # perfect-null points may round a hair below zero
                if value > -1e-9 * (1.0 + abs(value)):
                    object.__setattr__(self, name, 0.0)
                else:
                    raise ConfigError(f"negative rate {name} = {value}")

    def as_channel_dict(self) -> dict:
        return {
            "singles1": self.r1_cps,
            "singles2": self.r2_cps,
            "cross": self.rc_cross_cps,
            "self1": self.rc_self1_cps,
            "self2": self.rc_self2_cps,
        }


def rate_sample(cfg: ExperimentConfig, delta_x_um: float,
                randomized: bool = False) -> RateSample:
    """Evaluate every channel's closed-form rate at one position; the
    randomized flag selects the ideal phase-randomized forms."""
    x = float(delta_x_um)
    if randomized:
        return RateSample(
            x, float(cfg.r1_inf_cps), float(cfg.r2_inf_cps),
            float(tpi_rate_randomized_cross(cfg, x)),
            float(tpi_rate_randomized_self(1, cfg, x)),
            float(tpi_rate_randomized_self(2, cfg, x)))
    return RateSample(
        x, float(spi_rate(1, cfg, x)), float(spi_rate(2, cfg, x)),
        float(tpi_rate_cross(cfg, x)),
        float(tpi_rate_self(1, cfg, x)), float(tpi_rate_self(2, cfg, x)))


def _arm(cfg: ExperimentConfig, arm: int):
    if arm == 1:
        return cfg.r1_inf_cps, cfg.v1, cfg.filters.f1, -1.0
    if arm == 2:
        return cfg.r2_inf_cps, cfg.v2, cfg.filters.f2, +1.0
    raise ConfigError("arm must be 1 or 2")


def spi_rate(arm: int, cfg: ExperimentConfig, delta_x_um):
    """Singles rate at one output port; opposite fringe signs at the two ports."""
    r_inf, v, filt, sign = _arm(cfg, arm)
    ph = phase(filt.center_wavelength_nm, delta_x_um)
    return r_inf * (1.0 + sign * v * np.cos(ph) * envelope(filt, delta_x_um))


def tpi_rate_cross(cfg: ExperimentConfig, delta_x_um):
    """Cross-detector coincidence rate with both SPI terms and the
    sum/difference-frequency oscillations."""
    f1, f2 = cfg.filters.f1, cfg.filters.f2
    ph1 = phase(f1.center_wavelength_nm, delta_x_um)
    ph2 = phase(f2.center_wavelength_nm, delta_x_um)
    e1 = envelope(f1, delta_x_um)
    e2 = envelope(f2, delta_x_um)
    v1, v2 = cfg.v1, cfg.v2
    return cfg.rc_inf_cps * (
        1.0
        - v1 * np.cos(ph1) * e1
        + v2 * np.cos(ph2) * e2
        - 0.5 * v1 * v2 * (np.cos(ph1 + ph2) + np.cos(ph1 - ph2)) * e1 * e2
    )


def tpi_rate_degenerate(cfg: ExperimentConfig, delta_x_um):
    """Cross-coincidence rate for identical filters: super-resolved fringe with
    an asymmetry term present only when V1 != V2."""
    pair = cfg.filters
    if (not pair.is_degenerate) or pair.f1.sigma_um != pair.f2.sigma_um:
        raise ConfigError("tpi_rate_degenerate requires identical filters")
    f = pair.f1
    ph = phase(f.center_wavelength_nm, delta_x_um)
    e = envelope(f, delta_x_um)
    v1, v2 = cfg.v1, cfg.v2
    return cfg.rc_inf_cps * (
        1.0
        - (v1 - v2) * np.cos(ph) * e
        - 0.5 * v1 * v2 * (1.0 + np.cos(2.0 * ph)) * e * e
    )


def tpi_rate_self(arm: int, cfg: ExperimentConfig, delta_x_um):
    """Delayed self-coincidence rate at one detector; equals the squared singles
    rate times the resolving time, hence the per-arm fringe sign."""
    r_inf, v, filt, sign = _arm(cfg, arm)
    ph = phase(filt.center_wavelength_nm, delta_x_um)
    e = envelope(filt, delta_x_um)
    return cfg.rc_self_inf_cps(arm) * (
        1.0
        + sign * 2.0 * v * np.cos(ph) * e
        + 0.5 * v * v * (1.0 + np.cos(2.0 * ph)) * e * e
    )


def tpi_rate_randomized_cross(cfg: ExperimentConfig, delta_x_um):
    """Cross-coincidence rate under ideal phase randomization: only the
    spatial-beat term survives."""
    pair = cfg.filters
    ph1 = phase(pair.f1.center_wavelength_nm, delta_x_um)
    ph2 = phase(pair.f2.center_wavelength_nm, delta_x_um)
    e12 = envelope(pair.f1, delta_x_um) * envelope(pair.f2, delta_x_um)
    return cfg.rc_inf_cps * (
        1.0 - 0.5 * cfg.v1 * cfg.v2 * np.cos(ph1 - ph2) * e12
    )


def tpi_rate_randomized_self(arm: int, cfg: ExperimentConfig, delta_x_um):
    """Self-coincidence rate under ideal phase randomization: a phase-insensitive
    Gaussian peak of height 1 + V^2/2 over the accidental baseline."""
    _, v, filt, _ = _arm(cfg, arm)
    e = envelope(filt, delta_x_um)
    return cfg.rc_self_inf_cps(arm) * (1.0 + 0.5 * v * v * e * e)


def accidental_rate(r1_cps: float, r2_cps: float, resolving_time_ns: float) -> float:
    """Accidental coincidence rate R1 * R2 * T_R for independent detections."""
    if r1_cps < 0 or r2_cps < 0 or resolving_time_ns < 0:
        raise ConfigError("accidental_rate arguments must be >= 0")
    return r1_cps * r2_cps * (resolving_time_ns / NS_PER_S)
