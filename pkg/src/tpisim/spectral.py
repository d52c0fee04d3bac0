"""Wavelength, envelope, and bandwidth algebra for the two filtered detection arms.

Conventions used throughout the package:

* center wavelengths in nm, path-length differences and envelope scales in um,
  angular frequencies in rad/s, speed of light exact in m/s.
* the fringe envelope of one arm is Gaussian, ``F(dx) = exp(-dx^2 / (2 sigma^2))``,
  so that the two-arm product collapses to ``exp(-dx^2 / sigma12^2)`` with
  ``sigma12 = sqrt(2 s1^2 s2^2 / (s1^2 + s2^2))``.
* coherence length is the 1/e half-width of F, ``sqrt(2) * sigma``.

All functions are pure and accept numpy arrays for ``delta_x_um``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateWavelengthError

# Speed of light in vacuum, m/s (exact).
C_VACUUM_M_S = 299_792_458.0

NM_PER_UM = 1e3
UM_PER_M = 1e6


@dataclass(frozen=True)
class SpectralFilter:
    """One detection arm's interference filter: center wavelength and envelope scale.

    Parameters
    ----------
    center_wavelength_nm : float
        Center wavelength of the transmitted spectrum, nm.
    sigma_um : float
        Gaussian fringe-envelope scale, um. Related to the filter bandwidth via
        ``sigma = c / delta_omega``.
    label : int
        Arm identifier, 1 or 2.
    """

    center_wavelength_nm: float
    sigma_um: float
    label: int = 1

    def __post_init__(self):
        if not self.center_wavelength_nm > 0:
            raise ConfigError("center_wavelength_nm must be > 0")
        if not self.sigma_um > 0:
            raise ConfigError("sigma_um must be > 0")
        if self.label not in (1, 2):
            raise ConfigError("label must be 1 or 2")

    @property
    def wavelength_um(self) -> float:
        return self.center_wavelength_nm / NM_PER_UM

    @property
    def angular_frequency_rad_s(self) -> float:
        """Center angular frequency, 2*pi*c / lambda."""
        return 2.0 * math.pi * C_VACUUM_M_S / (self.center_wavelength_nm * 1e-9)

    @property
    def bandwidth_rad_s(self) -> float:
        """Spectral bandwidth delta_omega = c / sigma."""
        return C_VACUUM_M_S / (self.sigma_um / UM_PER_M)

    @property
    def coherence_length_um(self) -> float:
        """1/e half-width of the fringe envelope, sqrt(2) * sigma."""
        return math.sqrt(2.0) * self.sigma_um


@dataclass(frozen=True)
class SpectralPair:
    """The two detection arms together with their joint envelope scale.

    The pair may be degenerate (equal center wavelengths); beat quantities
    then raise :class:`DegenerateWavelengthError`.
    """

    f1: SpectralFilter
    f2: SpectralFilter

    @property
    def sigma12_um(self) -> float:
        s1sq = self.f1.sigma_um**2
        s2sq = self.f2.sigma_um**2
        return math.sqrt(2.0 * s1sq * s2sq / (s1sq + s2sq))

    @property
    def is_degenerate(self) -> bool:
        return self.f1.center_wavelength_nm == self.f2.center_wavelength_nm

    @property
    def beat_period_um(self) -> float:
        return beat_period(self.f1, self.f2)

    @property
    def delta_omega_rad_s(self) -> float:
        return angular_frequency_difference(self.f1, self.f2)

    @property
    def sum_period_um(self) -> float:
        """Period of the sum-frequency oscillation, lambda1*lambda2/(lambda1+lambda2)."""
        l1, l2 = self.f1.center_wavelength_nm, self.f2.center_wavelength_nm
        return (l1 * l2 / (l1 + l2)) / NM_PER_UM

    @property
    def mean_wavelength_um(self) -> float:
        return 0.5 * (self.f1.wavelength_um + self.f2.wavelength_um)


def phase(wavelength_nm, delta_x_um):
    """Relative phase 2*pi*delta_x / lambda accumulated over the path difference."""
    return 2.0 * math.pi * np.asarray(delta_x_um) / (wavelength_nm / NM_PER_UM)


def envelope(filt: SpectralFilter, delta_x_um):
    """Single-arm fringe envelope F(dx) = exp(-dx^2 / (2 sigma^2)), in (0, 1]."""
    dx = np.asarray(delta_x_um, dtype=float)
    return np.exp(-(dx * dx) / (2.0 * filt.sigma_um**2))


def joint_envelope(pair: SpectralPair, delta_x_um):
    """Two-arm envelope F1*F2 = exp(-dx^2 / sigma12^2); equals the product exactly."""
    dx = np.asarray(delta_x_um, dtype=float)
    s12 = pair.sigma12_um
    return np.exp(-(dx * dx) / (s12 * s12))


def beat_period(f1: SpectralFilter, f2: SpectralFilter) -> float:
    """Spatial-beat period lambda1*lambda2/|lambda1-lambda2| in um.

    This is the delta-x period of cos(phi1 - phi2).
    """
    l1, l2 = f1.center_wavelength_nm, f2.center_wavelength_nm
    if l1 == l2:
        raise DegenerateWavelengthError(
            "beat period undefined for equal center wavelengths"
        )
    return (l1 * l2 / abs(l1 - l2)) / NM_PER_UM


def angular_frequency_difference(f1: SpectralFilter, f2: SpectralFilter) -> float:
    """|omega1 - omega2| = 2*pi*c / beat_period, rad/s."""
    period_m = beat_period(f1, f2) / UM_PER_M
    return 2.0 * math.pi * C_VACUUM_M_S / period_m


def tilted_center_wavelength(lambda0_nm: float, tilt_angle_deg: float,
                             n_eff: float) -> float:
    """Center wavelength of a thin interference filter tilted by ``tilt_angle_deg``.

    lambda(theta) = lambda0 * sqrt(1 - (sin(theta)/n_eff)^2); monotone
    decreasing in theta, equal to lambda0 at normal incidence.
    """
    if not (0.0 <= tilt_angle_deg < 90.0):
        raise ConfigError("tilt_angle_deg must be in [0, 90)")
    if n_eff < 1.0:
        raise ConfigError("n_eff must be >= 1")
    s = math.sin(math.radians(tilt_angle_deg)) / n_eff
    return lambda0_nm * math.sqrt(1.0 - s * s)


def effective_index_for_shift(lambda0_nm: float, tilt_angle_deg: float,
                              shifted_nm: float) -> float:
    """Effective index that maps lambda0 to ``shifted_nm`` at the given tilt.

    Inverse of :func:`tilted_center_wavelength`; used to calibrate n_eff from a
    measured (lambda0, lambda(theta)) pair.
    """
    if not (0.0 < tilt_angle_deg < 90.0):
        raise ConfigError("tilt_angle_deg must be in (0, 90) for calibration")
    if not (0.0 < shifted_nm < lambda0_nm):
        raise ConfigError("shifted wavelength must lie in (0, lambda0)")
    ratio_sq = (shifted_nm / lambda0_nm) ** 2
    return math.sin(math.radians(tilt_angle_deg)) / math.sqrt(1.0 - ratio_sq)
