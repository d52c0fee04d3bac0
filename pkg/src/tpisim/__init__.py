"""Simulator and analysis toolkit for two-photon interference of uncorrelated
photons in a path-length-scanned interferometer.

Closed-form fringe models, Monte Carlo detection-event streams, windowed
coincidence counting, and fringe fitting with uncertainties.
"""

from .analysis import (FitResult, NormalizedScan, ScanRow, fit_beat,
                       fit_cross_fringe, fit_envelope, fit_oscillation,
                       fit_self_oscillation, fit_spi_coarse, normalize,
                       visibility_product_check)
from .coincidence import (CoincidenceResult, count_cross, count_self_delayed,
                          expected_accidentals)
from .configio import (build_config, load_config, reference_config,
                       parse_config)
from .events import (EventStream, apply_dead_time, generate_stream,
                     read_event_dump, sample_jitter, write_event_dump)
from .fringes import (ExperimentConfig, JitterSpec, RateSample,
                      accidental_rate, rate_sample, spi_rate, tpi_rate_cross,
                      tpi_rate_degenerate, tpi_rate_randomized_cross,
                      tpi_rate_randomized_self, tpi_rate_self)
from .scan import ScanPlan, read_scan_csv, reproduce_figure, run_scan, write_scan_csv
from .spectral import (SpectralFilter, SpectralPair, angular_frequency_difference,
                       beat_period, envelope, joint_envelope, phase,
                       tilted_center_wavelength)

__version__ = "0.1.0"

__all__ = [
    "CoincidenceResult", "EventStream", "ExperimentConfig", "FitResult",
    "JitterSpec", "NormalizedScan", "ScanPlan", "ScanRow", "SpectralFilter",
    "SpectralPair", "accidental_rate", "angular_frequency_difference",
    "apply_dead_time", "beat_period", "build_config", "count_cross",
    "count_self_delayed", "envelope", "expected_accidentals", "fit_beat",
    "fit_cross_fringe", "fit_envelope", "fit_oscillation",
    "fit_self_oscillation", "fit_spi_coarse", "generate_stream",
    "RateSample", "joint_envelope", "load_config", "normalize",
    "reference_config", "parse_config", "phase", "rate_sample",
    "read_event_dump", "read_scan_csv",
    "reproduce_figure", "run_scan", "sample_jitter", "spi_rate",
    "tilted_center_wavelength", "tpi_rate_cross", "tpi_rate_degenerate",
    "tpi_rate_randomized_cross", "tpi_rate_randomized_self", "tpi_rate_self",
    "visibility_product_check", "write_event_dump", "write_scan_csv",
]
