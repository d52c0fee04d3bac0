"""Scan orchestration: analytic, count-level, and event-stream Monte Carlo.

Modes:

* ``analytic``   - noise-free expected counts (rate * duration, real-valued).
* ``poisson``    - per-point Poisson draws around the exact count expectations;
                   the count-level statistical twin of the stream simulation
                   (same means, no dead-time losses).
* ``montecarlo`` - full event-stream simulation: thinned Poisson streams,
                   dead-time filtering, and windowed coincidence counting.

Determinism: (config, plan, master seed) fix every output byte. Each scan
point derives its own seed from (master_seed, point index); within a point the
two detectors use independent substreams that share one jitter realization, so
points may be computed in any order or in parallel with identical results.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import fringes
from .analysis import CHANNELS, ScanRow
from .coincidence import count_cross, count_self_delayed
from .configio import FIG5_VISIBILITIES, reference_config
from .errors import ConfigError
from .events import (apply_dead_time, dwell_averaged_rates, generate_stream,
                     sample_jitter)
from .fringes import ExperimentConfig

SCAN_CSV_HEADER = ("delta_x_um,singles1,singles2,coinc_cross,"
                   "coinc_self1,coinc_self2,duration_s,seed")
FIT_CSV_HEADER = "kind,param,value,stderr"

MODES = ("analytic", "poisson", "montecarlo")
_SEED_MASK = (1 << 64) - 1
# Substream tags for count-level draws; stream mode uses tags 1, 2 (arms)
# and 97 (jitter) inside events.py.
_CHANNEL_TAG = {"singles1": 11, "singles2": 12, "cross": 13,
                "self1": 14, "self2": 15}

COARSE_RANGE_UM = (-720.0, 720.0, 2.0)
# phase-resolved bundles ride on a sparse coarse range so the far-envelope
# baseline needed for normalization is present in the same dataset
SPARSE_RANGE_UM = (-720.0, 720.0, 36.0)
FINE_WINDOW_UM = (0.0, 1.0, 0.04)
FINE_WINDOW_WIDE_UM = (0.0, 2.0, 0.04)


@dataclass(frozen=True)
class ScanPlan:
    """What to scan and how: grid, mode, channels, per-point acquisition."""

    mode: str = "analytic"
    range_um: tuple = COARSE_RANGE_UM
    fine_window_um: tuple | None = None
    randomize_phase: bool = False
    duration_per_point_s: float = 60.0
    channels: tuple = CHANNELS
    master_seed: int = 12345

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown scan mode '{self.mode}'")
        lo, hi, step = self.range_um
        if not step > 0 or hi < lo:
            raise ConfigError("range_um must be (min, max, step) with step > 0")
        if self.fine_window_um is not None:
            _, half, fstep = self.fine_window_um
            if not (half > 0 and fstep > 0):
                raise ConfigError("fine_window_um must be (center, half_width,"
                                  " step) with positive half_width and step")
        if not self.duration_per_point_s > 0:
            raise ConfigError("duration_per_point_s must be > 0")
        bad = set(self.channels) - set(CHANNELS)
        if bad or not self.channels:
            raise ConfigError(f"invalid channels {sorted(bad)}")


def _grid_1d(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def scan_grid(plan: ScanPlan) -> np.ndarray:
    """All delta_x points of the plan: coarse range plus optional fine window."""
    lo, hi, step = plan.range_um
    pts = _grid_1d(lo, hi, step)
    if plan.fine_window_um is not None:
        c, half, fstep = plan.fine_window_um
        pts = np.concatenate([pts, _grid_1d(c - half, c + half, fstep)])
    return np.unique(pts)


def derive_seed(master_seed: int, index: int) -> int:
    """Per-point (or per-bundle) seed derived from the master seed."""
    ss = np.random.SeedSequence((master_seed & _SEED_MASK, index))
    return int(ss.generate_state(1, np.uint64)[0])


def _validate_plan_against_config(plan: ScanPlan, cfg: ExperimentConfig):
    if plan.fine_window_um is not None:
        fstep = plan.fine_window_um[2]
        lam_min_um = min(cfg.filters.f1.wavelength_um,
                         cfg.filters.f2.wavelength_um)
        if fstep > lam_min_um / 10.0 + 1e-12:
            raise ConfigError(
                f"fine step {fstep} um too coarse for phase resolution; "
                f"need <= lambda_min/10 = {lam_min_um / 10.0:.4f} um"
            )


def _analytic_rates(cfg: ExperimentConfig, x: float, randomized: bool) -> dict:
    return fringes.rate_sample(cfg, x, randomized=randomized).as_channel_dict()


def _point_counts(plan: ScanPlan, cfg: ExperimentConfig, x: float,
                  row_seed: int) -> dict:
    t = plan.duration_per_point_s
    counts = dict.fromkeys(CHANNELS, 0.0)
    if plan.mode == "analytic":
        rates = _analytic_rates(cfg, x, cfg.jitter.enabled)
        for ch in plan.channels:
            counts[ch] = rates[ch] * t
        return counts
    if plan.mode == "poisson":
        if cfg.jitter.enabled:
            offsets = sample_jitter(cfg.jitter, t, row_seed)
            rates = dwell_averaged_rates(cfg, x, offsets, t)
        else:
            rates = _analytic_rates(cfg, x, False)
        for ch in plan.channels:
            rng = np.random.default_rng(
                np.random.SeedSequence((row_seed, _CHANNEL_TAG[ch])))
            counts[ch] = float(rng.poisson(rates[ch] * t))
        return counts
    # montecarlo: streams -> dead time -> coincidence counting
    need1 = {"singles1", "cross", "self1"} & set(plan.channels)
    need2 = {"singles2", "cross", "self2"} & set(plan.channels)
    s1 = s2 = None
    if need1:
        s1 = apply_dead_time(generate_stream(1, cfg, x, t, row_seed),
                             cfg.dead_time_ns)
    if need2:
        s2 = apply_dead_time(generate_stream(2, cfg, x, t, row_seed),
                             cfg.dead_time_ns)
    if "singles1" in plan.channels:
        counts["singles1"] = float(len(s1))
    if "singles2" in plan.channels:
        counts["singles2"] = float(len(s2))
    if "cross" in plan.channels:
        counts["cross"] = float(count_cross(s1, s2,
                                            cfg.resolving_time_ns).pair_count)
    if "self1" in plan.channels:
        counts["self1"] = float(count_self_delayed(
            s1, cfg.self_delay_ns, cfg.resolving_time_ns).pair_count)
    if "self2" in plan.channels:
        counts["self2"] = float(count_self_delayed(
            s2, cfg.self_delay_ns, cfg.resolving_time_ns).pair_count)
    return counts


def run_scan(plan: ScanPlan, cfg: ExperimentConfig) -> list[ScanRow]:
    """Run one scan; one ScanRow per grid point, deterministic per master seed."""
    _validate_plan_against_config(plan, cfg)
    cfg = dataclasses.replace(
        cfg, jitter=dataclasses.replace(cfg.jitter,
                                        enabled=plan.randomize_phase))
    rows = []
    for idx, x in enumerate(scan_grid(plan)):
        row_seed = derive_seed(plan.master_seed, idx)
        try:
            counts = _point_counts(plan, cfg, float(x), row_seed)
        except Exception as exc:
            raise type(exc)(f"scan point {idx} (delta_x={x} um): {exc}") \
                from exc
        rows.append(ScanRow(
            delta_x_um=float(x),
            singles1=counts["singles1"], singles2=counts["singles2"],
            coinc_cross=counts["cross"], coinc_self1=counts["self1"],
            coinc_self2=counts["self2"],
            duration_s=plan.duration_per_point_s, seed=row_seed))
    return rows


def _format_count(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def rows_to_csv(rows) -> str:
    lines = [SCAN_CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            repr(r.delta_x_um),
            _format_count(r.singles1), _format_count(r.singles2),
            _format_count(r.coinc_cross), _format_count(r.coinc_self1),
            _format_count(r.coinc_self2),
            repr(r.duration_s), str(r.seed)]))
    return "\n".join(lines) + "\n"


def write_scan_csv(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write(rows_to_csv(rows))


def read_scan_csv(path) -> list[ScanRow]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SCAN_CSV_HEADER:
            raise ConfigError(f"unexpected scan CSV header: {header}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise ConfigError(f"line {lineno}: expected 8 columns")
            rows.append(ScanRow(
                delta_x_um=float(parts[0]),
                singles1=float(parts[1]), singles2=float(parts[2]),
                coinc_cross=float(parts[3]), coinc_self1=float(parts[4]),
                coinc_self2=float(parts[5]),
                duration_s=float(parts[6]), seed=int(parts[7])))
    return rows


_FIG3_CHANNELS = ("singles1", "singles2", "self1", "self2")


def reproduce_figure(figure, cfg: ExperimentConfig | None = None,
                     mode: str = "analytic", master_seed: int = 2024,
                     duration_per_point_s: float = 60.0,
                     out_dir=None) -> dict[str, list[ScanRow]]:
    """Generate the scan bundles behind the three reference figures.

    figure 3: phase-locked singles and delayed self-coincidences (coarse scan
    plus a phase-resolved window); figure 4: phase-locked cross coincidences;
    figure 5: phase-randomized self peaks and the spatial beat (figure-5
    campaigns quote their own visibilities, so that bundle overrides v1/v2).
    Returns {dataset_name: rows} and optionally writes one CSV per dataset.
    """
    fig = str(figure)
    if cfg is None:
        cfg = reference_config()
    if fig == "3":
        bundles = {
            "coarse": ScanPlan(mode=mode, range_um=COARSE_RANGE_UM,
                               channels=_FIG3_CHANNELS,
                               duration_per_point_s=duration_per_point_s,
                               master_seed=derive_seed(master_seed, 0)),
            "fine": ScanPlan(mode=mode, range_um=SPARSE_RANGE_UM,
                             fine_window_um=FINE_WINDOW_UM,
                             channels=_FIG3_CHANNELS,
                             duration_per_point_s=duration_per_point_s,
                             master_seed=derive_seed(master_seed, 1)),
        }
    elif fig == "4":
        bundles = {
            "coarse": ScanPlan(mode=mode, range_um=COARSE_RANGE_UM,
                               channels=("cross",),
                               duration_per_point_s=duration_per_point_s,
                               master_seed=derive_seed(master_seed, 0)),
            "fine": ScanPlan(mode=mode, range_um=SPARSE_RANGE_UM,
                             fine_window_um=FINE_WINDOW_WIDE_UM,
                             channels=("cross",),
                             duration_per_point_s=duration_per_point_s,
                             master_seed=derive_seed(master_seed, 1)),
        }
    elif fig == "5":
        cfg = dataclasses.replace(cfg, v1=FIG5_VISIBILITIES[0],
                                  v2=FIG5_VISIBILITIES[1])
        bundles = {
            "coarse": ScanPlan(mode=mode, range_um=COARSE_RANGE_UM,
                               channels=("self1", "self2", "cross"),
                               randomize_phase=True,
                               duration_per_point_s=duration_per_point_s,
                               master_seed=derive_seed(master_seed, 0)),
        }
    else:
        raise ConfigError(f"unknown figure '{figure}' (expected 3, 4, or 5)")

    datasets = {}
    for name, plan in bundles.items():
        datasets[name] = run_scan(plan, cfg)
        if out_dir is not None:
            import os
            os.makedirs(out_dir, exist_ok=True)
            write_scan_csv(os.path.join(out_dir, f"fig{fig}_{name}.csv"),
                           datasets[name])
    return datasets
