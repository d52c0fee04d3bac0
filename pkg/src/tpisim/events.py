"""Monte Carlo generation of timestamped detection events.

Arrivals are modeled as an (inhomogeneous) Poisson process whose instantaneous
rate is the closed-form singles rate evaluated at the jittered path difference
``delta_x + delta(t)``. This deliberately ignores thermal bunching: the source
coherence time (~ps) is far below the 10 ns resolving time, so at a mean
occupancy of ~3e-3 photons per window the bunching excess within a window is
negligible. The two detectors are sampled as independent processes sharing the
same jitter realization, so registered cross coincidences are purely
accidental.

Timestamps are stored as int64 nanoseconds, strictly increasing (simultaneous
arrivals within the same nanosecond are collapsed, which at the default rates
removes well under 0.1% of events).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import fringes
from .errors import ConfigError, InvariantViolation, StreamError
from .fringes import ExperimentConfig, JitterSpec

NS_PER_S = 1_000_000_000
_SEED_MASK = (1 << 64) - 1
_JITTER_TAG = 97
# Nominal event count per generation block; bounds transient memory.
_BLOCK_EVENTS = 4_000_000


def _rng(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed & _SEED_MASK, tag)))


@dataclass(frozen=True, eq=False)
class EventStream:
    """Sorted detection timestamps for one detector over a fixed acquisition."""

    detector: str
    timestamps_ns: np.ndarray
    duration_s: float

    def __post_init__(self):
        ts = np.asarray(self.timestamps_ns, dtype=np.int64)
        object.__setattr__(self, "timestamps_ns", ts)
        if not self.duration_s > 0:
            raise StreamError("duration_s must be > 0")
        if self.detector not in ("D1", "D2"):
            raise StreamError("detector must be 'D1' or 'D2'")
        if ts.size:
            if ts[0] < 0 or ts[-1] > round(self.duration_s * NS_PER_S):
                raise StreamError("timestamps outside [0, duration]")
            if ts.size > 1 and not np.all(np.diff(ts) > 0):
                raise StreamError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return int(self.timestamps_ns.size)

    @property
    def rate_cps(self) -> float:
        return self.timestamps_ns.size / self.duration_s


def sample_jitter(spec: JitterSpec, duration_s: float, seed: int) -> np.ndarray:
    """Per-dwell path offsets (um) of the piecewise-constant jitter process.

    Returns one value per dwell interval covering [0, duration); deterministic
    in ``seed`` and identical for both detectors of the same acquisition.
    Disabled jitter yields an all-zero offset sequence.
    """
    if not duration_s > 0:
        raise ConfigError("duration_s must be > 0")
    dwell_ns = int(round(spec.dwell_time_us * 1e3))
    duration_ns = int(round(duration_s * NS_PER_S))
    n_dwell = -(-duration_ns // dwell_ns)  # ceil
    if not spec.enabled:
        return np.zeros(n_dwell)
    rng = _rng(seed, _JITTER_TAG)
    return rng.uniform(0.0, spec.amplitude_um, n_dwell)


def _dwell_lengths_ns(spec: JitterSpec, duration_ns: int, n_dwell: int) -> np.ndarray:
    dwell_ns = int(round(spec.dwell_time_us * 1e3))
    lengths = np.full(n_dwell, dwell_ns, dtype=float)
    lengths[-1] = duration_ns - dwell_ns * (n_dwell - 1)
    return lengths


@njit(cache=True)
def _dwell_sums_kernel(offsets, weights, dx, k1, k2, g1, g2, v1,
                       v2):  # pragma: no cover - exercised via wrapper
    s1 = 0.0
    s2 = 0.0
    s11 = 0.0
    s22 = 0.0
    s12 = 0.0
    for i in range(offsets.size):
        x = dx + offsets[i]
        c1 = np.cos(k1 * x) * np.exp(-x * x * g1)
        c2 = np.cos(k2 * x) * np.exp(-x * x * g2)
        a1 = 1.0 - v1 * c1
        a2 = 1.0 + v2 * c2
        w = weights[i]
        s1 += w * a1
        s2 += w * a2
        s11 += w * a1 * a1
        s22 += w * a2 * a2
        s12 += w * a1 * a2
    return s1, s2, s11, s22, s12


def dwell_averaged_rates(cfg: ExperimentConfig, delta_x_um: float,
                         offsets_um: np.ndarray, duration_s: float) -> dict:
    """Acquisition-averaged channel rates for one scan point and one jitter draw.

    Averages the closed-form rates over the dwell sequence (weighted by dwell
    length) in one fused pass. For a Poisson process with piecewise-constant
    rate the total count is Poisson with mean ``duration * averaged rate``, so
    these are the exact count expectations realized by :func:`generate_stream`.
    The cross average uses cos(p1+p2) + cos(p1-p2) == 2 cos(p1) cos(p2), i.e.
    the literal singles-product expansion, per dwell.
    """
    duration_ns = int(round(duration_s * NS_PER_S))
    w = _dwell_lengths_ns(cfg.jitter, duration_ns, offsets_um.size)
    w /= w.sum()
    f1, f2 = cfg.filters.f1, cfg.filters.f2
    s1, s2, s11, s22, s12 = _dwell_sums_kernel(
        np.ascontiguousarray(offsets_um, dtype=np.float64), w,
        float(delta_x_um),
        2.0 * np.pi / f1.wavelength_um, 2.0 * np.pi / f2.wavelength_um,
        0.5 / f1.sigma_um**2, 0.5 / f2.sigma_um**2, cfg.v1, cfg.v2)
    tr = cfg.resolving_time_s
    return {
        "singles1": cfg.r1_inf_cps * s1,
        "singles2": cfg.r2_inf_cps * s2,
        "cross": cfg.rc_inf_cps * s12,
        "self1": tr * cfg.r1_inf_cps**2 * s11,
        "self2": tr * cfg.r2_inf_cps**2 * s22,
    }


def _sorted_uniform(rng: np.random.Generator, n: int, lo: float,
                    hi: float) -> np.ndarray:
    """n sorted uniforms on [lo, hi) via the exponential-spacings construction."""
    if n == 0:
        return np.empty(0)
    e = rng.standard_exponential(n + 1)
    s = np.cumsum(e)
    return lo + (hi - lo) * (s[:n] / s[n])


def generate_stream(arm: int, cfg: ExperimentConfig, delta_x_um: float,
                    duration_s: float, seed: int) -> EventStream:
    """Draw one detector's event stream at a fixed scan position.

    Homogeneous sampling when jitter is disabled; otherwise Poisson thinning
    against the per-dwell rate with acceptance bound R_inf*(1+V). Deterministic
    in (seed, arm, delta_x); the jitter realization depends on seed only, so
    both arms of an acquisition share it.
    """
    if not duration_s > 0:
        raise ConfigError("duration_s must be > 0")
    if arm not in (1, 2):
        raise ConfigError("arm must be 1 or 2")
    r_inf = cfg.r1_inf_cps if arm == 1 else cfg.r2_inf_cps
    v = cfg.v1 if arm == 1 else cfg.v2
    bound_cps = r_inf * (1.0 + v)
    duration_ns = int(round(duration_s * NS_PER_S))
    rng = _rng(seed, arm)

    if cfg.jitter.enabled:
        offsets = sample_jitter(cfg.jitter, duration_s, seed)
        dwell_ns = int(round(cfg.jitter.dwell_time_us * 1e3))
        rates = np.asarray(fringes.spi_rate(arm, cfg, delta_x_um + offsets))
        if rates.size and rates.max() > bound_cps * (1.0 + 1e-9):
            raise InvariantViolation("instantaneous rate exceeds thinning bound")
        accept_frac = rates / bound_cps if bound_cps > 0 else rates * 0.0
        sample_cps = bound_cps
    else:
        rate = float(fringes.spi_rate(arm, cfg, delta_x_um))
        if rate > bound_cps * (1.0 + 1e-9):
            raise InvariantViolation("rate exceeds thinning bound")
        accept_frac = None
        sample_cps = rate

    if sample_cps <= 0:
        return EventStream(f"D{arm}", np.empty(0, dtype=np.int64), duration_s)

    expected = sample_cps * duration_s
    n_blocks = max(1, int(np.ceil(expected / _BLOCK_EVENTS)))
    edges = np.linspace(0.0, float(duration_ns), n_blocks + 1)
    chunks = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        n = rng.poisson(sample_cps * (hi - lo) / NS_PER_S)
        t = _sorted_uniform(rng, n, lo, hi)
        if accept_frac is not None and n:
            u = rng.random(n)
            idx = (t / dwell_ns).astype(np.int64)
            t = t[u < accept_frac[idx]]
        if t.size:
            chunks.append(t.astype(np.int64))
    if chunks:
        ts = np.unique(np.concatenate(chunks))
    else:
        ts = np.empty(0, dtype=np.int64)
    return EventStream(f"D{arm}", ts, duration_s)


@njit(cache=True)
def _dead_time_kernel(ts, dead_ns):  # pragma: no cover - exercised via wrapper
    out = np.empty(ts.size, dtype=np.int64)
    k = 0
    last = -(1 << 62)
    for i in range(ts.size):
        t = ts[i]
        if t - last >= dead_ns:
            out[k] = t
            k += 1
            last = t
    return out[:k]


def apply_dead_time(stream: EventStream, dead_time_ns: float) -> EventStream:
    """Greedy dead-time filter: keep an event iff it falls at least
    ``dead_time_ns`` after the last kept event. Idempotent; never reorders."""
    if dead_time_ns < 0:
        raise ConfigError("dead_time_ns must be >= 0")
    if dead_time_ns == 0 or len(stream) == 0:
        return stream
    kept = _dead_time_kernel(stream.timestamps_ns, np.int64(round(dead_time_ns)))
    return EventStream(stream.detector, kept, stream.duration_s)


def write_event_dump(path, streams, seed: int) -> None:
    """Write streams as ``detector,timestamp_ns`` lines sorted by time, after a
    ``# duration_s=<v> seed=<v>`` header."""
    streams = list(streams)
    if not streams:
        raise StreamError("no streams to dump")
    dur = streams[0].duration_s
    if any(s.duration_s != dur for s in streams):
        raise StreamError("streams must share one acquisition duration")
    names = np.concatenate([
        np.full(len(s), s.detector, dtype=object) for s in streams
    ])
    times = np.concatenate([s.timestamps_ns for s in streams])
    order = np.lexsort((names, times))
    with open(path, "w") as fh:
        fh.write(f"# duration_s={dur!r} seed={seed}\n")
        for i in order:
            fh.write(f"{names[i]},{times[i]}\n")


def read_event_dump(path):
    """Inverse of :func:`write_event_dump`; returns ({detector: EventStream}, seed)."""
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# duration_s="):
            raise StreamError("missing event-dump header")
        try:
            fields = dict(part.split("=", 1) for part in header[2:].split())
            duration_s = float(fields["duration_s"])
            seed = int(fields["seed"])
        except (KeyError, ValueError) as exc:
            raise StreamError(f"malformed event-dump header: {header}") from exc
        per_det: dict[str, list[int]] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                det, ts = line.split(",")
                per_det.setdefault(det, []).append(int(ts))
            except ValueError as exc:
                raise StreamError(f"bad event record on line {lineno}") from exc
    streams = {
        det: EventStream(det, np.sort(np.asarray(ts, dtype=np.int64)), duration_s)
        for det, ts in per_det.items()
    }
    return streams, seed
