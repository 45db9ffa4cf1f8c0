"""Monte Carlo survival experiments.

Thermal ensembles are pushed through transport, shuttle and depth-lowering
protocols; each scan point reports a survival (or detection) efficiency with
a Wilson confidence interval. Every trial owns an independent RNG stream
keyed by (master seed, point index, trial index), so results are identical
for any worker count and any execution order.
"""

import hashlib
import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analytics import DetectionModel, detection_probability
from .core import KB, DerivedTrap
from .dynamics import (AtomState, IntegrateOpts, NoiseChannels, integrate,
                       is_bound, make_rng)
from .sweep import (AomModel, SweepProfile, shuttle_profile, static_profile,
                    transport_profile)

_Z95 = 1.959963985   # two-sided 95% normal quantile


@dataclass(frozen=True)
class ExperimentSpec:
    """Knobs shared by every scan; the scan axis itself is the run_* argument."""
    trials: int = 200
    temperature: float = 125e-6       # K
    gravity: bool = True              # informational; the trap config carries g
    noise: NoiseChannels = field(default_factory=NoiseChannels)
    seed: int = 12345
    workers: int = 1
    t_settle: float | None = None     # None -> 5 radial periods
    dt: float | None = None           # None -> axial period / 50 (scan default)
    two_way: bool = True              # distance scan: out-and-back vs one-way
    aom: AomModel | None = field(default_factory=AomModel)
    detection: DetectionModel | None = None   # None -> calibrated on demand
    esc_every: int = 32

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class ScanPoint:
    value: float
    efficiency: float
    ci_low: float
    ci_high: float
    trials: int
    mean_final_energy: float     # units of U0, over surviving trials; nan if none
    survival: float              # bound fraction before any detection draw


@dataclass(frozen=True)
class ScanResult:
    kind: str
    points: tuple
    seed: int
    config_hash: str
    revision: str
    meta: tuple = ()             # extra ("key", "value") pairs for the CSV header

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# kind = {self.kind}\n")
            fh.write(f"# revision = {self.revision}\n")
            fh.write(f"# config_hash = {self.config_hash}\n")
            fh.write(f"# seed = {self.seed}\n")
            for key, value in self.meta:
                fh.write(f"# {key} = {value}\n")
            fh.write("scan_value,efficiency,ci_low,ci_high,trials,"
                     "mean_final_energy_over_U0\n")
            for p in self.points:
                fh.write(f"{p.value:.9e},{p.efficiency:.6f},{p.ci_low:.6f},"
                         f"{p.ci_high:.6f},{p.trials},{p.mean_final_energy:.6e}\n")


def confidence_interval(successes: int, trials: int):
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must be in [0, trials]")
    n = trials
    p = successes / n
    z2 = _Z95 * _Z95
    denom = 1.0 + z2 / n
    center = (p + z2 / (2.0 * n)) / denom
    half = _Z95 * math.sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def sample_thermal(d: DerivedTrap, temperature: float, rng,
                   reject_above: float = 0.8) -> AtomState:
    """Draw one atom from the truncated thermal distribution of a well.

    Per-axis Gaussians in the harmonic approximation of the untilted well at
    the focus; any draw with total well-frame energy at or above
    reject_above * U0 is redrawn. T = 0 returns the exact minimum at rest.
    """
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if temperature == 0.0:
        return AtomState()
    sv = math.sqrt(KB * temperature / d.config.atom_mass)
    sig_ax = sv / d.freq_axial
    sig_rad = sv / d.freq_radial
    cap = reject_above * d.depth
    for _ in range(100000):
        r = rng.normal(0.0, 1.0, 3)
        v = rng.normal(0.0, 1.0, 3)
        s = AtomState(x=r[0] * sig_rad, y=r[1] * sig_rad, z=r[2] * sig_ax,
                      vx=v[0] * sv, vy=v[1] * sv, vz=v[2] * sv)
        _, e = is_bound(d, s, 0.0, gravity_on=False)
        if e < cap:
            return s
    raise RuntimeError("thermal rejection sampling failed to accept a draw")


def axial_energy_temperature(d: DerivedTrap, fraction: float) -> float:
    """Temperature whose mean axial energy (kinetic + potential, harmonic)
    equals fraction * U0: k_B T = fraction * U0."""
    if fraction <= 0:
        raise ValueError("fraction must be positive")
    return fraction * d.depth / KB


# ---------------------------------------------------------------------------
# worker plumbing
# ---------------------------------------------------------------------------

# Context handed to each worker once (fork) instead of per task. Tuple of
# (d, profiles, schedules, settles, detection, detect_z, noise, dt, esc, aom,
#  temperature, seed).
_CTX = None


def _init_worker(ctx):
    global _CTX
    _CTX = ctx


def _run_trial(task):
    pi, ti = task
    (d, profiles, schedules, settles, detection, detect_z, noise, dt, esc,
     aom, temperature, seed) = _CTX
    rng = make_rng(seed, pi, ti)
    s0 = sample_thermal(d, temperature, rng)
    opts = IntegrateOpts(dt=dt, t_settle=settles[pi], esc_every=esc, aom=aom,
                         depth_schedule=schedules[pi])
    tr = integrate(d, profiles[pi], s0, noise=noise, opts=opts, rng=rng)
    survived = tr.outcome == "bound"
    detected = survived
    if detection is not None and survived:
        p, _ = detection_probability(detection, d, detect_z[pi])
        detected = bool(rng.uniform() < p)
    e_u0 = tr.final_energy / d.depth if survived else math.nan
    return pi, survived, detected, e_u0


def _execute(kind, spec, d, values, profiles, schedules, settles,
             detection, detect_z, meta):
    n_pts = len(values)
    if n_pts == 0:
        raise ValueError("scan values must be non-empty")
    dt = spec.dt if spec.dt is not None else (2.0 * math.pi / d.freq_axial) / 50.0
    ctx = (d, profiles, schedules, settles, detection, detect_z, spec.noise,
           dt, spec.esc_every, spec.aom, spec.temperature, spec.seed)
    tasks = [(pi, ti) for pi in range(n_pts) for ti in range(spec.trials)]

    surv = [0] * n_pts
    det = [0] * n_pts
    e_sum = [0.0] * n_pts
    e_n = [0] * n_pts
    if spec.workers > 1:
        chunk = max(1, len(tasks) // (spec.workers * 8))
        with multiprocessing.Pool(spec.workers, initializer=_init_worker,
                                  initargs=(ctx,)) as pool:
            results = pool.imap_unordered(_run_trial, tasks, chunksize=chunk)
            for pi, survived, detected, e_u0 in results:
                if survived:
                    surv[pi] += 1
                    e_sum[pi] += e_u0
                    e_n[pi] += 1
                if detected:
                    det[pi] += 1
    else:
        _init_worker(ctx)
        for task in tasks:
            pi, survived, detected, e_u0 = _run_trial(task)
            if survived:
                surv[pi] += 1
                e_sum[pi] += e_u0
                e_n[pi] += 1
            if detected:
                det[pi] += 1

    points = []
    counted = det if detection is not None else surv
    for pi, v in enumerate(values):
        k = counted[pi]
        lo, hi = confidence_interval(k, spec.trials)
        mean_e = e_sum[pi] / e_n[pi] if e_n[pi] > 0 else math.nan
        points.append(ScanPoint(value=float(v), efficiency=k / spec.trials,
                                ci_low=lo, ci_high=hi, trials=spec.trials,
                                mean_final_energy=mean_e,
                                survival=surv[pi] / spec.trials))
    return ScanResult(kind=kind, points=tuple(points), seed=spec.seed,
                      config_hash=_hash_inputs(d, spec, kind, values, meta),
                      revision=f"atombelt {__version__}",
                      meta=tuple(meta))


def _hash_inputs(d, spec, kind, values, meta):
    stew = repr((sorted(vars(d.config).items()), kind, tuple(values),
                 spec.trials, spec.temperature, spec.seed, spec.dt,
                 spec.t_settle, spec.two_way, spec.noise, spec.aom,
                 tuple(meta)))
    return hashlib.sha256(stew.encode()).hexdigest()[:12]


def _settle_default(spec, d):
    return spec.t_settle if spec.t_settle is not None else \
        5.0 * 2.0 * math.pi / d.freq_radial


def _detection_model(spec, d):
    return spec.detection if spec.detection is not None else \
        DetectionModel.calibrated(d)


# ---------------------------------------------------------------------------
# the four scans
# ---------------------------------------------------------------------------

def run_distance_scan(spec: ExperimentSpec, d: DerivedTrap, distances,
                      a: float = 500.0) -> ScanResult:
    """Transport efficiency vs distance at fixed acceleration.

    two_way (default): out to d and back to the start, survival efficiency.
    One-way: transport to d, then the detection model decides whether the
    surviving atom is seen there; efficiency counts detections and the
    survival column keeps the raw bound fraction.
    """
    lam = d.config.wavelength_trap
    settle = _settle_default(spec, d)
    profiles, detect_z = [], []
    for dist in distances:
        if spec.two_way:
            profiles.append(shuttle_profile(dist, a, 2, lam, spec.aom))
        else:
            profiles.append(transport_profile(dist, a, lam, spec.aom))
        detect_z.append(dist)
    detection = None if spec.two_way else _detection_model(spec, d)
    meta = [("scan", "distance_m"), ("acceleration_m_s2", repr(a)),
            ("protocol", "two_way" if spec.two_way else "one_way_detected")]
    return _execute("distance", spec, d, list(distances), profiles,
                    [None] * len(profiles), [settle] * len(profiles),
                    detection, detect_z, meta)


def run_acceleration_scan(spec: ExperimentSpec, d: DerivedTrap, accelerations,
                          dist: float = 1e-3) -> ScanResult:
    """One-way transport over a fixed distance vs acceleration, detection
    model applied at the destination, AOM depth scaling active."""
    lam = d.config.wavelength_trap
    settle = _settle_default(spec, d)
    profiles = [transport_profile(dist, a, lam, spec.aom) for a in accelerations]
    detection = _detection_model(spec, d)
    meta = [("scan", "acceleration_m_s2"), ("distance_m", repr(dist)),
            ("protocol", "one_way_detected")]
    return _execute("acceleration", spec, d, list(accelerations), profiles,
                    [None] * len(profiles), [settle] * len(profiles),
                    detection, [dist] * len(profiles), meta)


def run_shuttle_scan(spec: ExperimentSpec, d: DerivedTrap, bounce_counts,
                     dist: float = 1e-3, a: float = 5000.0) -> ScanResult:
    """Survival vs number of back-and-forth legs of fixed distance."""
    lam = d.config.wavelength_trap
    settle = _settle_default(spec, d)
    profiles = []
    for n in bounce_counts:
        n = int(n)
        if n < 0:
            raise ValueError("bounce count must be >= 0")
        if n == 0:
            profiles.append(static_profile(1e-6, lam))
        else:
            profiles.append(shuttle_profile(dist, a, n, lam, spec.aom))
    meta = [("scan", "bounce_count"), ("distance_m", repr(dist)),
            ("acceleration_m_s2", repr(a))]
    return _execute("shuttle", spec, d, [int(n) for n in bounce_counts],
                    profiles, [None] * len(profiles), [settle] * len(profiles),
                    None, [0.0] * len(profiles), meta)


def run_lowering_scan(spec: ExperimentSpec, d: DerivedTrap, fractions,
                      t_ramp: float = 20e-3) -> ScanResult:
    """Adiabatic depth-lowering survival: hold, linear ramp U0 -> f U0 over
    t_ramp, hold at the reduced depth, classify against the reduced depth."""
    lam = d.config.wavelength_trap
    settle = _settle_default(spec, d)
    rad_period = 2.0 * math.pi / d.freq_radial
    if t_ramp < 10.0 * rad_period:
        raise ValueError("t_ramp too fast to call adiabatic "
                         f"(need >= {10.0 * rad_period:.2e} s)")
    profiles, schedules = [], []
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError("depth fractions must be in (0, 1]")
        total = settle + t_ramp + settle
        profiles.append(static_profile(total, lam))
        schedules.append(((0.0, 1.0), (settle, 1.0),
                          (settle + t_ramp, f), (total, f)))
    meta = [("scan", "depth_fraction"), ("t_ramp_s", repr(t_ramp))]
    return _execute("lowering", spec, d, list(fractions), profiles, schedules,
                    [0.0] * len(profiles), None, [0.0] * len(profiles), meta)
