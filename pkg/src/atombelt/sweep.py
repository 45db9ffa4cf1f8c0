"""Detuning schedules that move the standing wave, and the AOM that makes them.

A profile is an ordered list of segments with linearly interpolated mutual
detuning dnu(t). Phase phi(t) = pi * integral(dnu) and pattern position
z_sw = (lambda/2pi) * phi are exact piecewise quadratics, so there is no
accumulated quadrature error anywhere downstream.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SweepProfile:
    segments: tuple          # of (duration_s, dnu_start_Hz, dnu_end_Hz)
    wavelength: float        # m
    _t0: np.ndarray = field(init=False, repr=False, compare=False)
    _t1: np.ndarray = field(init=False, repr=False, compare=False)
    _nu0: np.ndarray = field(init=False, repr=False, compare=False)
    _slope: np.ndarray = field(init=False, repr=False, compare=False)
    _phi0: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.segments:
            raise ValueError("profile needs at least one segment")
        t0s, t1s, nu0s, slopes, phi0s = [], [], [], [], []
        t = 0.0
        phi = 0.0
        prev_end = None
        for dur, a, b in self.segments:
            if dur <= 0:
                raise ValueError("segment duration must be positive")
            if not (math.isfinite(a) and math.isfinite(b)):
                raise ValueError("detuning must be finite")
            if prev_end is not None and a != prev_end:
                raise ValueError("detuning must be continuous across segments")
            t0s.append(t)
            t1s.append(t + dur)
            nu0s.append(a)
            slopes.append((b - a) / dur)
            phi0s.append(phi)
            phi += math.pi * 0.5 * (a + b) * dur
            t += dur
            prev_end = b
        object.__setattr__(self, "_t0", np.array(t0s))
        object.__setattr__(self, "_t1", np.array(t1s))
        object.__setattr__(self, "_nu0", np.array(nu0s))
        object.__setattr__(self, "_slope", np.array(slopes))
        object.__setattr__(self, "_phi0", np.array(phi0s))

    @property
    def total_duration(self) -> float:
        return float(self._t1[-1])

    def max_detuning(self) -> float:
        ends = self._nu0 + self._slope * (self._t1 - self._t0)
        return float(max(np.max(np.abs(self._nu0)), np.max(np.abs(ends))))

    def kernel_arrays(self):
        """Per-segment coefficient arrays consumed by the integrator backends."""
        return (self._t0.copy(), self._t1.copy(), self._nu0.copy(),
                self._slope.copy(), self._phi0.copy())


def sw_state(p: SweepProfile, t: float):
    """(phi, z_sw, v_sw, a_sw) of the interference pattern at time t.

    Beyond the end of the profile the pattern is frozen where it stopped.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    lam = p.wavelength
    if t >= p.total_duration:
        # frozen end state
        i = len(p._t0) - 1
        tau = p._t1[i] - p._t0[i]
        nu_end = p._nu0[i] + p._slope[i] * tau
        phi = p._phi0[i] + math.pi * (p._nu0[i] * tau + 0.5 * p._slope[i] * tau * tau)
        if t == p.total_duration:
            return phi, lam * phi / (2 * math.pi), lam * nu_end / 2, lam * p._slope[i] / 2
        return phi, lam * phi / (2 * math.pi), 0.0, 0.0
    i = int(np.searchsorted(p._t1, t, side="right"))
    tau = t - p._t0[i]
    nu = p._nu0[i] + p._slope[i] * tau
    phi = p._phi0[i] + math.pi * (p._nu0[i] * tau + 0.5 * p._slope[i] * tau * tau)
    return phi, lam * phi / (2 * math.pi), lam * nu / 2, lam * p._slope[i] / 2


def cycle_count(p: SweepProfile) -> float:
    """Beat cycles a heterodyne counter would accumulate, |integral dnu| per leg."""
    total = 0.0
    for i in range(len(p._t0)):
        tau = p._t1[i] - p._t0[i]
        total += abs(p._nu0[i] * tau + 0.5 * p._slope[i] * tau * tau)
    return total


# ---------------------------------------------------------------------------
# AOM bandwidth model
# ---------------------------------------------------------------------------

DEFAULT_CURVE = ((0.0, 1.0), (10e6, 0.5))  # (RF offset Hz, deflection efficiency)


@dataclass(frozen=True)
class AomModel:
    center_freq: float = 80e6
    max_offset: float = 10e6            # Hz of RF
    efficiency_curve: tuple = DEFAULT_CURVE
    double_pass: bool = True
    depth_mode: str = "power"           # "power": factor=eta, "field": factor=sqrt(eta)

    def __post_init__(self):
        xs = [x for x, _ in self.efficiency_curve]
        ys = [y for _, y in self.efficiency_curve]
        if xs != sorted(xs) or xs[0] != 0.0 or ys[0] != 1.0:
            raise ValueError("efficiency curve must start at (0, 1) with increasing offsets")
        if any(ys[i + 1] > ys[i] for i in range(len(ys) - 1)):
            raise ValueError("efficiency must be monotone non-increasing")
        if self.depth_mode not in ("power", "field"):
            raise ValueError("depth_mode must be 'power' or 'field'")

    def optical_span(self) -> float:
        """Largest mutual optical detuning the modulator can produce, Hz."""
        return self.max_offset * (2.0 if self.double_pass else 1.0)

    def efficiency(self, rf_offset: float) -> float:
        xs = [x for x, _ in self.efficiency_curve]
        ys = [y for _, y in self.efficiency_curve]
        f = abs(rf_offset)
        if f >= xs[-1]:
            if f > xs[-1]:
                warnings.warn("AOM efficiency curve extrapolated; clamping at the last point",
                              stacklevel=2)
            return ys[-1]
        i = 0
        while xs[i + 1] < f:
            i += 1
        frac = (f - xs[i]) / (xs[i + 1] - xs[i])
        return ys[i] + frac * (ys[i + 1] - ys[i])


def depth_scaling(m: AomModel, dnu: float) -> float:
    """Trap-depth factor while the mutual detuning is dnu."""
    divisor = 2.0 if m.double_pass else 1.0
    eta = m.efficiency(abs(dnu) / divisor)
    return eta if m.depth_mode == "power" else math.sqrt(eta)


def _check_aom(dnu_max: float, aom: AomModel | None):
    if aom is not None and dnu_max > aom.optical_span():
        raise ValueError(
            f"sweep needs {dnu_max:.6g} Hz mutual detuning but the AOM tops out at "
            f"{aom.optical_span():.6g} Hz optical ({aom.max_offset:.6g} Hz RF"
            f"{' double-passed' if aom.double_pass else ''})")


# ---------------------------------------------------------------------------
# profile constructors
# ---------------------------------------------------------------------------

def transport_profile(d: float, a: float, lam: float,
                      aom: AomModel | None = None) -> SweepProfile:
    """Symmetric accelerate/decelerate ramp moving the pattern by d meters.

    t_d = 2 sqrt(|d|/a); the detuning peak is set so the integrated position
    lands on d exactly.
    """
    if d == 0:
        raise ValueError("d must be nonzero")
    if a <= 0:
        raise ValueError("a must be positive")
    t_d = 2.0 * math.sqrt(abs(d) / a)
    nu_max = 4.0 * d / (lam * t_d)
    _check_aom(abs(nu_max), aom)
    half = t_d / 2.0
    return SweepProfile(((half, 0.0, nu_max), (half, nu_max, 0.0)), lam)


def shuttle_profile(d: float, a: float, n: int, lam: float,
                    aom: AomModel | None = None) -> SweepProfile:
    """n back-and-forth transport legs of distance d with alternating sign."""
    if n < 1:
        raise ValueError("n must be >= 1")
    leg = transport_profile(d, a, lam, aom)
    segs = []
    for i in range(n):
        sign = 1.0 if i % 2 == 0 else -1.0
        for dur, x, y in leg.segments:
            segs.append((dur, sign * x, sign * y))
    return SweepProfile(tuple(segs), lam)


def smooth_transport_profile(d: float, a_peak: float, lam: float,
                             n_segments: int = 2048,
                             aom: AomModel | None = None) -> SweepProfile:
    """Transport with sinusoidal acceleration a(t) = a_peak sin(2 pi t/t_d).

    Starts and ends at zero acceleration, so there are no abrupt equilibrium
    jumps; the staircase discretization into n_segments linear-detuning pieces
    keeps residual micro-jumps far below the well depth. The detuning samples
    are rescaled so the integrated displacement equals d exactly.
    """
    if d == 0:
        raise ValueError("d must be nonzero")
    if a_peak <= 0:
        raise ValueError("a_peak must be positive")
    if n_segments < 8:
        raise ValueError("n_segments too small to resemble a smooth ramp")
    t_d = math.sqrt(2.0 * math.pi * abs(d) / a_peak)
    sgn = 1.0 if d > 0 else -1.0
    # v(t) = a_peak t_d/(2 pi) (1 - cos(2 pi t/t_d)), dnu = 2 v/lam
    ts = np.linspace(0.0, t_d, n_segments + 1)
    v = sgn * a_peak * t_d / (2.0 * math.pi) * (1.0 - np.cos(2.0 * math.pi * ts / t_d))
    nu = 2.0 * v / lam
    # trapezoid of the piecewise-linear detuning, then rescale onto d
    dt = t_d / n_segments
    z_end = (lam / 2.0) * float(np.sum(0.5 * (nu[:-1] + nu[1:]) * dt))
    nu *= d / z_end
    _check_aom(float(np.max(np.abs(nu))), aom)
    segs = tuple((dt, float(nu[i]), float(nu[i + 1])) for i in range(n_segments))
    return SweepProfile(segs, lam)


def static_profile(duration: float, lam: float) -> SweepProfile:
    """Zero-detuning hold; the pattern never moves."""
    return SweepProfile(((duration, 0.0, 0.0),), lam)


def profile_to_csv(p: SweepProfile, path, sample_rate: float = 1e6,
                   header_lines=()):
    """Write (t, dnu, z_sw, v_sw, a_sw) rows at the given sample rate."""
    n = max(2, int(round(p.total_duration * sample_rate)) + 1)
    ts = np.linspace(0.0, p.total_duration, n)
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("t_s,dnu_Hz,z_sw_m,v_sw_m_s,a_sw_m_s2\n")
        for t in ts:
            phi, z, v, a = sw_state(p, float(t))
            fh.write(f"{t:.9e},{2 * v / p.wavelength:.9e},{z:.9e},{v:.9e},{a:.9e}\n")
