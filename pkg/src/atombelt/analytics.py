"""Closed-form and root-finding layer: gravity-tilted well depths, transport
heating bounds, and the fluorescence-detection model.

Dimensionless conventions used throughout the jump analysis: positions are
theta = k z' in the comoving frame, energies are in units of the full well
depth, and alpha = a / a_max is the tilt. The lattice potential in these
units is v(theta) = -cos^2(theta) + alpha * theta.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from .core import DerivedTrap, local_depth

_SQRT_E = math.sqrt(math.e)


# ---------------------------------------------------------------------------
# gravity-tilted transverse cut
# ---------------------------------------------------------------------------

def tilted_cut(u_loc: float, w: float, mass: float, g: float):
    """Extrema of the vertical cut f(y) = -u_loc exp(-2y^2/w^2) + m g y.

    Returns (u_eff, y_min, f_min): the barrier height above the local
    minimum, the minimum position, and its value. u_eff = 0 when gravity
    already removes the interior extrema. Derivative bisection to
    |f'| < 1e-3 m g, 200-iteration cap.
    """
    if g <= 0.0:
        return u_loc, 0.0, -u_loc
    if u_loc <= 0.0:
        return 0.0, 0.0, 0.0
    mg = mass * g
    c = mg * w / (4.0 * u_loc)
    if c >= 0.5 * math.exp(-0.5):
        return 0.0, 0.0, 0.0   # tangency: no well survives the tilt
    tol = 1e-3 * c             # |f'| < 1e-3 mg in these units

    def bisect(lo, hi, rising):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            g1 = mid * math.exp(-2.0 * mid * mid) + c
            if abs(g1) < tol:
                return mid
            if (g1 > 0.0) == rising:
                hi = mid
            else:
                lo = mid
        raise RuntimeError("tilted-cut bisection failed to converge")

    t_min = bisect(-0.5, 0.0, True)
    t_bar = bisect(-6.0, -0.5, False)
    f = lambda t: -u_loc * math.exp(-2.0 * t * t) + mg * w * t
    f_min = f(t_min)
    return f(t_bar) - f_min, t_min * w, f_min


def effective_depth(d: DerivedTrap, z: float, depth_factor: float = 1.0) -> float:
    """Well depth at axial position z after gravity tilts the transverse
    profile; equals the local depth when gravity is zero."""
    cfg = d.config
    u_loc = local_depth(d, z) * 0.5 * (1.0 + cfg.contrast) * depth_factor
    w = cfg.waist * math.sqrt(1.0 + (z / d.rayleigh) ** 2)
    u_eff, _, _ = tilted_cut(u_loc, w, cfg.atom_mass, cfg.gravity)
    return u_eff


def vanish_distance_tangency(d: DerivedTrap) -> float:
    """Root of the closed-form tangency condition U(z) = m g w(z) sqrt(e)/2.

    Independent cross-check for the sampled-curve zero crossing.
    """
    cfg = d.config
    if cfg.gravity <= 0.0:
        return math.inf

    def h(z):
        u = local_depth(d, z) * 0.5 * (1.0 + cfg.contrast)
        w = cfg.waist * math.sqrt(1.0 + (z / d.rayleigh) ** 2)
        return u - 0.5 * cfg.atom_mass * cfg.gravity * w * _SQRT_E

    lo, hi = 0.0, 1.0
    if h(lo) <= 0.0:
        return 0.0
    while h(hi) > 0.0:
        hi *= 2.0
        if hi > 1e3:
            return math.inf
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class EffectiveDepthCurve:
    z: np.ndarray          # m
    u_eff: np.ndarray      # J
    u_local: np.ndarray    # J, untilted local depth
    z_vanish: float        # m

    def to_csv(self, path, u0: float, header_lines=()):
        with open(path, "w") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            fh.write("z_mm,U_eff_over_U0,U_over_U0\n")
            for zi, ue, ul in zip(self.z, self.u_eff, self.u_local):
                fh.write(f"{zi * 1e3:.6f},{ue / u0:.9e},{ul / u0:.9e}\n")


def effective_depth_curve(d: DerivedTrap, z_max: float = 25e-3,
                          n: int = 251) -> EffectiveDepthCurve:
    """Sample U_eff(z) on [0, z_max] and locate the vanish distance."""
    cfg = d.config
    zs = np.linspace(0.0, z_max, n)
    ue = np.array([effective_depth(d, float(z)) for z in zs])
    ul = np.array([local_depth(d, float(z)) * 0.5 * (1.0 + cfg.contrast) for z in zs])
    if cfg.gravity <= 0.0 or ue[-1] > 0.0:
        zv = math.inf
    else:
        lo = float(zs[np.nonzero(ue > 0.0)[0][-1]]) if np.any(ue > 0.0) else 0.0
        hi = float(zs[np.nonzero(ue == 0.0)[0][0]])
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if effective_depth(d, mid) > 0.0:
                lo = mid
            else:
                hi = mid
        zv = 0.5 * (lo + hi)
    return EffectiveDepthCurve(zs, ue, ul, zv)


# ---------------------------------------------------------------------------
# accelerated-frame lattice
# ---------------------------------------------------------------------------

def accelerated_potential(d: DerivedTrap, zp: float, a: float) -> float:
    """Comoving-frame axial potential -U0 cos^2(k z') + m a z'."""
    k = d.wavevector_trap
    c = math.cos(k * zp)
    return -d.depth * c * c + d.config.atom_mass * a * zp


def equilibrium_shift(d: DerivedTrap, a: float) -> float:
    """Well-minimum displacement -arcsin(a/a_max)/(2k) in the comoving frame."""
    alpha = a / d.accel_max
    if abs(alpha) > 1.0:
        raise ValueError("no equilibrium exists: |a| exceeds a_max")
    return -math.asin(alpha) / (2.0 * d.wavevector_trap)


def tilted_well_depth(alpha: float) -> float:
    """Escape barrier of the tilted lattice well, in units of the full depth."""
    al = abs(alpha)
    if al > 1.0:
        return 0.0
    return math.sqrt(1.0 - al * al) + al * math.asin(al) - al * math.pi / 2.0


def _v(theta: float, alpha: float) -> float:
    c = math.cos(theta)
    return -c * c + alpha * theta


def _well_geometry(alpha: float):
    # minimum, lower (downhill) barrier position for tilt alpha, dimensionless
    th_min = -math.asin(alpha) / 2.0
    th_bar = (math.asin(alpha) - math.pi) / 2.0 if alpha >= 0.0 else (math.asin(alpha) + math.pi) / 2.0
    return th_min, th_bar


def _turning_points(alpha: float, e: float):
    """Orbit turning points at energy e (units of depth) in the alpha-tilted
    well; requires 0 <= e < tilted_well_depth(alpha)."""
    th_min, th_bar = _well_geometry(alpha)
    v_min = _v(th_min, alpha)

    def solve(lo, hi):
        # v(theta) - v_min - e changes sign across [lo, hi]
        flo = _v(lo, alpha) - v_min - e
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            fm = _v(mid, alpha) - v_min - e
            if (fm > 0.0) == (flo > 0.0):
                lo = mid
                flo = fm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    lo_side = solve(th_bar, th_min)
    # the uphill barrier sits half a period from the downhill one
    th_up = th_bar + math.pi if alpha >= 0.0 else th_bar - math.pi
    hi_side = solve(th_up, th_min)
    return (lo_side, hi_side) if lo_side < hi_side else (hi_side, lo_side)


def _jump(alpha_from: float, alpha_to: float, e: float):
    """Worst-phase energy after an instantaneous tilt change.

    The energy increment is linear in position, so the worst phase is one of
    the two turning points; returns the larger resulting energy, or inf when
    the orbit already spills over its barrier.
    """
    if e >= tilted_well_depth(alpha_from):
        return math.inf
    t1, t2 = _turning_points(alpha_from, e)
    vmin_from = _v(_well_geometry(alpha_from)[0], alpha_from)
    vmin_to = _v(_well_geometry(alpha_to)[0], alpha_to)
    out = -math.inf
    for th in (t1, t2):
        ke = e - (_v(th, alpha_from) - vmin_from)   # ~0 up to solver tolerance
        e_new = ke + _v(th, alpha_to) - vmin_to
        if e_new > out:
            out = e_new
    return out


def worst_case_jump_energy(d: DerivedTrap, a: float, e0: float = 0.0,
                           n_phases: int = 720) -> float:
    """Maximum well-frame energy after the jump sequence 0 -> a at the start,
    a -> -a at the midpoint, -a -> 0 at the end, each at its worst phase,
    scanned densely over the initial oscillation phase.

    e0 is the initial oscillation energy in joules; returns joules, or inf
    when any stage spills over its barrier.
    """
    alpha = a / d.accel_max
    if abs(alpha) > 1.0:
        raise ValueError("|a| exceeds a_max")
    u0 = d.depth
    e = e0 / u0
    if alpha == 0.0:
        return e0
    if e >= 1.0:
        return math.inf
    al = abs(alpha)
    vmin_0 = _v(0.0, 0.0)
    vmin_a = _v(_well_geometry(al)[0], al)
    if e == 0.0:
        thetas = [0.0]
    else:
        t1, t2 = _turning_points(0.0, e)
        thetas = list(np.linspace(t1, t2, n_phases))
    worst = -math.inf
    for th in thetas:
        ke = e - (_v(th, 0.0) - vmin_0)
        if ke < 0.0:
            ke = 0.0
        e1 = ke + _v(th, al) - vmin_a    # stage 1: 0 -> a
        e2 = _jump(al, -al, e1)          # stage 2: a -> -a at worst phase
        e3 = _jump(-al, 0.0, e2)         # stage 3: -a -> 0 at worst phase
        if e3 >= 1.0:
            e3 = math.inf                # over the untilted barrier
        if e3 > worst:
            worst = e3
    return worst * u0 if math.isfinite(worst) else math.inf


def jump_energy_small_a(d: DerivedTrap, a: float) -> float:
    """Closed-form worst-case heating 4 U0 (a/a_max)^2, valid for a << a_max."""
    alpha = a / d.accel_max
    return 4.0 * d.depth * alpha * alpha


def jump_loss_threshold(d: DerivedTrap, e0: float = 0.0) -> float:
    """Smallest acceleration whose worst-case jump sequence unbinds the atom."""
    lo, hi = 0.0, d.accel_max
    if not math.isfinite(worst_case_jump_energy(d, 1e-9 * hi, e0)):
        return 0.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if math.isfinite(worst_case_jump_energy(d, mid, e0)):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# resonant-probe detection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DetectionModel:
    """Fluorescence detection: the probe evaporates the atom after
    N = U(z)/2E_r scattering events; eta_det of those land on the detector."""
    eta_det: float
    background: float = 2.0     # photons per window
    threshold: int = 5          # detection requires more than this many photons
    window: float = 40e-3       # s, observation window (bookkeeping only)

    def __post_init__(self):
        if not 0.0 < self.eta_det < 1.0:
            raise ValueError("eta_det must be in (0, 1)")
        if self.threshold <= self.background:
            raise ValueError("threshold must exceed the background")

    @classmethod
    def calibrated(cls, d: DerivedTrap, photons: float = 40.0,
                   z_ref: float = 1e-3, **kw):
        """Pin eta_det so the mean detected photon number at z_ref is
        `photons` (the measured collection efficiency calibration)."""
        n_ref = local_depth(d, z_ref) / (2.0 * d.recoil_energy)
        return cls(eta_det=photons / n_ref, **kw)


def detection_probability(model: DetectionModel, d: DerivedTrap, z: float):
    """(detection probability, expected detected photons) for an atom parked
    at axial position z under the resonant probe."""
    n_events = local_depth(d, z) / (2.0 * d.recoil_energy)
    mu = model.eta_det * n_events
    p = float(poisson.sf(model.threshold, mu + model.background))
    return p, mu
