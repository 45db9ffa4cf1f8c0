"""Single-atom trajectory integration with stochastic heating and loss.

The stepping happens in a kernel (compiled when available, pure Python
otherwise); this module draws the noise tapes, flattens everything into a
KernelPlan, and interprets the result. All randomness is sampled here, up
front, in a pinned order — background time, recoil tape, phase tape — which
is what makes runs bit-identical across backends and worker counts.
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernel as kern
from .analytics import tilted_cut
from .core import HBAR, DerivedTrap
from .sweep import AomModel, SweepProfile, sw_state

TWO_PI = 2.0 * math.pi
_EMPTY = np.empty(0)


@dataclass
class AtomState:
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    vz: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "z", "vx", "vy", "vz", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"AtomState.{name} must be finite")

    @property
    def position(self):
        return np.array([self.x, self.y, self.z])

    @property
    def velocity(self):
        return np.array([self.vx, self.vy, self.vz])


@dataclass(frozen=True)
class NoiseChannels:
    """Stochastic channel switches and knobs.

    The default constructor turns the physical channels on at their measured
    strengths; integrate(noise=None) runs fully deterministic. probe_rate is
    consumed by the detection experiment only, never by integrate.
    """
    recoil: bool = True
    recoil_scale: float = 1.0          # multiplies the full-depth scattering rate
    phase_noise: bool = True
    phase_rms: float = TWO_PI / 1000.0  # rad, rms of the beat-note phase
    phase_interval: float = 10e-6      # s between independent redraws
    background: bool = True
    background_tau: float = 25.0       # s
    probe: bool = False
    probe_rate: float = 0.0            # 1/s

    def __post_init__(self):
        if self.phase_rms < 0:
            raise ValueError("phase_rms must be >= 0")
        if self.phase_interval <= 0:
            raise ValueError("phase_interval must be positive")
        if self.background_tau <= 0:
            raise ValueError("background_tau must be positive")
        if self.recoil_scale < 0:
            raise ValueError("recoil_scale must be >= 0")
        if self.probe_rate < 0:
            raise ValueError("probe_rate must be >= 0")

    @classmethod
    def none(cls):
        return cls(recoil=False, phase_noise=False, background=False)

    def needs_rng(self) -> bool:
        return ((self.recoil and self.recoil_scale > 0.0)
                or (self.phase_noise and self.phase_rms > 0.0)
                or self.background)


@dataclass(frozen=True)
class IntegrateOpts:
    dt: float | None = None          # s; default axial period / 100
    t_settle: float | None = None    # s appended after the profile; default 5 radial periods
    esc_every: int = 32              # steps between escape checks; <= 0 disables them
    record_every: int = 0            # sample stride for the trajectory dump; 0 keeps endpoints only
    aom: AomModel | None = None
    depth_schedule: tuple | None = None   # ((t_s, factor), ...) piecewise linear
    backend: str | None = None


@dataclass
class Trajectory:
    times: np.ndarray           # s
    states: np.ndarray          # (n, 6): x y z vx vy vz
    energies: np.ndarray | None  # J, well-frame energy at each sample (recorded runs)
    outcome: str                # "bound" | "escaped" | "background"
    t_event: float              # s; escape/loss time, or the simulation end
    n_scatter: int
    final_energy: float         # J, well-frame energy at classification
    final_ueff: float           # J, effective depth at classification
    backend: str
    dt: float

    @property
    def final_state(self) -> AtomState:
        s = self.states[-1]
        return AtomState(s[0], s[1], s[2], s[3], s[4], s[5], t=float(self.times[-1]))


def make_rng(*key) -> np.random.Generator:
    """Independent PCG64 stream for a (seed, point, trial, ...) tuple."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


# ---------------------------------------------------------------------------
# piecewise-linear lookup tables for the kernel
# ---------------------------------------------------------------------------

def _aom_arrays(aom: AomModel | None):
    """(optical detuning breakpoints, depth factors, slopes) for the kernel.

    Power mode is exactly the efficiency polyline. Field mode takes a square
    root, so the polyline is densified to keep the kernel's linear
    interpolation within ~1e-5 of sqrt(eta).
    """
    if aom is None:
        return _EMPTY.copy(), _EMPTY.copy(), _EMPTY.copy()
    mul = 2.0 if aom.double_pass else 1.0
    xs = np.array([x * mul for x, _ in aom.efficiency_curve])
    ys = np.array([y for _, y in aom.efficiency_curve])
    if aom.depth_mode == "field":
        dense = np.unique(np.concatenate([
            xs, np.linspace(xs[0], xs[-1], 257)]))
        ys = np.sqrt(np.interp(dense, xs, ys))
        xs = dense
    sl = np.zeros_like(xs)
    if len(xs) > 1:
        sl[:-1] = np.diff(ys) / np.diff(xs)
    return np.ascontiguousarray(xs), np.ascontiguousarray(ys), np.ascontiguousarray(sl)


def _sched_arrays(schedule):
    if schedule is None:
        return _EMPTY.copy(), _EMPTY.copy(), _EMPTY.copy()
    ts = np.array([t for t, _ in schedule], dtype=float)
    fs = np.array([f for _, f in schedule], dtype=float)
    if len(ts) == 0:
        raise ValueError("depth schedule needs at least one point")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("depth schedule times must be strictly increasing")
    if np.any(fs < 0) or not np.all(np.isfinite(fs)) or not np.all(np.isfinite(ts)):
        raise ValueError("depth schedule factors must be finite and >= 0")
    sl = np.zeros_like(ts)
    if len(ts) > 1:
        sl[:-1] = np.diff(fs) / np.diff(ts)
    return ts, fs, sl


def _table_eval(xs, ys, sl, x):
    # same clamped piecewise-linear rule the kernel applies
    if len(xs) == 0:
        return 1.0
    if x <= xs[0]:
        return float(ys[0])
    if x >= xs[-1]:
        return float(ys[-1])
    i = int(np.searchsorted(xs, x, side="right")) - 1
    return float(ys[i] + (x - xs[i]) * sl[i])


def _depth_factor_at(t, dnu, aom_tab, sched_tab):
    fac = _table_eval(*aom_tab, abs(dnu))
    return fac * _table_eval(*sched_tab, t)


# ---------------------------------------------------------------------------
# escape criterion
# ---------------------------------------------------------------------------

def is_bound(d: DerivedTrap, s: AtomState, z_well: float,
             gravity_on: bool = True, well_velocity: float = 0.0,
             depth_factor: float = 1.0):
    """(bound flag, well-frame energy in J) for the escape criterion.

    z_well is the standing-wave position (it sets the lattice phase); the
    energy is kinetic relative to a frame moving at well_velocity along z,
    plus potential, measured from the gravity-tilted local minimum. Bound
    means energy below the local effective depth and transverse distance
    under 1.5 w(z).
    """
    cfg = d.config
    zz = s.z / d.rayleigh
    den = 1.0 + zz * zz
    a_env = 1.0 / den
    w2 = cfg.waist * cfg.waist * den
    rho2 = s.x * s.x + s.y * s.y
    gexp = math.exp(-2.0 * rho2 / w2)
    psi = d.wavevector_trap * (z_well - s.z)
    lat = 0.5 * (1.0 + cfg.contrast * math.cos(2.0 * psi))
    ucoef = d.depth * depth_factor
    u_loc = ucoef * a_env * 0.5 * (1.0 + cfg.contrast)
    g = cfg.gravity if gravity_on else 0.0
    mg = cfg.atom_mass * g
    ax = cfg.gravity_axis
    v_atom = -ucoef * a_env * gexp * lat + mg * (ax[0] * s.x + ax[1] * s.y + ax[2] * s.z)
    dvz = s.vz - well_velocity
    ke = 0.5 * cfg.atom_mass * (s.vx * s.vx + s.vy * s.vy + dvz * dvz)
    u_eff, _, f_min = tilted_cut(u_loc, math.sqrt(w2), cfg.atom_mass, g)
    e = ke + v_atom - f_min
    bound = (e < u_eff) and (rho2 <= 2.25 * w2)
    return bound, e


# ---------------------------------------------------------------------------
# stochastic channel primitives
# ---------------------------------------------------------------------------

def apply_recoil(d: DerivedTrap, s: AtomState, rate: float, dt: float,
                 rng: np.random.Generator) -> AtomState:
    """Photon-scattering kicks accumulated over an interval dt.

    rate is the local scattering rate (the caller scales the full-depth rate
    by the local intensity fraction). Each event deposits two recoil momenta
    of magnitude hbar k: one along the beam axis with random sign, one in an
    isotropic random direction.
    """
    if rate < 0:
        raise ValueError("rate must be >= 0")
    n = int(rng.poisson(rate * dt)) if rate > 0 else 0
    if n == 0:
        return replace(s)
    kick = HBAR * d.wavevector_d2 / d.config.atom_mass
    signs = rng.integers(0, 2, n) * 2.0 - 1.0
    dirs = rng.normal(0.0, 1.0, (n, 3))
    dirs /= np.sqrt(np.sum(dirs * dirs, axis=1))[:, None]
    dv = kick * np.sum(dirs, axis=0)
    return replace(s, vx=s.vx + dv[0], vy=s.vy + dv[1],
                   vz=s.vz + dv[2] + kick * float(np.sum(signs)))


def apply_phase_noise(phi: float, rms: float, rng: np.random.Generator) -> float:
    """One interval's worth of beat-note phase noise applied to the pattern.

    The beat between the two beams carries the full rms; the pattern phase
    moves by half of it, so the position jitter is sigma_z = rms/(2k).
    """
    if rms < 0:
        raise ValueError("rms must be >= 0")
    if rms == 0.0:
        return phi
    return phi + 0.5 * float(rng.normal(0.0, rms))


# ---------------------------------------------------------------------------
# the integrator front end
# ---------------------------------------------------------------------------

def integrate(d: DerivedTrap, profile: SweepProfile, s0: AtomState | None = None,
              noise: NoiseChannels | None = None,
              opts: IntegrateOpts | None = None,
              rng: np.random.Generator | None = None) -> Trajectory:
    """Velocity-Verlet trajectory through the moving standing wave.

    Runs for the profile duration plus the settle hold, then classifies the
    final state with the energy criterion. Raises at entry for a timestep
    above one fiftieth of the axial period, and mid-run if the state goes
    non-finite.
    """
    if s0 is None:
        s0 = AtomState()
    if noise is None:
        noise = NoiseChannels.none()
    if opts is None:
        opts = IntegrateOpts()

    period = TWO_PI / d.freq_axial
    dt = opts.dt if opts.dt is not None else period / 100.0
    if not 0.0 < dt <= period / 50.0:
        raise ValueError(
            f"dt = {dt:.3e} s rejected; must be positive and at most one "
            f"fiftieth of the axial period ({period / 50.0:.3e} s)")
    t_settle = opts.t_settle if opts.t_settle is not None else 5.0 * TWO_PI / d.freq_radial
    if t_settle < 0:
        raise ValueError("t_settle must be >= 0")

    duration = profile.total_duration + t_settle
    n_steps = int(math.ceil(duration / dt))
    t_end = n_steps * dt

    if noise.needs_rng() and rng is None:
        raise ValueError("stochastic channels are on but no rng was given (see make_rng)")

    # noise tapes, pinned draw order: background, recoil, phase
    bg_t = math.inf
    if noise.background:
        bg_t = float(rng.exponential(noise.background_tau))
    rc_t = rc_u = rc_sx = rc_nx = rc_ny = rc_nz = _EMPTY
    kick = 0.0
    if noise.recoil and noise.recoil_scale > 0.0:
        env_rate = d.scatter_rate * noise.recoil_scale   # thinning envelope, full depth
        n_ev = int(rng.poisson(env_rate * t_end))
        rc_t = np.sort(rng.uniform(0.0, t_end, n_ev))
        rc_u = rng.uniform(0.0, 1.0, n_ev)
        rc_sx = rng.integers(0, 2, n_ev) * 2.0 - 1.0
        dirs = rng.normal(0.0, 1.0, (n_ev, 3))
        if n_ev > 0:
            dirs /= np.sqrt(np.sum(dirs * dirs, axis=1))[:, None]
        rc_nx = np.ascontiguousarray(dirs[:, 0])
        rc_ny = np.ascontiguousarray(dirs[:, 1])
        rc_nz = np.ascontiguousarray(dirs[:, 2])
        kick = HBAR * d.wavevector_d2 / d.config.atom_mass
    ph_iv = 1.0
    ph_off = _EMPTY
    if noise.phase_noise and noise.phase_rms > 0.0:
        ph_iv = noise.phase_interval
        n_ph = int(t_end / ph_iv) + 2
        ph_off = 0.5 * rng.normal(0.0, noise.phase_rms, n_ph)

    seg_t0, seg_t1, seg_nu0, seg_slope, seg_phi0 = profile.kernel_arrays()
    phi_end = sw_state(profile, profile.total_duration)[0]
    aom_tab = _aom_arrays(opts.aom)
    sched_tab = _sched_arrays(opts.depth_schedule)

    if opts.record_every > 0:
        n_max = n_steps // opts.record_every + 2
        out_t = np.empty(n_max)
        out_s = np.empty((n_max, 6))
    else:
        out_t = np.empty(2)
        out_s = np.empty((2, 6))

    cfg = d.config
    plan = kern.KernelPlan(
        x=s0.x, y=s0.y, z=s0.z, vx=s0.vx, vy=s0.vy, vz=s0.vz,
        dt=dt, n_steps=n_steps,
        depth=d.depth, w0=cfg.waist, rayleigh=d.rayleigh, k=d.wavevector_trap,
        contrast=cfg.contrast, mass=cfg.atom_mass, grav=cfg.gravity,
        gx=cfg.gravity_axis[0], gy=cfg.gravity_axis[1], gz=cfg.gravity_axis[2],
        seg_t0=seg_t0, seg_t1=seg_t1, seg_nu0=seg_nu0, seg_slope=seg_slope,
        seg_phi0=seg_phi0, prof_end=profile.total_duration, phi_end=phi_end,
        lam=profile.wavelength,
        aom_x=aom_tab[0], aom_y=aom_tab[1], aom_sl=aom_tab[2],
        sched_t=sched_tab[0], sched_f=sched_tab[1], sched_sl=sched_tab[2],
        bg_t=bg_t, rc_t=rc_t, rc_u=rc_u, rc_sx=rc_sx,
        rc_nx=rc_nx, rc_ny=rc_ny, rc_nz=rc_nz, kick=kick,
        ph_iv=ph_iv, ph_off=ph_off,
        esc_every=opts.esc_every, rec_every=opts.record_every,
        out_t=out_t, out_s=out_s,
    )

    mod = kern.get_backend(opts.backend)
    status, step, t_event, fin, n_sc, n_rec, e_fin, ueff_fin = mod.run(plan)

    if status == kern.STATUS_NONFINITE:
        raise RuntimeError(f"non-finite state at step {step} (t = {t_event:.6e} s)")
    if status == kern.STATUS_NOCONVERGE:
        raise RuntimeError("escape-check root finding failed to converge")
    outcome = {kern.STATUS_BOUND: "bound", kern.STATUS_ESCAPED: "escaped",
               kern.STATUS_BACKGROUND: "background"}[status]

    if opts.record_every > 0 and n_rec > 0:
        times = out_t[:n_rec].copy()
        states = out_s[:n_rec].copy()
    else:
        if status == kern.STATUS_BOUND:
            t_fin = t_end
        elif status == kern.STATUS_ESCAPED:
            t_fin = t_event
        else:
            t_fin = dt * math.ceil(t_event / dt)   # loop exit after the loss time
        times = np.array([t_fin])
        states = np.array([fin])

    energies = None
    if opts.record_every > 0:
        energies = np.empty(len(times))
        for j in range(len(times)):
            tq = float(times[j])
            phi, z_sw, v_sw, _ = sw_state(profile, min(tq, profile.total_duration))
            if tq >= profile.total_duration:
                v_sw = 0.0
            dnu = 2.0 * v_sw / profile.wavelength
            fac = _depth_factor_at(tq, dnu, aom_tab, sched_tab)
            st = AtomState(*states[j], t=tq)
            _, energies[j] = is_bound(d, st, z_sw, gravity_on=cfg.gravity > 0,
                                      well_velocity=v_sw, depth_factor=fac)

    return Trajectory(times=times, states=states, energies=energies,
                      outcome=outcome,
                      t_event=t_event if status != kern.STATUS_BOUND else t_end,
                      n_scatter=n_sc, final_energy=e_fin, final_ueff=ueff_fin,
                      backend=kern.backend_name(mod), dt=dt)


def trajectory_to_csv(traj: Trajectory, path, header_lines=()):
    """Dump the recorded samples as t, x, y, z, vx, vy, vz, E_well rows."""
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("t_s,x_m,y_m,z_m,vx_m_s,vy_m_s,vz_m_s,E_well_J\n")
        for j in range(len(traj.times)):
            s = traj.states[j]
            e = traj.energies[j] if traj.energies is not None else math.nan
            fh.write(f"{traj.times[j]:.9e},"
                     + ",".join(f"{v:.9e}" for v in s)
                     + f",{e:.9e}\n")
