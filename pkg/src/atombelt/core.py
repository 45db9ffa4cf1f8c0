"""Trap inputs and closed-form derived quantities for a standing-wave dipole trap.

Two counter-propagating red-detuned Gaussian beams interfere into a chain of
wells spaced half a wavelength apart. Everything downstream (sweep synthesis,
trajectory integration, scans) consumes the immutable DerivedTrap built here.

All internal units are SI. Sign convention: we store potential ENERGY, so the
trap minima sit at -depth and force = -grad(U).
"""

import math
import warnings
from dataclasses import dataclass

from scipy import constants as const

HBAR = const.hbar
KB = const.k
C_LIGHT = const.c
AMU = const.atomic_mass

# cesium defaults (D-line data, SI)
CS_MASS_U = 132.905451961            # atomic mass units
CS_D1_M = 894e-9                     # m
CS_D2_M = 852e-9                     # m
CS_LINEWIDTH = 2 * math.pi * 5.2e6   # rad/s, natural linewidth
CS_ISAT = 11.0                       # W/m^2, cycling-transition saturation intensity

DEFAULT_GRAVITY_AXIS = (0.0, 1.0, 0.0)  # potential increases along +y, beams run along z


@dataclass(frozen=True)
class TrapConfig:
    """Laser, beam and atom inputs.

    gravity_axis is the unit vector along which the gravitational potential
    increases (the "up" direction); it must be perpendicular to the optical
    axis z. rayleigh_override replaces pi*w0^2/lambda when set (some published
    figures round the Rayleigh length; scans that compare against them need
    the rounded value).
    """

    power_total: float = 4.0                  # W, both beams summed
    waist: float = 30e-6                      # m
    wavelength_trap: float = 1064e-9          # m
    wavelength_d1: float = CS_D1_M            # m
    wavelength_d2: float = CS_D2_M            # m
    linewidth: float = CS_LINEWIDTH           # rad/s
    saturation_intensity: float = CS_ISAT     # W/m^2
    atom_mass: float = CS_MASS_U * AMU        # kg
    gravity: float = 9.81                     # m/s^2
    gravity_axis: tuple = DEFAULT_GRAVITY_AXIS
    contrast: float = 1.0                     # interference visibility
    rayleigh_override: float | None = None    # m

    def __post_init__(self):
        for name in ("power_total", "waist", "wavelength_trap", "wavelength_d1",
                     "wavelength_d2", "linewidth", "saturation_intensity",
                     "atom_mass"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.contrast <= 1.0:
            raise ValueError("contrast must be in (0, 1]")
        if self.gravity < 0:
            raise ValueError("gravity must be >= 0")
        ax = self.gravity_axis
        if len(ax) != 3 or abs(math.sqrt(ax[0]**2 + ax[1]**2 + ax[2]**2) - 1.0) > 1e-9:
            raise ValueError("gravity_axis must be a 3-component unit vector")
        if abs(ax[2]) > 1e-9:
            raise ValueError("gravity_axis must be perpendicular to the optical axis")
        if not (self.wavelength_trap > self.wavelength_d1 > 0):
            warnings.warn("trap laser is not red-detuned of the D1 line; "
                          "depth and detuning signs are untrustworthy",
                          stacklevel=2)


@dataclass(frozen=True)
class DerivedTrap:
    """Closed-form quantities of the static trap, plus the inputs they came from."""

    depth: float                 # U0, J
    rayleigh: float              # z0, m (override applied if configured)
    detuning_eff: float          # rad/s
    scatter_rate: float          # 1/s, at full depth
    freq_axial: float            # rad/s
    freq_radial: float           # rad/s
    gs_axial: float              # m, ground-state width along z
    gs_radial: float             # m
    accel_max: float             # m/s^2, depth*k/m
    recoil_energy: float         # J, D2 photon
    wavevector_trap: float       # rad/m
    wavevector_d2: float         # rad/m
    light_pressure_accel: float  # m/s^2, resonant photon-pressure ceiling
    doppler_temp: float          # K
    config: TrapConfig

    @property
    def waist(self) -> float:
        return self.config.waist

    @property
    def atom_mass(self) -> float:
        return self.config.atom_mass

    @property
    def gravity(self) -> float:
        return self.config.gravity

    def depth_mK(self) -> float:
        return self.depth / KB * 1e3


def effective_detuning(cfg: TrapConfig) -> float:
    """Weighted D-line detuning, positive for red detuning.

    1/Delta = (1/Delta1 + 2/Delta2)/3 with Delta_i = 2 pi c (1/lambda_Di -
    1/lambda_trap). Raises for a trap laser degenerate with either line.
    """
    deltas = []
    for lam_d in (cfg.wavelength_d1, cfg.wavelength_d2):
        if lam_d == cfg.wavelength_trap:
            raise ValueError("resonant trap laser")
        deltas.append(2 * math.pi * C_LIGHT * (1 / lam_d - 1 / cfg.wavelength_trap))
    d1, d2 = deltas
    inv = (1 / d1 + 2 / d2) / 3
    if inv == 0:
        raise ValueError("resonant trap laser")
    return 1 / inv


def derive(cfg: TrapConfig) -> DerivedTrap:
    """Evaluate every closed-form trap quantity from the configuration."""
    det = effective_detuning(cfg)
    k = 2 * math.pi / cfg.wavelength_trap
    k_d2 = 2 * math.pi / cfg.wavelength_d2
    u0 = (HBAR * cfg.linewidth / 2) \
        * (cfg.power_total / (math.pi * cfg.waist**2 * cfg.saturation_intensity)) \
        * (cfg.linewidth / det)
    z0 = math.pi * cfg.waist**2 / cfg.wavelength_trap
    if cfg.rayleigh_override is not None:
        z0 = cfg.rayleigh_override
    m = cfg.atom_mass
    freq_ax = k * math.sqrt(2 * u0 / m)
    freq_rad = math.sqrt(4 * u0 / (m * cfg.waist**2))
    return DerivedTrap(
        depth=u0,
        rayleigh=z0,
        detuning_eff=det,
        scatter_rate=(cfg.linewidth / det) * (u0 / HBAR),
        freq_axial=freq_ax,
        freq_radial=freq_rad,
        gs_axial=math.sqrt(HBAR / (2 * m * freq_ax)),
        gs_radial=math.sqrt(HBAR / (2 * m * freq_rad)),
        accel_max=u0 * k / m,
        recoil_energy=(HBAR * k_d2) ** 2 / (2 * m),
        wavevector_trap=k,
        wavevector_d2=k_d2,
        light_pressure_accel=HBAR * k_d2 * cfg.linewidth / (2 * m),
        doppler_temp=HBAR * cfg.linewidth / (2 * KB),
        config=cfg,
    )


def thermal_localization(d: DerivedTrap, temperature: float):
    """Equipartition rms widths (axial, radial) of a thermal atom in one well."""
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    v = math.sqrt(KB * temperature / d.atom_mass)
    return v / d.freq_axial, v / d.freq_radial


def local_depth(d: DerivedTrap, z: float) -> float:
    """Well depth |U| at axial displacement z from the focus, J."""
    zz = z / d.rayleigh
    return d.depth / (1 + zz * zz)


def potential(d: DerivedTrap, r, phi: float, gravity_on: bool = True) -> float:
    """Potential energy at point r = (x, y, z) for standing-wave phase phi, J.

    phi is pi * integral of the mutual detuning (supplied by the sweep
    module); the interference pattern sits at cos^2(phi - k z).
    """
    x, y, z = r
    zz = z / d.rayleigh
    a = 1.0 / (1.0 + zz * zz)
    w2 = d.waist * d.waist / a
    g = math.exp(-2.0 * (x * x + y * y) / w2)
    psi = phi - d.wavevector_trap * z
    s = 0.5 * (1.0 + d.config.contrast * math.cos(2.0 * psi))
    u = -d.depth * a * g * s
    if gravity_on:
        ax = d.config.gravity_axis
        u += d.atom_mass * d.gravity * (x * ax[0] + y * ax[1] + z * ax[2])
    return u


def force(d: DerivedTrap, r, phi: float, gravity_on: bool = True):
    """Analytic -grad of potential(), N. Returns (Fx, Fy, Fz)."""
    x, y, z = r
    z0 = d.rayleigh
    zz = z / z0
    a = 1.0 / (1.0 + zz * zz)
    w2 = d.waist * d.waist / a
    rho2 = x * x + y * y
    g = math.exp(-2.0 * rho2 / w2)
    psi = phi - d.wavevector_trap * z
    v = d.config.contrast
    s = 0.5 * (1.0 + v * math.cos(2.0 * psi))
    core = d.depth * a * g
    # transverse: dU/dx = +4 x core s / w2
    fx = -4.0 * x * core * s / w2
    fy = -4.0 * y * core * s / w2
    # axial: envelope divergence, Gaussian broadening, and the lattice term
    da_dz = -2.0 * z / (z0 * z0) * a * a            # d(w0^2/w^2)/dz
    dw2_dz = 2.0 * z * d.waist * d.waist / (z0 * z0)
    dg_dz = g * (2.0 * rho2 / (w2 * w2)) * dw2_dz
    ds_dz = v * d.wavevector_trap * math.sin(2.0 * psi)
    fz = d.depth * (da_dz * g * s + a * dg_dz * s + a * g * ds_dz)
    if gravity_on:
        ax = d.config.gravity_axis
        mg = d.atom_mass * d.gravity
        fx -= mg * ax[0]
        fy -= mg * ax[1]
        fz -= mg * ax[2]
    return fx, fy, fz


# ---------------------------------------------------------------------------
# flat key-value config files
# ---------------------------------------------------------------------------

# file key -> (TrapConfig attribute, scale factor applied to the parsed float)
CONFIG_KEYS = {
    "power_W": ("power_total", 1.0),
    "waist_um": ("waist", 1e-6),
    "wavelength_trap_nm": ("wavelength_trap", 1e-9),
    "wavelength_d1_nm": ("wavelength_d1", 1e-9),
    "wavelength_d2_nm": ("wavelength_d2", 1e-9),
    "linewidth_2pi_MHz": ("linewidth", 2 * math.pi * 1e6),
    "saturation_intensity_W_m2": ("saturation_intensity", 1.0),
    "atom_mass_u": ("atom_mass", AMU),
    "gravity_m_s2": ("gravity", 1.0),
}
OPTIONAL_KEYS = {
    "rayleigh_mm": ("rayleigh_override", 1e-3),
    "contrast": ("contrast", 1.0),
}


def read_key_values(path):
    """Parse a flat 'key = value' file with '#' comments into a str dict."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
    return out


def trap_config_from_dict(values: dict) -> TrapConfig:
    """Build a TrapConfig from parsed file values; unknown keys are warned about."""
    missing = [k for k in CONFIG_KEYS if k not in values]
    if missing:
        raise ValueError(
            "missing config keys: " + ", ".join(sorted(missing))
            + " (values are floats; unit is part of the key name)")
    kwargs = {}
    for key, (attr, scale) in CONFIG_KEYS.items():
        try:
            kwargs[attr] = float(values[key]) * scale
        except ValueError:
            raise ValueError(f"config key {key}: expected a number, got {values[key]!r}") from None
    for key, (attr, scale) in OPTIONAL_KEYS.items():
        if key in values:
            kwargs[attr] = float(values[key]) * scale
    known = set(CONFIG_KEYS) | set(OPTIONAL_KEYS)
    for key in values:
        if key not in known and not key.startswith("aom_") and key != "depth_scaling_mode":
            warnings.warn(f"unknown config key {key!r} ignored", stacklevel=2)
    return TrapConfig(**kwargs)


def default_config() -> TrapConfig:
    """The cesium / 4 W / 30 um setup every reproduction run uses."""
    return TrapConfig(rayleigh_override=3e-3)
