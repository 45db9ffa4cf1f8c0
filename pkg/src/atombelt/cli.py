"""Command-line front end.

Every subcommand reads a flat key-value config (or the built-in cesium
defaults), writes CSV files into --out, and embeds the fully resolved
configuration plus seed as '#' comments so any output file reproduces its
run. Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

import argparse
import logging
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .analytics import effective_depth_curve, vanish_distance_tangency
from .core import (CONFIG_KEYS, KB, default_config, derive, read_key_values,
                   thermal_localization, trap_config_from_dict)
from .dynamics import (IntegrateOpts, NoiseChannels, integrate, make_rng,
                       trajectory_to_csv)
from .experiments import (ExperimentSpec, run_acceleration_scan,
                          run_distance_scan, run_lowering_scan,
                          run_shuttle_scan, sample_thermal)
from .sweep import (AomModel, profile_to_csv, shuttle_profile,
                    smooth_transport_profile, transport_profile, cycle_count)

DEFAULT_SEED = 12345   # fixed so runs are reproducible by default

log = logging.getLogger("atombelt")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; that slot is reserved for runtime
    # failures here, so remap usage errors to the config exit code.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser():
    p = _Parser(prog="atombelt", description=__doc__)
    p.add_argument("--version", action="version", version=f"atombelt {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key-value config file (default: built-in cesium setup)")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"master seed (default {DEFAULT_SEED})")
    common.add_argument("--trials", type=int, default=200,
                        help="Monte Carlo trials per scan point (default 200)")
    common.add_argument("--workers", type=int, default=1,
                        help="worker processes (default 1); results do not depend on this")
    common.add_argument("--temperature-uK", dest="temperature_uk", type=float,
                        default=125.0, help="initial ensemble temperature in uK (default 125)")
    common.add_argument("--no-gravity", action="store_true", help="turn gravity off")
    common.add_argument("--noise", default="all",
                        help="comma list of channels: recoil, phase, background; or all/none")
    common.add_argument("--no-aom", action="store_true",
                        help="drop the AOM bandwidth/depth model")
    common.add_argument("--verbose", "-v", action="count", default=0)

    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("derive", parents=[common],
                        help="print derived trap quantities and write derived.csv")

    sp = sub.add_parser("sweep-export", parents=[common],
                        help="write the detuning waveform for one transport")
    sp.add_argument("--distance-mm", type=float, default=1.0)
    sp.add_argument("--acceleration", type=float, default=500.0)
    sp.add_argument("--smooth", action="store_true",
                    help="sinusoidal acceleration profile instead of the triangular ramp")
    sp.add_argument("--sample-rate-hz", type=float, default=1e6)

    sp = sub.add_parser("transport", parents=[common],
                        help="integrate one transport trajectory and dump it")
    sp.add_argument("--distance-mm", type=float, default=1.0)
    sp.add_argument("--acceleration", type=float, default=500.0)
    sp.add_argument("--record-every", type=int, default=100)

    sp = sub.add_parser("scan-distance", parents=[common],
                        help="transport efficiency vs distance (two-way by default)")
    sp.add_argument("--values", default="1e-3:15e-3:15",
                    help="distances in m, start:stop:count or comma list")
    sp.add_argument("--acceleration", type=float, default=500.0)
    sp.add_argument("--one-way", action="store_true",
                    help="single transport with detection at the destination")

    sp = sub.add_parser("scan-acceleration", parents=[common],
                        help="one-way transport efficiency vs acceleration")
    sp.add_argument("--values", default="1e2:7e4:8",
                    help="accelerations in m/s^2, start:stop:count or comma list")
    sp.add_argument("--distance-mm", type=float, default=1.0)
    sp.add_argument("--spacing", choices=("linear", "log"), default="log")

    sp = sub.add_parser("shuttle", parents=[common],
                        help="survival vs number of back-and-forth legs")
    sp.add_argument("--values", default="0:30:7",
                    help="bounce counts, start:stop:count or comma list")
    sp.add_argument("--distance-mm", type=float, default=1.0)
    sp.add_argument("--acceleration", type=float, default=5000.0)

    sp = sub.add_parser("lowering", parents=[common],
                        help="survival after an adiabatic depth ramp")
    sp.add_argument("--values", default="0.01,0.03,0.1,0.3,1.0",
                    help="final depth fractions, start:stop:count or comma list")
    sp.add_argument("--ramp-ms", type=float, default=20.0)

    sp = sub.add_parser("effective-depth", parents=[common],
                        help="gravity-tilted well depth vs axial position")
    sp.add_argument("--z-max-mm", type=float, default=25.0)
    sp.add_argument("--points", type=int, default=251)
    return p


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def _load_config(args):
    if args.config:
        cfg = trap_config_from_dict(read_key_values(args.config))
    else:
        cfg = default_config()
    if args.no_gravity:
        cfg = replace(cfg, gravity=0.0)
    return cfg


def _parse_noise(text: str) -> NoiseChannels:
    tokens = [t.strip().lower() for t in text.split(",") if t.strip()]
    if not tokens:
        raise ValueError("--noise needs at least one token")
    if tokens == ["all"]:
        return NoiseChannels()
    if tokens == ["none"]:
        return NoiseChannels.none()
    valid = {"recoil", "phase", "background"}
    bad = sorted(set(tokens) - valid)
    if bad:
        raise ValueError(f"unknown noise channel(s): {', '.join(bad)} "
                         "(valid: recoil, phase, background, all, none)")
    return NoiseChannels(recoil="recoil" in tokens,
                         phase_noise="phase" in tokens,
                         background="background" in tokens)


def _parse_values(text: str, spacing: str = "linear", integer: bool = False):
    try:
        if ":" in text:
            start_s, stop_s, count_s = text.split(":")
            start, stop, count = float(start_s), float(stop_s), int(count_s)
            if count < 1:
                raise ValueError
            if count == 1:
                vals = [start]
            elif spacing == "log":
                if start <= 0 or stop <= 0:
                    raise ValueError
                vals = [float(v) for v in np.geomspace(start, stop, count)]
            else:
                vals = [float(v) for v in np.linspace(start, stop, count)]
        else:
            vals = [float(t) for t in text.split(",") if t.strip()]
            if not vals:
                raise ValueError
    except ValueError:
        raise ValueError(f"--values {text!r}: expected start:stop:count "
                         "(positive endpoints for log spacing) or a comma list") from None
    if integer:
        vals = [int(round(v)) for v in vals]
    return vals


def _aom(args):
    return None if args.no_aom else AomModel()


def _spec(args, two_way=True):
    return ExperimentSpec(trials=args.trials,
                          temperature=args.temperature_uk * 1e-6,
                          gravity=not args.no_gravity,
                          noise=_parse_noise(args.noise),
                          seed=args.seed, workers=args.workers,
                          two_way=two_way, aom=_aom(args))


def _meta_lines(cfg, args, extra=()):
    """('key', 'value') pairs that make an output file self-describing."""
    lines = [("atombelt_version", __version__)]
    for key, (attr, scale) in CONFIG_KEYS.items():
        lines.append((key, repr(getattr(cfg, attr) / scale)))
    if cfg.rayleigh_override is not None:
        lines.append(("rayleigh_mm", repr(cfg.rayleigh_override / 1e-3)))
    lines.append(("contrast", repr(cfg.contrast)))
    lines.append(("seed", str(args.seed)))
    lines.append(("trials", str(args.trials)))
    lines.append(("temperature_uK", repr(args.temperature_uk)))
    lines.append(("gravity", "off" if args.no_gravity else "on"))
    lines.append(("noise", args.noise))
    lines.append(("aom_model", "off" if args.no_aom else
                  "double-pass 80 MHz, +-10 MHz RF, efficiency 1 -> 0.5"))
    return lines + list(extra)


def _out_path(args, name):
    return os.path.join(args.out, name)


def _write_scan(result, cfg, args, name, extra=()):
    result = replace(result, meta=tuple(_meta_lines(cfg, args, extra)) + result.meta)
    path = _out_path(args, name)
    result.to_csv(path)
    log.info("wrote %s", path)
    for pt in result.points:
        print(f"{result.kind} {pt.value:.6g}: efficiency {pt.efficiency:.3f} "
              f"[{pt.ci_low:.3f}, {pt.ci_high:.3f}]  trials {pt.trials}")
    return path


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_derive(args, cfg, d):
    t = args.temperature_uk * 1e-6
    sig_ax, sig_rad = thermal_localization(d, t) if t > 0 else (0.0, 0.0)
    rows = [
        ("U0_J", d.depth, "J"),
        ("U0_mK", d.depth / KB * 1e3, "mK"),
        ("f_axial_kHz", d.freq_axial / (2e3 * math.pi), "kHz"),
        ("f_radial_kHz", d.freq_radial / (2e3 * math.pi), "kHz"),
        ("scatter_rate_per_s", d.scatter_rate, "1/s"),
        ("gs_axial_nm", d.gs_axial * 1e9, "nm"),
        ("gs_radial_nm", d.gs_radial * 1e9, "nm"),
        ("sigma_axial_nm", sig_ax * 1e9, "nm"),
        ("sigma_radial_um", sig_rad * 1e6, "um"),
        ("a_max_m_s2", d.accel_max, "m/s^2"),
        ("a_recoil_m_s2", d.light_pressure_accel, "m/s^2"),
        ("recoil_energy_J", d.recoil_energy, "J"),
        ("rayleigh_mm", d.rayleigh * 1e3, "mm"),
        ("detuning_eff_rad_s", d.detuning_eff, "rad/s"),
        ("doppler_temp_uK", d.doppler_temp * 1e6, "uK"),
    ]
    for name, value, unit in rows:
        print(f"{name:<22} {value:>15.6g}  {unit}")
    path = _out_path(args, "derived.csv")
    with open(path, "w") as fh:
        for key, value in _meta_lines(cfg, args):
            fh.write(f"# {key} = {value}\n")
        fh.write("quantity,value,unit\n")
        for name, value, unit in rows:
            fh.write(f"{name},{value!r},{unit}\n")
    log.info("wrote %s", path)
    return 0


def cmd_sweep_export(args, cfg, d):
    dist = args.distance_mm * 1e-3
    if args.smooth:
        prof = smooth_transport_profile(dist, args.acceleration,
                                        cfg.wavelength_trap, aom=_aom(args))
    else:
        prof = transport_profile(dist, args.acceleration, cfg.wavelength_trap,
                                 aom=_aom(args))
    extra = [("distance_m", repr(dist)),
             ("acceleration_m_s2", repr(args.acceleration)),
             ("profile", "smooth" if args.smooth else "triangular"),
             ("beat_cycles", repr(cycle_count(prof)))]
    path = _out_path(args, "sweep.csv")
    profile_to_csv(prof, path, sample_rate=args.sample_rate_hz,
                   header_lines=[f"{k} = {v}" for k, v in
                                 _meta_lines(cfg, args, extra)])
    print(f"duration {prof.total_duration * 1e3:.4f} ms, "
          f"peak detuning {prof.max_detuning():.6g} Hz, "
          f"beat cycles {cycle_count(prof):.4f}")
    log.info("wrote %s", path)
    return 0


def cmd_transport(args, cfg, d):
    dist = args.distance_mm * 1e-3
    prof = transport_profile(dist, args.acceleration, cfg.wavelength_trap,
                             aom=_aom(args))
    noise = _parse_noise(args.noise)
    rng = make_rng(args.seed, 0, 0)
    s0 = sample_thermal(d, args.temperature_uk * 1e-6, rng)
    opts = IntegrateOpts(record_every=max(1, args.record_every), aom=_aom(args))
    tr = integrate(d, prof, s0, noise=noise, opts=opts, rng=rng)
    path = _out_path(args, "trajectory.csv")
    trajectory_to_csv(tr, path,
                      header_lines=[f"{k} = {v}" for k, v in
                                    _meta_lines(cfg, args,
                                                [("distance_m", repr(dist)),
                                                 ("acceleration_m_s2", repr(args.acceleration)),
                                                 ("backend", tr.backend)])])
    print(f"outcome {tr.outcome}, scattering events {tr.n_scatter}, "
          f"final well-frame energy {tr.final_energy / d.depth:.4g} U0, "
          f"final z {tr.final_state.z * 1e3:.6f} mm")
    log.info("wrote %s", path)
    return 0


def cmd_scan_distance(args, cfg, d):
    values = _parse_values(args.values)
    spec = _spec(args, two_way=not args.one_way)
    result = run_distance_scan(spec, d, values, a=args.acceleration)
    _write_scan(result, cfg, args, "distance_scan.csv")
    return 0


def cmd_scan_acceleration(args, cfg, d):
    values = _parse_values(args.values, spacing=args.spacing)
    spec = _spec(args)
    result = run_acceleration_scan(spec, d, values, dist=args.distance_mm * 1e-3)
    _write_scan(result, cfg, args, "acceleration_scan.csv")
    return 0


def cmd_shuttle(args, cfg, d):
    values = _parse_values(args.values, integer=True)
    spec = _spec(args)
    result = run_shuttle_scan(spec, d, values, dist=args.distance_mm * 1e-3,
                              a=args.acceleration)
    _write_scan(result, cfg, args, "shuttle_scan.csv")
    return 0


def cmd_lowering(args, cfg, d):
    values = _parse_values(args.values)
    spec = _spec(args)
    result = run_lowering_scan(spec, d, values, t_ramp=args.ramp_ms * 1e-3)
    _write_scan(result, cfg, args, "lowering_scan.csv")
    return 0


def cmd_effective_depth(args, cfg, d):
    curve = effective_depth_curve(d, z_max=args.z_max_mm * 1e-3, n=args.points)
    z_tan = vanish_distance_tangency(d)
    path = _out_path(args, "effective_depth.csv")
    extra = [("z_vanish_sampled_mm", repr(curve.z_vanish * 1e3)),
             ("z_vanish_tangency_mm", repr(z_tan * 1e3))]
    curve.to_csv(path, u0=d.depth,
                 header_lines=[f"{k} = {v}" for k, v in
                               _meta_lines(cfg, args, extra)])
    print(f"effective depth vanishes at {curve.z_vanish * 1e3:.4f} mm "
          f"(tangency condition: {z_tan * 1e3:.4f} mm)")
    log.info("wrote %s", path)
    return 0


_COMMANDS = {
    "derive": cmd_derive,
    "sweep-export": cmd_sweep_export,
    "transport": cmd_transport,
    "scan-distance": cmd_scan_distance,
    "scan-acceleration": cmd_scan_acceleration,
    "shuttle": cmd_shuttle,
    "lowering": cmd_lowering,
    "effective-depth": cmd_effective_depth,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        cfg = _load_config(args)
        d = derive(cfg)
        _parse_noise(args.noise)        # validate before any work
        if args.trials < 1:
            raise ValueError("--trials must be >= 1")
        if args.workers < 1:
            raise ValueError("--workers must be >= 1")
        if args.temperature_uk < 0:
            raise ValueError("--temperature-uK must be >= 0")
        os.makedirs(args.out, exist_ok=True)
    except (ValueError, OSError) as exc:
        print(f"atombelt: config error: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args, cfg, d)
    except ValueError as exc:
        print(f"atombelt: config error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError) as exc:
        print(f"atombelt: runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
