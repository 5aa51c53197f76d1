"""Command-line front end: ``levi-dm simulate|spectra|decohere|table``.

Exit codes: 0 success, 2 configuration or input error, 3 I/O error,
4 numerical failure (oracle disagreement, non-convergence, blow-up).
"""
from __future__ import annotations

import argparse
import copy
import glob
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .decoherence import (
    PRESETS,
    Directional,
    OracleDisagreement,
    QuadratureError,
    dm_decoherence,
    scenario_preset,
)
from .fileio import (
    FormatError,
    config_hash,
    read_trajectory_csv,
    write_json,
    write_scan,
    write_spectra,
    write_trajectory_csv,
)
from .langevin import SimulationError, simulate
from .reference import FORMATS, format_table, load_reference
from .signals import Trajectory
from .spectra import (
    EstimationError,
    SusceptibilityModel,
    average_estimates,
    estimate_orientation,
    welch_psd,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4


class CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def member_seed(root: int, member: int) -> int:
    """64-bit seed for ensemble member ``member`` derived from ``root``."""
    ss = np.random.SeedSequence(root, spawn_key=(member,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _hashed_config(raw: dict, seed: int | None) -> dict:
    # output location does not change results, the seed does
    cfg = copy.deepcopy(raw)
    cfg.pop("output_dir", None)
    if seed is not None and isinstance(cfg.get("sim"), dict):
        cfg["sim"]["seed"] = seed
    return cfg


def _load(args):
    if not args.config:
        raise CommandError("--config is required", EXIT_CONFIG)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        raise CommandError("invalid config:\n  " + "\n  ".join(exc.problems), EXIT_CONFIG)
    except OSError as exc:
        raise CommandError(f"cannot read config: {exc}", EXIT_IO)
    return cfg


def _require(cfg, *sections):
    missing = [s for s in sections if getattr(cfg, s) is None]
    if missing:
        raise CommandError("invalid config:\n  " + "\n  ".join(
            f"{s}: required section missing" for s in missing), EXIT_CONFIG)


def _out_dir(args, cfg=None) -> Path:
    out = Path(args.out) if args.out else (cfg.output_dir if cfg else Path("."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CommandError(f"cannot create output directory {out}: {exc}", EXIT_IO)
    return out


def cmd_simulate(args) -> int:
    cfg = _load(args)
    _require(cfg, "trap", "sim")
    sim = cfg.sim
    root = sim.seed if args.seed is None else args.seed
    tag = config_hash(_hashed_config(cfg.raw, root))
    out = _out_dir(args, cfg)
    seeds = [member_seed(root, i) for i in range(sim.n_ensemble)]
    files = []
    backend = None
    for i, seed in enumerate(seeds):
        traj = simulate(cfg.trap, cfg.signals, sim.duration, sim.dt, seed,
                        record_every=sim.record_every, epoch=sim.epoch)
        backend = traj.backend
        name = f"traj_{tag}_{i:03d}.csv"
        write_trajectory_csv(out / name, traj)
        files.append(name)
    write_json(out / f"manifest_{tag}.json", {
        "config_hash": tag,
        "root_seed": root,
        "seeds": seeds,
        "files": files,
        "backend": backend,
        "sample_interval_s": sim.dt * sim.record_every,
        "integrator_dt_s": sim.dt,
        "version": __version__,
    })
    print(f"wrote {len(files)} trajectories and manifest_{tag}.json to {out}")
    return EXIT_OK


def cmd_spectra(args) -> int:
    cfg = _load(args)
    _require(cfg, "trap", "spectra")
    root = cfg.sim.seed if (cfg.sim and args.seed is None) else args.seed
    tag = config_hash(_hashed_config(cfg.raw, root))
    patterns = args.inputs or [str(cfg.output_dir / f"traj_{tag}_*.csv")]
    paths = sorted({p for pat in patterns for p in glob.glob(pat)})
    if not paths:
        raise CommandError(f"no trajectory files match {' '.join(patterns)}", EXIT_CONFIG)
    integrator_dt = cfg.sim.dt if cfg.sim else None
    estimates = []
    dt_ref = None
    for p in paths:
        try:
            dt, pos, vel = read_trajectory_csv(p)
        except FormatError as exc:
            raise CommandError(str(exc), EXIT_CONFIG)
        except OSError as exc:
            raise CommandError(f"cannot read {p}: {exc}", EXIT_IO)
        if dt_ref is None:
            dt_ref = dt
        elif not math.isclose(dt, dt_ref, rel_tol=1e-9):
            raise CommandError(f"{p}: sample interval {dt:.17g} differs from {dt_ref:.17g}",
                               EXIT_CONFIG)
        traj = Trajectory(dt=dt, positions=pos, velocities=vel, seed=0, trap=cfg.trap,
                          integrator_dt=integrator_dt)
        try:
            estimates.append(welch_psd(traj, cfg.spectra.segment_length, cfg.spectra.overlap))
        except ValueError as exc:
            raise CommandError(f"spectra: {exc}", EXIT_CONFIG)
    est = average_estimates(estimates)
    try:
        fit = estimate_orientation(est, SusceptibilityModel(cfg.trap))
    except EstimationError as exc:
        raise CommandError(f"orientation fit failed: {exc}", EXIT_NUMERIC)
    except ValueError as exc:
        raise CommandError(f"orientation fit: {exc}", EXIT_CONFIG)
    out = _out_dir(args, cfg)
    inputs = [Path(p).name for p in paths]
    write_spectra(out / f"spectra_{tag}.csv", out / f"spectra_{tag}.json", est,
                  {"config_hash": tag, "inputs": inputs})
    write_json(out / f"orientation_{tag}.json", {
        "config_hash": tag,
        "psi_hat": fit.psi_hat,
        "quadrant_sign": fit.quadrant_sign,
        "uncertainty": fit.uncertainty,
        "amplitude": fit.amplitude,
        "amplitude_sigma": fit.amplitude_sigma,
        "significance": fit.significance,
        "excess_x": fit.excess_x,
        "excess_y": fit.excess_y,
        "cross_power": fit.cross_power,
        "cross_power_sigma": fit.cross_power_sigma,
        "inputs": inputs,
    })
    print(f"psi_hat = {math.degrees(fit.psi_hat):+.2f} deg, quadrant_sign = {fit.quadrant_sign:+d}, "
          f"significance = {fit.significance:.1f} sigma")
    return EXIT_OK


def cmd_decohere(args) -> int:
    if bool(args.preset) == bool(args.config):
        raise CommandError("give exactly one of --preset or --config", EXIT_CONFIG)
    seed = 0 if args.seed is None else args.seed
    if args.preset:
        try:
            sc = scenario_preset(args.preset)
        except ValueError as exc:
            raise CommandError(str(exc), EXIT_CONFIG)
        points = [(p.halo, p.coupling) for p in sc.points]
        target, sup = sc.target, sc.superposition
        cone = Directional()
        mc_samples, rtol = 1_000_000, 1e-3
        source = {"preset": args.preset}
        cfg = None
    else:
        cfg = _load(args)
        _require(cfg, "decoherence")
        d = cfg.decoherence
        if (len(d.m_chi) > 1 or len(d.m_mediator) > 1) and not args.scan:
            raise CommandError("invalid config:\n  decoherence.m_chi_ev: several values need --scan",
                               EXIT_CONFIG)
        points = d.lattice(cfg.halo)
        target, sup, cone = d.target, d.superposition, d.mode
        mc_samples, rtol = d.mc_samples, d.rtol
        source = {"config": _hashed_config(cfg.raw, None)}
    mode = "isotropic" if args.mode == "isotropic" else cone
    tag = config_hash({**source, "mode": args.mode, "seed": seed})

    rows, seeds, mc = [], [], []
    for i, (halo, coupling) in enumerate(points):
        s = member_seed(seed, i)
        try:
            rep = dm_decoherence(halo, coupling, target, sup, mode, rtol=rtol,
                                 mc_samples=mc_samples, seed=s)
        except OracleDisagreement as exc:
            raise CommandError(
                f"m_chi = {halo.m_chi:g} eV, m_mediator = {coupling.m_mediator:g} eV: {exc}",
                EXIT_NUMERIC)
        except QuadratureError as exc:
            raise CommandError(str(exc), EXIT_NUMERIC)
        except ValueError as exc:
            raise CommandError(str(exc), EXIT_CONFIG)
        rows.append((halo.m_chi, coupling.m_mediator, rep.gamma_rate, rep.phase_rate,
                     rep.visibility, rep.phase))
        seeds.append(s)
        mc.append({"gamma_per_s": rep.mc_gamma_rate, "phase_rate_per_s": rep.mc_phase_rate})
    out = _out_dir(args, cfg)
    meta = {
        "config_hash": tag,
        "mode": args.mode,
        "cone_half_width_rad": None if mode == "isotropic" else cone.angular_width,
        "wind_angle_rad": None if mode == "isotropic" else cone.psi,
        "delta_x_m": sup.delta_x,
        "exposure_s": sup.exposure,
        "tolerances": {"quadrature_rtol": rtol, "monte_carlo_agreement": 0.05},
        "monte_carlo_samples": mc_samples,
        "root_seed": seed,
        "seeds": seeds,
        "monte_carlo": mc,
        **({"preset": args.preset} if args.preset else {}),
    }
    write_scan(out / f"scan_{tag}.csv", out / f"scan_{tag}.json", rows, meta)
    print(f"wrote {len(rows)} rows to {out / f'scan_{tag}.csv'}")
    return EXIT_OK


def cmd_table(args) -> int:
    sys.stdout.write(format_table(load_reference(), args.format or "text"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levi-dm",
        description="Levitated-sensor dark-matter toolkit: simulation, spectra, decoherence.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", metavar="PATH", help="JSON run configuration")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
        p.add_argument("--seed", type=int, metavar="N", help="root seed (overrides the config)")

    p = sub.add_parser("simulate", help="simulate trajectories for every ensemble member")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectra", help="averaged spectra and orientation fit")
    common(p)
    p.add_argument("inputs", nargs="*", metavar="GLOB",
                   help="trajectory CSVs (default: this config's simulate outputs)")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("decohere", help="dark-matter decoherence rates")
    common(p)
    p.add_argument("--preset", choices=PRESETS, metavar="NAME",
                   help=f"bundled scenario: {', '.join(PRESETS)}")
    p.add_argument("--mode", choices=("isotropic", "directional"), default="isotropic")
    p.add_argument("--scan", action="store_true",
                   help="allow lists of masses in the config and scan their lattice")
    p.set_defaults(func=cmd_decohere)

    p = sub.add_parser("table", help="print the reference sensitivity table")
    p.add_argument("--format", choices=FORMATS, default="text")
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"levi-dm {args.command}: {exc}", file=sys.stderr)
        return exc.code
    except SimulationError as exc:
        print(f"levi-dm {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"levi-dm {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"levi-dm {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
