"""Run configuration: JSON schema 1 with unit-suffixed field names.

Validation is all-or-nothing: every problem is collected with its field
path (``trap.mass_kg``) and reported together before any work starts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .decoherence import (
    Directional,
    Superposition,
    Target,
    YukawaCoupling,
    coupling_for_cross_section,
)
from .halo import SIDEREAL_YEAR_S, HaloModel, WindTrack
from .signals import (
    Constant,
    DirectionalStochastic,
    GasEnvironment,
    Harmonic,
    Impulse,
    TrapConfig,
    UncorrelatedBath,
)

SCHEMA_VERSION = 1
TWO_PI = 2.0 * math.pi
MBAR_TO_PA = 100.0


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class SimSettings:
    duration: float
    dt: float
    seed: int
    n_ensemble: int = 1
    record_every: int = 1
    epoch: float = 0.0


@dataclass(frozen=True)
class SpectraSettings:
    segment_length: int
    overlap: float = 0.5


@dataclass(frozen=True)
class DecoherenceSettings:
    m_chi: tuple[float, ...]
    m_mediator: tuple[float, ...]
    couplings: tuple[tuple[float, float] | None, ...]
    sigma_n_cm2: float | None
    target: Target
    superposition: Superposition
    mode: Directional | None
    mc_samples: int
    rtol: float

    def lattice(self, halo: HaloModel):
        """(HaloModel, YukawaCoupling) for every (m_chi, m_mediator) pair."""
        out = []
        for m_chi in self.m_chi:
            h = HaloModel(halo.rho_local, halo.v_mean, halo.v_escape, m_chi)
            for m_med in self.m_mediator:
                if self.sigma_n_cm2 is not None:
                    c = coupling_for_cross_section(m_chi, m_med, self.sigma_n_cm2, h.v_mean)
                else:
                    g_chi, g_m = self.couplings[0]
                    c = YukawaCoupling(g_chi, g_m, m_med)
                out.append((h, c))
        return out


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    trap: TrapConfig | None
    signals: tuple
    halo: HaloModel
    wind: WindTrack
    sim: SimSettings | None
    spectra: SpectraSettings | None
    decoherence: DecoherenceSettings | None
    output_dir: Path = field(default=Path("."))


class _Reader:
    """Collects typed values and problems keyed by field path."""

    def __init__(self):
        self.problems: list[str] = []

    def section(self, obj, path, required=True):
        if obj is None:
            if required:
                self.problems.append(f"{path}: required section missing")
            return None
        if not isinstance(obj, dict):
            self.problems.append(f"{path}: expected an object")
            return None
        return obj

    def number(self, obj, key, path, *, default=None, required=True, min_value=None,
               positive=False, integer=False):
        full = f"{path}.{key}" if path else key
        if obj is None:
            return default
        if key not in obj:
            if required and default is None:
                self.problems.append(f"{full}: required field missing")
            return default
        val = obj[key]
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            self.problems.append(f"{full}: expected a number")
            return default
        if integer and not float(val).is_integer():
            self.problems.append(f"{full}: expected an integer")
            return default
        if not math.isfinite(val):
            self.problems.append(f"{full}: must be finite")
            return default
        if positive and not val > 0:
            self.problems.append(f"{full}: must be positive")
            return default
        if min_value is not None and val < min_value:
            self.problems.append(f"{full}: must be >= {min_value}")
            return default
        return int(val) if integer else float(val)

    def vector(self, obj, key, path, *, length=3, default=None, required=True):
        full = f"{path}.{key}"
        if obj is None or key not in obj:
            if required and default is None:
                self.problems.append(f"{full}: required field missing")
            return default
        val = obj[key]
        if (not isinstance(val, list) or len(val) != length
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                           and math.isfinite(v) for v in val)):
            self.problems.append(f"{full}: expected a list of {length} finite numbers")
            return default
        return tuple(float(v) for v in val)

    def number_or_list(self, obj, key, path, positive=True):
        full = f"{path}.{key}"
        if obj is None or key not in obj:
            self.problems.append(f"{full}: required field missing")
            return None
        val = obj[key]
        vals = val if isinstance(val, list) else [val]
        if not vals or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                               and math.isfinite(v) and (v > 0 or not positive) for v in vals):
            self.problems.append(f"{full}: expected positive finite number(s)")
            return None
        return tuple(float(v) for v in vals)

    def attempt(self, path, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except (ValueError, TypeError) as exc:
            self.problems.append(f"{path}: {exc}")
            return None


def _per_axis(r, obj, stem, unit, path, **kw):
    return tuple(r.number(obj, f"{stem}_{ax}_{unit}", path, **kw) for ax in "xyz")


def _parse_trap(r, obj):
    t = r.section(obj, "trap")
    if t is None:
        return None
    mass = r.number(t, "mass_kg", "trap", positive=True)
    omega = _per_axis(r, t, "omega", "hz", "trap", positive=True)
    gamma = _per_axis(r, t, "gamma", "hz", "trap", min_value=0.0)
    temp = _per_axis(r, t, "temp", "k", "trap", min_value=0.0)
    rot = r.number(t, "detector_rotation_rad", "trap", default=0.0, required=False)
    gas = None
    if "gas" in t:
        g = r.section(t["gas"], "trap.gas")
        if g is not None:
            p = r.number(g, "pressure_mbar", "trap.gas", positive=True)
            gm = r.number(g, "gas_mass_kg", "trap.gas", positive=True)
            gv = r.number(g, "gas_velocity_m_per_s", "trap.gas", positive=True)
            if None not in (p, gm, gv):
                gas = GasEnvironment(p * MBAR_TO_PA, gm, gv)
    if None in (mass, rot) or None in omega or None in gamma or None in temp:
        return None
    return r.attempt("trap", TrapConfig, mass, tuple(TWO_PI * w for w in omega),
                     tuple(TWO_PI * g for g in gamma), temp, rot, gas)


def _parse_signal(r, s, path, wind):
    if not isinstance(s, dict) or "type" not in s:
        r.problems.append(f"{path}.type: required field missing")
        return None
    kind = s["type"]
    if kind == "constant":
        v = r.vector(s, "force_n", path)
        return None if v is None else r.attempt(path, Constant, v)
    if kind == "impulse":
        dp = r.vector(s, "delta_p_n_s", path)
        t0 = r.number(s, "t0_s", path, min_value=0.0)
        return None if None in (dp, t0) else r.attempt(path, Impulse, dp, t0)
    if kind == "harmonic":
        amp = r.number(s, "amplitude_n", path)
        f = r.number(s, "freq_hz", path, positive=True)
        ph = r.number(s, "phase_rad", path, default=0.0, required=False)
        d = r.vector(s, "direction", path, default=(1.0, 0.0, 0.0), required=False)
        if None in (amp, f):
            return None
        return r.attempt(path, Harmonic, amp, TWO_PI * f, ph, d)
    if kind == "directional":
        sf = r.number(s, "s_force_n2_per_hz", path, min_value=0.0)
        psi = s.get("psi_rad", "wind")
        if psi == "wind":
            psi = wind
        elif isinstance(psi, bool) or not isinstance(psi, (int, float)) or not math.isfinite(psi):
            r.problems.append(f"{path}.psi_rad: expected a number or \"wind\"")
            return None
        return None if sf is None else r.attempt(path, DirectionalStochastic, sf, psi)
    if kind == "bath":
        v = r.vector(s, "s_force_n2_per_hz", path)
        return None if v is None else r.attempt(path, UncorrelatedBath, v)
    r.problems.append(f"{path}.type: unknown signal type {kind!r}")
    return None


def _parse_decoherence(r, d):
    path = "decoherence"
    m_chi = r.number_or_list(d, "m_chi_ev", path)
    m_med = r.number_or_list(d, "m_mediator_ev", path)
    sigma = r.number(d, "sigma_n_cm2", path, required=False, positive=True)
    g_chi = r.number(d, "g_chi", path, required=False, min_value=0.0)
    g_m = r.number(d, "g_m", path, required=False, min_value=0.0)
    if sigma is None and (g_chi is None or g_m is None):
        r.problems.append(f"{path}.sigma_n_cm2: give sigma_n_cm2 or both g_chi and g_m")
    tgt = r.section(d.get("target", {}), f"{path}.target")
    radius = r.number(tgt, "radius_m", f"{path}.target", default=50e-9, positive=True)
    dens = r.number(tgt, "density_kg_per_m3", f"{path}.target", default=2200.0, positive=True)
    dx = r.number(d, "delta_x_m", path, default=100e-9, min_value=0.0)
    expo = r.number(d, "exposure_s", path, default=1.0, min_value=0.0)
    psi = r.number(d, "psi_rad", path, default=0.0)
    width = r.number(d, "cone_half_width_deg", path, default=5.0, positive=True)
    n_mc = r.number(d, "mc_samples", path, default=1_000_000, positive=True, integer=True)
    rtol = r.number(d, "rtol", path, default=1e-3, positive=True)
    if None in (m_chi, m_med, radius, dens, dx, expo, psi, width, n_mc, rtol):
        return None
    target = r.attempt(f"{path}.target", Target.sphere, radius, dens)
    mode = r.attempt(f"{path}.cone_half_width_deg", Directional, psi, math.radians(width))
    if target is None or mode is None:
        return None
    return DecoherenceSettings(m_chi, m_med, ((g_chi, g_m),) if sigma is None else (None,),
                               sigma, target, Superposition(dx, expo), mode, n_mc, rtol)


def parse_config(raw, base_dir: Path | None = None) -> RunConfig:
    """Validate a decoded JSON document; raises :class:`ConfigError`."""
    r = _Reader()
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a JSON object"])
    if raw.get("schema") != SCHEMA_VERSION:
        r.problems.append(f"schema: expected {SCHEMA_VERSION}")

    hsec = r.section(raw.get("halo", {}), "halo")
    hvals = (r.number(hsec, "rho_local_gev_per_cm3", "halo", default=0.3, min_value=0.0),
             r.number(hsec, "v_mean_m_per_s", "halo", default=220e3, positive=True),
             r.number(hsec, "v_escape_m_per_s", "halo", default=544e3, positive=True),
             r.number(hsec, "m_chi_ev", "halo", default=1e9, positive=True))
    halo = r.attempt("halo", HaloModel, *hvals) if hsec is not None and None not in hvals else None

    wsec = r.section(raw.get("wind", {}), "wind")
    wvals = (r.number(wsec, "psi_mean_rad", "wind", default=0.0),
             r.number(wsec, "psi_amplitude_rad", "wind", default=0.3, min_value=0.0),
             r.number(wsec, "period_s", "wind", default=SIDEREAL_YEAR_S, positive=True),
             r.number(wsec, "phase_zero_day", "wind", default=0.0))
    wind = r.attempt("wind", WindTrack, *wvals) if wsec is not None and None not in wvals else None

    trap = _parse_trap(r, raw["trap"]) if "trap" in raw else None

    signals = []
    sig_list = raw.get("signals", [])
    if not isinstance(sig_list, list):
        r.problems.append("signals: expected a list")
        sig_list = []
    for i, s in enumerate(sig_list):
        signals.append(_parse_signal(r, s, f"signals[{i}]", wind))

    sim = None
    if "sim" in raw:
        s = r.section(raw["sim"], "sim")
        vals = (r.number(s, "duration_s", "sim", positive=True),
                r.number(s, "dt_s", "sim", positive=True),
                r.number(s, "seed", "sim", min_value=0, integer=True),
                r.number(s, "n_ensemble", "sim", default=1, positive=True, integer=True),
                r.number(s, "record_every", "sim", default=1, positive=True, integer=True),
                r.number(s, "epoch_s", "sim", default=0.0))
        if s is not None and None not in vals:
            if vals[2] >= 2**64:
                r.problems.append("sim.seed: must fit in 64 bits")
            else:
                sim = SimSettings(*vals)

    spectra = None
    if "spectra" in raw:
        s = r.section(raw["spectra"], "spectra")
        seg = r.number(s, "segment_length", "spectra", positive=True, integer=True)
        ov = r.number(s, "overlap", "spectra", default=0.5, min_value=0.0)
        if ov is not None and ov > 0.9:
            r.problems.append("spectra.overlap: must lie in [0, 0.9]")
        elif s is not None and None not in (seg, ov):
            spectra = SpectraSettings(seg, ov)

    deco = None
    if "decoherence" in raw:
        d = r.section(raw["decoherence"], "decoherence")
        if d is not None:
            deco = _parse_decoherence(r, d)

    out = raw.get("output_dir", ".")
    if not isinstance(out, str) or not out:
        r.problems.append("output_dir: expected a non-empty string")
        out = "."
    out_path = Path(out)
    if base_dir is not None and not out_path.is_absolute():
        out_path = base_dir / out_path

    if r.problems:
        raise ConfigError(r.problems)
    return RunConfig(raw=raw, trap=trap, signals=tuple(signals), halo=halo, wind=wind, sim=sim,
                     spectra=spectra, decoherence=deco, output_dir=out_path)


def load_config(path) -> RunConfig:
    """Read and validate a config file.

    Raises ``OSError`` when unreadable and :class:`ConfigError` otherwise.
    Relative ``output_dir`` values resolve against the config's directory.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<root>: invalid JSON ({exc.msg} at line {exc.lineno})"]) from None
    return parse_config(raw, base_dir=path.parent)
