"""Flat-file formats: trajectory, spectra and scan CSVs with JSON sidecars."""
from __future__ import annotations

import csv
import hashlib
import json

import numpy as np

from .spectra import SpectralEstimate

TRAJECTORY_HEADER = ("t", "x", "y", "z", "vx", "vy", "vz")
SPECTRA_HEADER = ("f_hz", "s_xx", "s_yy", "s_zz", "re_s_xy", "im_s_xy")
SCAN_HEADER = ("m_chi_ev", "m_mediator_ev", "gamma_per_s", "phase_rate_per_s", "visibility",
               "phase_rad")
FLOAT_FMT = "%.17g"


class FormatError(ValueError):
    """A data file does not have the expected layout."""


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(config: dict) -> str:
    """Short SHA-256 of the canonical JSON form of a config."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_table(path, header, columns) -> None:
    data = np.column_stack(columns)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt=FLOAT_FMT, delimiter=",")


def _read_table(path, header):
    with open(path, encoding="ascii") as fh:
        first = fh.readline().strip()
        if tuple(first.split(",")) != header:
            raise FormatError(f"{path}: expected header {','.join(header)!r}, found {first!r}")
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise FormatError(f"{path}: {exc}") from None
    if data.shape[1] != len(header):
        raise FormatError(f"{path}: expected {len(header)} columns")
    return data


def write_trajectory_csv(path, traj) -> None:
    """Write ``t,x,y,z,vx,vy,vz`` rows in SI with 17 significant digits."""
    _write_table(path, TRAJECTORY_HEADER,
                 [traj.times, *traj.positions, *traj.velocities])


def read_trajectory_csv(path, rtol: float = 1e-9):
    """Load a trajectory CSV and return ``(dt, positions, velocities)``.

    Rejects files whose time column is not uniformly spaced.
    """
    data = _read_table(path, TRAJECTORY_HEADER)
    if data.shape[0] < 2:
        raise FormatError(f"{path}: need at least two samples")
    t = data[:, 0]
    steps = np.diff(t)
    dt = (t[-1] - t[0]) / (len(t) - 1)
    # round-off in printed times grows with |t|
    tol = rtol * dt + 8 * np.finfo(float).eps * max(abs(t[0]), abs(t[-1]))
    if not dt > 0 or np.max(np.abs(steps - dt)) > tol:
        raise FormatError(f"{path}: time column is not uniformly sampled")
    return float(dt), data[:, 1:4].T.copy(), data[:, 4:7].T.copy()


def write_spectra(csv_path, json_path, est: SpectralEstimate, extra: dict | None = None) -> None:
    _write_table(csv_path, SPECTRA_HEADER,
                 [est.freqs, est.s_xx, est.s_yy, est.s_zz, est.s_xy.real, est.s_xy.imag])
    meta = {
        "n_averages": est.n_averages,
        "window": est.window,
        "segment_length": est.segment_length,
        "overlap": est.overlap,
        "sample_interval_s": est.dt,
    }
    meta.update(extra or {})
    write_json(json_path, meta)


def read_spectra_csv(path):
    data = _read_table(path, SPECTRA_HEADER)
    return {
        "freqs": data[:, 0], "s_xx": data[:, 1], "s_yy": data[:, 2], "s_zz": data[:, 3],
        "s_xy": data[:, 4] + 1j * data[:, 5],
    }


def write_scan(csv_path, json_path, rows, meta: dict) -> None:
    """``rows`` are sequences in :data:`SCAN_HEADER` order."""
    with open(csv_path, "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCAN_HEADER)
        for row in rows:
            w.writerow([FLOAT_FMT % float(v) for v in row])
    write_json(json_path, meta)


def read_scan_csv(path):
    with open(path, encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SCAN_HEADER:
            raise FormatError(f"{path}: unexpected header")
        return [[float(v) for v in row] for row in reader]
