import json
import math
from pathlib import Path

import numpy as np
import pytest

from levidm import cli, decoherence
from levidm.cli import main, member_seed
from levidm.config import ConfigError, parse_config
from levidm.fileio import (
    FormatError,
    SCAN_HEADER,
    config_hash,
    read_scan_csv,
    read_spectra_csv,
    read_trajectory_csv,
    write_trajectory_csv,
)
from levidm.langevin import simulate
from levidm.reference import format_table, load_reference
from levidm.signals import TrapConfig
from levidm.units import K_B

GOLDEN = Path(__file__).parent / "golden" / "table1.txt"
S_TH = 4 * K_B * 300 * 1e-18 * 2 * math.pi * 100


def base_config(tmp_path, **over):
    cfg = {
        "schema": 1,
        "trap": {
            "mass_kg": 1e-18,
            "omega_x_hz": 1000.0, "omega_y_hz": 1100.0, "omega_z_hz": 1300.0,
            "gamma_x_hz": 100.0, "gamma_y_hz": 100.0, "gamma_z_hz": 100.0,
            "temp_x_k": 300.0, "temp_y_k": 300.0, "temp_z_k": 300.0,
        },
        "signals": [],
        "sim": {"duration_s": 0.05, "dt_s": 1e-6, "seed": 7, "n_ensemble": 2, "record_every": 10},
        "spectra": {"segment_length": 256},
        "output_dir": "out",
    }
    cfg.update(over)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    return path, cfg


# config

def test_config_reports_every_problem(tmp_path):
    path, cfg = base_config(tmp_path)
    del cfg["trap"]["mass_kg"]
    cfg["sim"]["dt_s"] = -1
    cfg["signals"] = [{"type": "warp"}]
    with pytest.raises(ConfigError) as info:
        parse_config(cfg)
    text = "\n".join(info.value.problems)
    for field in ("trap.mass_kg", "sim.dt_s", "signals[0].type"):
        assert field in text


def test_config_units_and_defaults(tmp_path):
    path, cfg = base_config(tmp_path)
    cfg["signals"] = [{"type": "directional", "s_force_n2_per_hz": 1.0}]
    run = parse_config(cfg, base_dir=tmp_path)
    assert run.trap.omega[1] == pytest.approx(2 * math.pi * 1100)
    assert run.output_dir == tmp_path / "out"
    # "wind" is the default orientation
    assert run.signals[0].psi == run.wind
    assert run.spectra.overlap == 0.5


def test_config_rejects_wrong_schema(tmp_path):
    path, cfg = base_config(tmp_path, schema=2)
    with pytest.raises(ConfigError):
        parse_config(cfg)


def test_bundled_configs_parse():
    root = Path(__file__).parents[1] / "configs"
    for p in root.glob("*.json"):
        parse_config(json.loads(p.read_text()), base_dir=root)


def test_member_seeds_distinct_and_stable():
    seeds = [member_seed(7, i) for i in range(50)]
    assert len(set(seeds)) == 50
    assert seeds == [member_seed(7, i) for i in range(50)]


def test_config_hash_ignores_key_order():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


# file formats

def test_trajectory_round_trip(tmp_path):
    tr = TrapConfig(1e-18, (6283.0, 7000.0, 8000.0), (600.0,) * 3, (300.0,) * 3)
    traj = simulate(tr, [], 0.01, 1e-6, 3, record_every=7)
    write_trajectory_csv(tmp_path / "t.csv", traj)
    dt, pos, vel = read_trajectory_csv(tmp_path / "t.csv")
    assert dt == pytest.approx(7e-6, rel=1e-12)
    np.testing.assert_array_equal(pos, traj.positions)
    np.testing.assert_array_equal(vel, traj.velocities)


def test_trajectory_rejects_bad_files(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,x,y\n0,1,2\n")
    with pytest.raises(FormatError):
        read_trajectory_csv(p)
    p.write_text("t,x,y,z,vx,vy,vz\n0,0,0,0,0,0,0\n1,0,0,0,0,0,0\n3,0,0,0,0,0,0\n")
    with pytest.raises(FormatError):
        read_trajectory_csv(p)


# reference table

def test_table_text_matches_golden():
    assert format_table(load_reference(), "text") == GOLDEN.read_text(encoding="utf-8")


def test_table_json_round_trip():
    entries = load_reference()
    data = json.loads(format_table(entries, "json"))
    assert len(data) == 10
    assert [d["candidate"] for d in data] == [e.candidate for e in entries]
    assert {d["flag"] for d in data} == {"measured", "projected", "multi-particle"}


def test_table_csv_and_bad_format():
    lines = format_table(load_reference(), "csv").splitlines()
    assert lines[0].startswith("levitation_type,") and len(lines) == 11
    with pytest.raises(ValueError):
        format_table(load_reference(), "xml")


# command line

def test_simulate_writes_members_and_manifest(tmp_path, capsys):
    path, _ = base_config(tmp_path)
    assert main(["simulate", "--config", str(path)]) == 0
    out = tmp_path / "out"
    (manifest,) = out.glob("manifest_*.json")
    meta = json.loads(manifest.read_text())
    assert len(meta["files"]) == 2 and len(set(meta["seeds"])) == 2
    for name in meta["files"]:
        dt, pos, _ = read_trajectory_csv(out / name)
        assert dt == pytest.approx(1e-5)
        assert pos.shape == (3, 5000)
    first = (out / meta["files"][0]).read_bytes()
    assert main(["simulate", "--config", str(path)]) == 0
    assert (out / meta["files"][0]).read_bytes() == first


def test_seed_override_changes_hash(tmp_path):
    path, _ = base_config(tmp_path)
    main(["simulate", "--config", str(path), "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(path), "--out", str(tmp_path / "b"), "--seed", "8"])
    (a,) = (tmp_path / "a").glob("manifest_*.json")
    (b,) = (tmp_path / "b").glob("manifest_*.json")
    assert a.name != b.name


def test_missing_mass_is_config_error(tmp_path, capsys):
    path, cfg = base_config(tmp_path)
    del cfg["trap"]["mass_kg"]
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path)]) == 2
    assert "trap.mass_kg" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_missing_config_file_is_io_error(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == 3


def test_malformed_json_is_config_error(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert main(["simulate", "--config", str(p)]) == 2


def test_unwritable_output_is_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    path, _ = base_config(tmp_path)
    assert main(["simulate", "--config", str(path), "--out", str(blocker / "sub")]) == 3


def test_numeric_failure_exit_code(tmp_path):
    path, cfg = base_config(tmp_path)
    cfg["signals"] = [{"type": "constant", "force_n": [1e300, 0, 0]}]
    cfg["trap"]["mass_kg"] = 1e-300
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path)]) == 4


@pytest.mark.parametrize("deg,sign", [(30.0, 1), (-30.0, -1)])
def test_spectra_end_to_end(tmp_path, deg, sign):
    path, cfg = base_config(tmp_path)
    cfg["signals"] = [{"type": "directional", "s_force_n2_per_hz": 3 * S_TH,
                       "psi_rad": math.radians(deg)}]
    cfg["sim"].update(duration_s=3.0, n_ensemble=1)
    cfg["spectra"] = {"segment_length": 4096}
    path.write_text(json.dumps(cfg))
    assert main(["simulate", "--config", str(path)]) == 0
    assert main(["spectra", "--config", str(path)]) == 0
    out = tmp_path / "out"
    (orient,) = out.glob("orientation_*.json")
    fit = json.loads(orient.read_text())
    assert fit["quadrant_sign"] == sign
    (spec,) = out.glob("spectra_*.csv")
    data = read_spectra_csv(spec)
    assert data["freqs"][0] == 0 and np.all(data["s_xx"] >= 0)
    (side,) = out.glob("spectra_*.json")
    meta = json.loads(side.read_text())
    assert meta["window"] == "hann" and meta["n_averages"] >= 50


def test_spectra_rejects_mixed_sample_intervals(tmp_path):
    path, _ = base_config(tmp_path)
    tr = TrapConfig(1e-18, (6283.0, 7000.0, 8000.0), (600.0,) * 3, (300.0,) * 3)
    write_trajectory_csv(tmp_path / "a.csv", simulate(tr, [], 0.01, 1e-6, 1, record_every=10))
    write_trajectory_csv(tmp_path / "b.csv", simulate(tr, [], 0.01, 1e-6, 1, record_every=5))
    rc = main(["spectra", "--config", str(path), str(tmp_path / "a.csv"), str(tmp_path / "b.csv")])
    assert rc == 2


def test_spectra_without_inputs_is_config_error(tmp_path):
    path, _ = base_config(tmp_path)
    assert main(["spectra", "--config", str(path)]) == 2


def test_decohere_bateman_isotropic(tmp_path):
    assert main(["decohere", "--preset", "bateman-100ev", "--out", str(tmp_path)]) == 0
    (csv_path,) = tmp_path.glob("scan_*.csv")
    header = csv_path.read_text().splitlines()[0]
    assert tuple(header.split(",")) == SCAN_HEADER
    (row,) = read_scan_csv(csv_path)
    assert row[0] == 100.0 and row[3] == 0.0 and row[2] > 0
    (side,) = tmp_path.glob("scan_*.json")
    meta = json.loads(side.read_text())
    assert meta["preset"] == "bateman-100ev" and len(meta["seeds"]) == 1
    assert meta["tolerances"]["monte_carlo_agreement"] == 0.05


def test_decohere_directional_has_phase(tmp_path):
    rc = main(["decohere", "--preset", "bateman-100ev", "--mode", "directional",
               "--out", str(tmp_path)])
    assert rc == 0
    (row,) = read_scan_csv(next(tmp_path.glob("scan_*.csv")))
    assert abs(row[3]) > row[2] > 0


def test_decohere_config_scan(tmp_path):
    cfg = json.loads((Path(__file__).parents[1] / "configs" / "decohere_scan.json").read_text())
    cfg["decoherence"]["mc_samples"] = 200_000
    p = tmp_path / "scan.json"
    p.write_text(json.dumps(cfg))
    assert main(["decohere", "--config", str(p)]) == 2
    assert main(["decohere", "--config", str(p), "--scan"]) == 0
    rows = read_scan_csv(next((tmp_path / "out").glob("scan_*.csv")))
    assert [(r[0], r[1]) for r in rows] == [(1e3, 1e-2), (1e3, 1e4), (1e5, 1e-2), (1e5, 1e4)]


def test_decohere_oracle_disagreement_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(decoherence, "_monte_carlo", lambda *a, **k: 0.0j)
    assert main(["decohere", "--preset", "bateman-100ev", "--out", str(tmp_path)]) == 4


def test_decohere_needs_exactly_one_source(tmp_path):
    assert main(["decohere", "--out", str(tmp_path)]) == 2


def test_table_command(capsys):
    assert main(["table"]) == 0
    assert capsys.readouterr().out == GOLDEN.read_text(encoding="utf-8")
    assert main(["table", "--format", "json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 10


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "levi-dm" in capsys.readouterr().out
