import csv
import hashlib
import json
from pathlib import Path

import pytest

from hubbard_vca.cli import EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_OK, EXIT_RESOURCE, main

SMALL = {
    "model": {"dimension": 1, "L_c": 2, "N_c": 10, "t": 1.0, "U": 0.0, "mu": 0.0, "T": 1.0},
    "variational": {"mu_prime": 0.2, "delta_prime": 0.1},
    "grid": {"dtau": 0.1, "n_max": 300},
    "scan": {"mu_prime": {"start": -0.2, "stop": 0.2, "num": 3},
             "delta_prime": {"start": -0.2, "stop": 0.2, "num": 3}},
    "seed": 5,
}


def write_config(tmp_path: Path, data: dict, name="cfg.json") -> str:
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def run(tmp_path, command, data, *extra):
    out = tmp_path / command
    code = main([command, "--config", write_config(tmp_path, data), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_solve_cluster_writes_spectrum(tmp_path):
    code, out = run(tmp_path, "solve-cluster", SMALL)
    assert code == EXIT_OK
    rows = read_csv(out / "spectrum.csv")
    assert len(rows) == 16
    assert sum(float(r["boltzmann_weight"]) for r in rows) == pytest.approx(1.0)
    manifest = json.loads((out / "manifest_solve-cluster.json").read_text())
    for name, digest in manifest["artifacts"].items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest


def test_potthoff_scan_table(tmp_path):
    code, out = run(tmp_path, "potthoff-scan", SMALL)
    assert code == EXIT_OK
    assert len(read_csv(out / "scan.csv")) == 9


def test_saddle_then_observables(tmp_path):
    code, out = run(tmp_path, "saddle", SMALL)
    assert code == EXIT_OK
    saddle = json.loads((out / "saddle.json").read_text())
    assert saddle["converged"] and abs(saddle["delta_prime"]) < 1e-3
    code, obs = run(tmp_path, "observables", SMALL, "--params", str(out / "saddle.json"))
    assert code == EXIT_OK
    scalars = json.loads((obs / "scalars.json").read_text())
    assert scalars["n"] == pytest.approx(0.5, abs=0.01)
    assert scalars["xi"] is None
    assert len(read_csv(obs / "distributions.csv")) == 20


def test_measure_gf_is_deterministic(tmp_path):
    data = {**SMALL, "backend": {"kind": "emulator", "emulator": {"shots": 1000}},
            "grid": {"dtau": 0.1, "n_max": 60}}
    code_a, a = run(tmp_path, "measure-gf", data)
    b = tmp_path / "again"
    code_b = main(["measure-gf", "--config", write_config(tmp_path, data, "b.json"), "--out", str(b)])
    assert code_a == code_b == EXIT_OK
    for name in ("traces.csv", "green.csv", "grid.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma = json.loads((a / "manifest_measure-gf.json").read_text())["artifacts"]
    mb = json.loads((b / "manifest_measure-gf.json").read_text())["artifacts"]
    assert ma == mb


def test_measure_gf_seed_changes_noise(tmp_path):
    data = {**SMALL, "backend": {"kind": "emulator", "emulator": {"shots": 1000}},
            "grid": {"dtau": 0.1, "n_max": 60}}
    _, a = run(tmp_path, "measure-gf", data)
    c = tmp_path / "other"
    main(["measure-gf", "--config", write_config(tmp_path, data, "c.json"), "--out", str(c), "--seed", "99"])
    assert (a / "traces.csv").read_bytes() != (c / "traces.csv").read_bytes()


def test_gibbs_study_rows(tmp_path):
    data = {"gibbs_study": {"m_values": [4, 8]}, "seed": 1}
    code, out = run(tmp_path, "gibbs-study", data)
    assert code == EXIT_OK
    assert [int(r["m"]) for r in read_csv(out / "gibbs.csv")] == [4, 8]


def test_invalid_config_reports_fields(tmp_path, capsys):
    code, _ = run(tmp_path, "solve-cluster", {"model": {"T": -1, "colour": "red"}})
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "model.T" in err and "model.colour" in err


def test_one_dimensional_d_wave_rejected(tmp_path):
    code, _ = run(tmp_path, "solve-cluster", {"variational": {"delta_d_prime": 0.1}})
    assert code == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    assert main(["solve-cluster", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG


def test_unconverged_saddle_still_writes(tmp_path):
    data = {**SMALL, "solver": {"max_iter": 0}}
    code, out = run(tmp_path, "saddle", data)
    assert code == EXIT_NONCONVERGED
    assert not json.loads((out / "saddle.json").read_text())["converged"]


def test_resource_guard_exit(tmp_path):
    data = {"model": {"L_c": 4}, "gibbs_study": {"system": "cluster", "m_values": [64]},
            "backend": {"kind": "emulator", "emulator": {"riera": {"m": 64, "r": 16, "q": 4}}}}
    code, _ = run(tmp_path, "gibbs-study", data)
    assert code == EXIT_RESOURCE
