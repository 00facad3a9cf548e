import json

import pytest

from cpblab.cli import build_parser, main
from cpblab.commands import band as cmd_band
from cpblab.commands import compare as cmd_compare
from cpblab.commands import coupled as cmd_coupled
from cpblab.commands import dynamics as cmd_dynamics
from cpblab.commands import gibbs as cmd_gibbs
from cpblab.commands import lindblad as cmd_lindblad
from cpblab.commands import spectrum as cmd_spectrum
from cpblab.commands import witness as cmd_witness
from cpblab.fs import read_csv
from .conftest import ns


def test_spectrum_writes_levels_with_config_echo(tmp_path, cfg_default, capsys):
    args = ns(out=tmp_path, cmd="spectrum")
    rc = cmd_spectrum.run(args, cfg_default)
    out = capsys.readouterr().out
    assert rc == 0
    assert "[spectrum] model=bose-hubbard" in out
    assert "[done]" in out

    meta, header, rows = read_csv(tmp_path / "spectrum.csv")
    assert meta["schema"] == "cpblab/spectrum/v1"
    assert meta["config"]["box"]["E_J"] == 5.0
    assert meta["params"]["N"] == 200
    assert header == ["level", "energy", "gap", "number_mean", "number_variance"]
    assert len(rows) == 5
    assert rows[0][0] == "0" and float(rows[0][2]) == 0.0


@pytest.mark.parametrize("model", ["two-mode", "oscillator", "phase"])
def test_spectrum_other_models(tmp_path, cfg_default, model):
    args = ns(out=tmp_path, cmd="spectrum", model=model)
    assert cmd_spectrum.run(args, cfg_default) == 0
    meta, header, rows = read_csv(tmp_path / "spectrum.csv")
    assert meta["config"]["spectrum"]["model"] == model
    assert len(rows) == 5
    gaps = [float(r[2]) for r in rows]
    assert gaps == sorted(gaps)


def test_band_sweep_command(tmp_path, cfg_default, capsys):
    args = ns(out=tmp_path, cmd="band", workers=2)
    assert cmd_band.run(args, cfg_default) == 0
    assert "band 0: width" in capsys.readouterr().out
    meta, header, rows = read_csv(tmp_path / "band.csv")
    assert header == ["a", "E0", "E1", "E2", "E3"]
    assert [float(r[0]) for r in rows] == pytest.approx([0.0, 0.2, 0.4, 0.6, 0.8])
    assert len(meta["band_widths"]) == 4


@pytest.mark.parametrize("model", ["pendulum", "gp"])
def test_dynamics_command(tmp_path, cfg_default, capsys, model):
    args = ns(out=tmp_path, cmd="dynamics", model=model)
    assert cmd_dynamics.run(args, cfg_default) == 0
    out = capsys.readouterr().out
    assert "energy drift" in out
    meta, header, rows = read_csv(tmp_path / "dynamics.csv")
    assert header[:5] == ["t", "theta_wrapped", "theta_unwrapped", "xi", "energy"]
    assert len(rows) == 201
    assert float(rows[-1][0]) == pytest.approx(2.0)
    if model == "gp":
        assert meta["norm_drift"] < 1e-9


def test_dynamics_with_pulse(tmp_path, cfg_default):
    cfg_default["dynamics"]["control"] = {"kind": "gaussian_pulse", "amplitude": 0.4, "center": 0.5, "width": 0.1}
    args = ns(out=tmp_path, cmd="dynamics", theta0=0.0)
    assert cmd_dynamics.run(args, cfg_default) == 0
    _, _, rows = read_csv(tmp_path / "dynamics.csv")
    assert max(abs(float(r[3])) for r in rows) > 0.0


@pytest.mark.parametrize("model", ["pendulum", "gp"])
def test_coupled_command(tmp_path, cfg_default, capsys, model):
    args = ns(out=tmp_path, cmd="coupled", model=model)
    assert cmd_coupled.run(args, cfg_default) == 0
    assert "normal modes" in capsys.readouterr().out
    meta, header, rows = read_csv(tmp_path / "coupled.csv")
    assert header == ["t", "theta", "xi", "theta2", "xi2", "energy"]
    assert len(meta["normal_modes"]) == 2
    energies = [float(r[5]) for r in rows]
    assert max(energies) - min(energies) < 1e-6


@pytest.mark.parametrize("state,hamiltonian", [("coherent", False), ("fock", False), ("coherent", True)])
def test_lindblad_command(tmp_path, cfg_default, capsys, state, hamiltonian):
    args = ns(out=tmp_path, cmd="lindblad", state=state, hamiltonian=hamiltonian or None)
    assert cmd_lindblad.run(args, cfg_default) == 0
    assert "decay rate" in capsys.readouterr().out
    meta, header, rows = read_csv(tmp_path / "lindblad.csv")
    expected = 0.01 if state == "coherent" else 0.11 * 4 + 0.01
    assert meta["decay_rate"] == pytest.approx(expected, abs=1e-6)
    assert meta["finite_difference_rate"] == pytest.approx(expected, rel=1e-3)
    assert header == ["t", "fidelity", "trace", "purity", "mean_number"]
    assert float(rows[0][1]) == pytest.approx(1.0)
    assert float(rows[-1][1]) < 1.0


def test_gibbs_command(tmp_path, cfg_default):
    args = ns(out=tmp_path, cmd="gibbs", kT=[0.25, 0.5])
    assert cmd_gibbs.run(args, cfg_default) == 0
    _, header, rows = read_csv(tmp_path / "gibbs.csv")
    assert header == ["kT", "kT_over_E_C", "mean", "variance"]
    assert len(rows) == 2
    assert float(rows[0][3]) < 0.1
    assert float(rows[1][3]) == pytest.approx(0.215, rel=0.01)


def test_witness_command(tmp_path, cfg_default, capsys):
    args = ns(out=tmp_path, cmd="witness")
    assert cmd_witness.run(args, cfg_default) == 0
    assert "strongest violation" in capsys.readouterr().out
    doc = json.loads((tmp_path / "witness.json").read_text(encoding="utf-8"))
    assert doc["schema"] == "cpblab/witness/v1"
    assert doc["certified"] is True
    assert doc["witness_value"] < 0
    check = doc["classical_check"]
    assert (check["samples"], check["failures"], check["passed"]) == (200, 0, True)
    assert doc["config"]["witness"]["samples"] == 200


def test_witness_custom_pair(tmp_path, cfg_default):
    cfg_default["witness"].update(paper_instance=False, A=[[1, 0], [0, 0]], B=[[1, 0], [0, 1]], samples=0)
    args = ns(out=tmp_path, cmd="witness")
    assert cmd_witness.run(args, cfg_default) == 0
    doc = json.loads((tmp_path / "witness.json").read_text(encoding="utf-8"))
    assert doc["violating_state"] is None
    assert "classical_check" not in doc


def test_compare_command(tmp_path, cfg_default, capsys):
    args = ns(out=tmp_path, cmd="compare")
    assert cmd_compare.run(args, cfg_default) == 0
    assert "plasma frequency" in capsys.readouterr().out
    meta, header, rows = read_csv(tmp_path / "compare.csv")
    assert header[0] == "level"
    assert len(rows) == 5
    assert meta["max_relative_deviation"] < 1e-3
    assert set(meta["plasma"]) == {"formula", "oscillator_gap", "pendulum"}


def test_identical_runs_give_identical_files(tmp_path, cfg_default):
    for cmd in (cmd_spectrum, cmd_band, cmd_gibbs):
        assert cmd.run(ns(out=tmp_path), cfg_default) == 0
    first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
    for cmd in (cmd_spectrum, cmd_band, cmd_gibbs):
        cmd.run(ns(out=tmp_path), cfg_default)
    assert {p.name: p.read_bytes() for p in tmp_path.iterdir()} == first
    assert sorted(first) == ["band.csv", "gibbs.csv", "spectrum.csv"]


def test_main_reports_invalid_settings(tmp_path, capsys):
    rc = main(["--out", str(tmp_path), "dynamics", "--dt", "0.5", "--stride", "0"])
    assert rc == 2
    line = next(l for l in capsys.readouterr().out.splitlines() if l.startswith("[error] "))
    err = json.loads(line[len("[error] "):])
    assert err["error"] == "ConfigError"
    assert len(err["problems"]) == 2
    assert not (tmp_path / "dynamics.csv").exists()


def test_main_with_config_file_and_flags(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"box": {"E_J": 5.0, "N": 200, "n_bar": 100.0}, "gibbs": {"kT": [0.5]}}),
                        encoding="utf-8")
    rc = main(["-c", str(cfg_path), "--out", str(tmp_path), "gibbs", "--n-bar", "50"])
    assert rc == 0
    assert "[info] loaded config" in capsys.readouterr().out
    meta, _, rows = read_csv(tmp_path / "gibbs.csv")
    assert meta["config"]["box"]["n_bar"] == 50.0
    assert meta["config"]["box"]["E_J"] == 5.0
    assert len(rows) == 1
    assert float(rows[0][2]) == pytest.approx(50.0, abs=1e-9)


def test_main_witness(tmp_path):
    assert main(["--out", str(tmp_path), "--seed", "3", "witness", "--samples", "100"]) == 0
    doc = json.loads((tmp_path / "witness.json").read_text(encoding="utf-8"))
    assert doc["classical_check"]["samples"] == 100
    assert doc["config"]["seed"] == 3


def test_main_echoes_warnings(tmp_path, capsys):
    rc = main(["--out", str(tmp_path), "lindblad", "--state", "fock", "--fock", "4", "--cutoff", "6",
               "--t-end", "0.01", "--dt", "0.001", "--gamma", "0.0", "--delta", "1e-5"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "[warn] TruncationWarning" in out


def test_main_spectrum_command_line(tmp_path):
    rc = main(["--out", str(tmp_path), "spectrum", "--model", "bose-hubbard", "--N", "2000", "--n-bar", "1000",
               "--ec", "1", "--ej", "50", "--count", "5"])
    assert rc == 0
    meta, _, rows = read_csv(tmp_path / "spectrum.csv")
    assert len(rows) == 5
    assert meta["config"]["box"] == {"E_C": 1.0, "E_J": 50.0, "N": 2000, "n_bar": 1000.0}


def test_main_witness_paper_instance(tmp_path):
    assert main(["--out", str(tmp_path), "witness", "--paper-instance"]) == 0
    doc = json.loads((tmp_path / "witness.json").read_text(encoding="utf-8"))
    assert doc["config"]["witness"]["paper_instance"] is True
    assert doc["witness_value"] == pytest.approx(-0.0590, abs=1e-3)


def test_main_compare_model_list(tmp_path, capsys):
    rc = main(["--out", str(tmp_path), "compare", "--models", "bose-hubbard,phase", "--match-convention"])
    assert rc == 0
    assert "phase: max relative gap error" in capsys.readouterr().out
    meta, header, rows = read_csv(tmp_path / "compare.csv")
    assert meta["config"]["compare"]["models"] == ["bose-hubbard", "phase"]
    assert meta["config"]["compare"]["match_convention"] is True
    assert header == ["level", "bose-hubbard_gap", "phase_gap", "phase_difference", "phase_relative_error"]
    assert len(rows) == 5
    assert meta["max_relative_deviation"] < 1e-3


def test_model_flags_accumulate():
    args = build_parser().parse_args(["compare", "--model", "bose-hubbard", "--models", "phase, two-mode"])
    assert args.models == ["bose-hubbard", "phase", "two-mode"]
    args = build_parser().parse_args(["compare", "--literal-convention"])
    assert args.match_convention is False
    assert build_parser().parse_args(["compare"]).match_convention is None


@pytest.mark.parametrize("argv", [
    ["witness", "--bogus"],
    ["witness", "--paper-instance", "--custom"],
    ["compare", "--match-convention", "--literal-convention"],
    ["dynamics", "--dt", "fast"],
    [],
])
def test_main_reports_usage_errors_as_json(tmp_path, capsys, argv):
    rc = main(["--out", str(tmp_path)] + argv)
    assert rc == 2
    line = next(l for l in capsys.readouterr().out.splitlines() if l.startswith("[error] "))
    err = json.loads(line[len("[error] "):])
    assert err["error"] == "UsageError"
    assert err["message"].startswith("cpblab")
    assert list(tmp_path.iterdir()) == []
