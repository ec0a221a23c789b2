import csv
import hashlib
import json
from pathlib import Path

import pytest

from atomlink.cli import main

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "collisional_two_messengers.json"


def run(tmp_path, *argv):
    return main(["--output-dir", str(tmp_path), *argv])


def manifest(tmp_path):
    m = json.loads((tmp_path / "manifest.json").read_text())
    for art in m["artifacts"]:
        assert hashlib.sha256((tmp_path / art["path"]).read_bytes()).hexdigest() == art["sha256"]
    return m


def test_trap(tmp_path, capsys):
    assert run(tmp_path, "trap") == 0
    assert "mK" in capsys.readouterr().out
    d = json.loads((tmp_path / "trap.json").read_text())
    assert d["depth_mK"] == pytest.approx(10, rel=0.05)
    assert manifest(tmp_path)["subcommand"] == "trap"


def test_trap_needs_polarizability_off_1064(tmp_path, capsys):
    assert run(tmp_path, "trap", "--wavelength-nm", "800") == 1
    assert run(tmp_path, "trap", "--wavelength-nm", "800", "--polarizability-au", "300") == 0


def test_transport(tmp_path, capsys):
    assert run(tmp_path, "transport", "--a-limit-m-s2", "4e5") == 0
    out = capsys.readouterr().out
    assert "50 us" in out
    rows = list(csv.reader(open(tmp_path / "transport.csv")))
    assert rows[0] == ["t", "x", "v", "a"]
    aod = list(csv.reader(open(tmp_path / "aod.csv")))
    assert aod[0] == ["t", "f"]
    assert float(aod[-1][1]) == pytest.approx(200e6, rel=1e-9)
    assert [a["path"] for a in manifest(tmp_path)["artifacts"]] == ["transport.csv", "aod.csv"]


def test_transport_zero_distance(tmp_path, capsys):
    assert run(tmp_path, "transport", "--distance-um", "0") == 0
    assert "no motion" in capsys.readouterr().out


def test_charge_exchange(tmp_path, capsys):
    assert run(tmp_path, "charge-exchange", "Li", "Ba+") == 0
    rows = json.loads((tmp_path / "charge_exchange.json").read_text())
    assert rows == [{"atom": "Li6", "ion": "Ba137+", "classification": "Endothermic",
                     "energy_gap": pytest.approx(1452.2, abs=0.1)}]
    assert run(tmp_path, "charge-exchange", "--export-species", str(tmp_path / "sp.json")) == 0
    table = json.loads((tmp_path / "sp.json").read_text())
    assert any(r["name"] == "Ra226+" for r in table)
    assert run(tmp_path, "charge-exchange", "Li", "Ba+", "--species-json", str(tmp_path / "sp.json")) == 0


def test_charge_exchange_errors(tmp_path, capsys):
    assert run(tmp_path, "charge-exchange", "Ba+", "Li") == 1
    assert run(tmp_path, "charge-exchange", "Li") == 1
    assert run(tmp_path, "charge-exchange", "Li", "Zz+") == 1


def test_layout(tmp_path, capsys):
    assert run(tmp_path, "layout") == 0
    assert "total qubits       480" in capsys.readouterr().out
    assert len(json.loads((tmp_path / "layout.json").read_text())["zones"]) == 16
    assert run(tmp_path, "layout", "--fov-mm", "0.1") == 1


def test_verify_protocol(tmp_path, capsys):
    assert run(tmp_path, "verify-protocol", "--gate-fidelity", "0.9999", "--correct") == 0
    d = json.loads((tmp_path / "protocol.json").read_text())
    assert d["target"] == "PhiPlus"
    assert d["mean_fidelity"] == pytest.approx(0.99984, abs=1e-5)
    assert run(tmp_path, "verify-protocol", "--mode", "pure", "--amplitudes", "--seed", "3") == 0
    assert len(json.loads((tmp_path / "protocol.json").read_text())["amplitudes"]) == 4
    assert run(tmp_path, "verify-protocol", "--depolarizing-p", "2") == 1


def test_rate(tmp_path, capsys):
    assert run(tmp_path, "rate") == 0
    rows = list(csv.DictReader(open(tmp_path / "rate.csv")))
    rates = {r["gate"]: float(r["rate"]) for r in rows}
    assert rates["collisional"] == pytest.approx(1538, rel=1e-3)
    assert rates["rydberg"] == pytest.approx(19608, rel=1e-3)


def test_simulate(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--config", str(CONFIG)) == 0
    m = manifest(tmp_path)
    assert m["seed"] == 1 and m["config"] == str(CONFIG)
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["delivered_pairs"] > 0
    first = (tmp_path / "events.csv").read_bytes()
    assert run(tmp_path, "simulate", "--config", str(CONFIG)) == 0
    assert (tmp_path / "events.csv").read_bytes() == first
    assert run(tmp_path, "simulate", "--config", str(CONFIG), "--seed", "2") == 0
    assert (tmp_path / "events.csv").read_bytes() != first


def test_simulate_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"messengers": [\n  {"id": 0},\n]}')
    assert run(tmp_path, "simulate", "--config", str(bad)) == 1
    assert "bad.json:3" in capsys.readouterr().err
    bad.write_text('{"messengers": [{"id": 0}], "gate": {"kind": "Laser"}}')
    assert run(tmp_path, "simulate", "--config", str(bad)) == 1
    assert "gate.kind" in capsys.readouterr().err
    assert run(tmp_path, "simulate", "--config", str(tmp_path / "missing.json")) == 1


def test_usage_errors(tmp_path, capsys):
    assert run(tmp_path, "frobnicate") == 1
    assert run(tmp_path, "trap", "--power-mw", "-5") == 1
    assert main([]) == 1


def test_output_dir_from_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("ATOMLINK_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["rate", "--gate", "rydberg"]) == 0
    assert (tmp_path / "env" / "rate.csv").exists()


def test_internal_error_exit_code(tmp_path, monkeypatch, capsys):
    import atomlink.cli as cli

    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli.sim, "analytic_rate", boom)
    assert run(tmp_path, "rate") == 2
