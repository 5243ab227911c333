"""
Test script for the command line front end.

Demonstrates:
1. Every command on the bundled fixtures
2. Exit statuses: 0 pass, 1 fail, 3 input error
3. Deterministic output under --seed and ORBIRES_SEED
4. Config file overrides
"""

import importlib
import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from orbires import config as config_module
from orbires.config import SEED_VARIABLE
from orbires.main import EXIT_INPUT, build_config, main

FIXTURES = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")


def _fixture(name):
    return os.path.join(FIXTURES, name)


@pytest.fixture(autouse=True)
def _isolated(tmp_path, monkeypatch):
    """No stray config.yaml or seed variable from the caller."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv(SEED_VARIABLE, raising=False)


def _run(capsys, *argv):
    capsys.readouterr()
    code = main(list(argv) + ["--no-color"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out else None)


def test_validate(capsys):
    print("=" * 70)
    print("TEST 1: validate")
    print("=" * 70)
    code, data = _run(capsys, "validate", _fixture("cp112.json"))
    assert code == 0
    assert data == {"regular": True, "empty": False, "realizable_supports": 7, "offending": []}

    code, data = _run(capsys, "validate", _fixture("nonregular.json"))
    assert code == 1
    assert data["offending"] == [{"support": [1], "group": {"rank": 1, "torsion": [], "label": "T^1"}}]


def test_stratify(capsys):
    code, data = _run(capsys, "stratify", _fixture("line_2_3.json"), "--row", "1")
    assert code == 0
    assert [s["order"] for s in data] == [3, 2]
    assert data[0]["fixed_support"] == [2]

    code, _ = _run(capsys, "stratify", _fixture("line_2_3.json"))
    assert code == EXIT_INPUT
    code, _ = _run(capsys, "stratify", _fixture("line_2_3.json"), "--row", "2")
    assert code == EXIT_INPUT


def test_singular(capsys):
    code, data = _run(capsys, "singular", _fixture("cp112.json"))
    assert code == 0
    assert data == [{"support": [3], "group": {"rank": 0, "torsion": [2], "label": "Z2"}}]
    code, data = _run(capsys, "singular", _fixture("free_circle.json"))
    assert code == 0 and data == []


def test_resolve(capsys):
    print("=" * 70)
    print("TEST 2: resolve CP(1,1,2)")
    print("=" * 70)
    code, data = _run(capsys, "resolve", _fixture("cp112.json"))
    assert code == 0
    assert data["final"]["weights"] == [[1, 1, 2, 0], [0, 0, -1, -1]]
    assert data["final"]["level"] == ["1", "-3/8"]
    assert data["final"]["labels"] == ["z1", "z2", "z3", "e4"]
    assert data["summaries"][-1] == []

    code, data = _run(capsys, "resolve", _fixture("cp112.json"), "--epsilon", "1/8")
    assert code == 0
    assert data["steps"][0]["delta"] == "9/16"


def test_resolve_is_deterministic(capsys):
    main(["resolve", _fixture("line_2_3.json"), "--no-color"])
    first = capsys.readouterr().out
    main(["resolve", _fixture("line_2_3.json"), "--no-color"])
    assert capsys.readouterr().out == first


def test_resolve_failures(capsys):
    code, data = _run(capsys, "resolve", _fixture("nonregular.json"))
    assert code == 1 and data is None
    code, _ = _run(capsys, "resolve", _fixture("cp112.json"), "--epsilon", "1/2", "--delta", "2")
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["resolve", "does-not-exist.json"],
    ["explode", "model.json"],
    ["resolve", "cp112.json", "--epsilon", "0.25"],
    ["resolve", "cp112.json", "--epsilon", "1/2", "--delta", "1/4"],
    ["verify", "cp112.json", "--suite", "bogus"],
    ["resolve", "cp112.json", "--support-cap", "2"],
    ["cut", "cut_line.json", "--side", "above"],
])
def test_input_errors(capsys, argv):
    argv = [_fixture(a) if a.endswith(".json") and a != "does-not-exist.json" else a for a in argv]
    code, data = _run(capsys, *argv)
    assert code == EXIT_INPUT
    assert data is None


def test_output_file_and_verify_certificate(capsys, tmp_path):
    print("=" * 70)
    print("TEST 3: a saved certificate verifies")
    print("=" * 70)
    cert = tmp_path / "cert.json"
    code, data = _run(capsys, "resolve", _fixture("cp112.json"), "-o", str(cert))
    assert code == 0 and data is None
    assert json.loads(cert.read_text(encoding="utf-8"))["steps"][0]["m"] == 2

    code, report = _run(capsys, "verify", str(cert), "--suite", "stage", "--suite", "kernel",
                        "--samples", "3", "--seed", "5")
    assert code == 0
    assert report["status"] == "pass"
    names = [c["check"] for c in report["checks"]]
    assert names == sorted(names)
    assert "tau_hat_free/step0" in names


def test_seed_variable(capsys, monkeypatch):
    args = ["verify", _fixture("cp112.json"), "--suite", "kernel", "--samples", "3"]
    _, explicit = _run(capsys, *args, "--seed", "5")
    monkeypatch.setenv(SEED_VARIABLE, "5")
    _, from_env = _run(capsys, *args)
    assert from_env == explicit
    assert {c["seed"] for c in explicit["checks"]} == {5}

    monkeypatch.setenv(SEED_VARIABLE, "five")
    code, _ = _run(capsys, *args)
    assert code == EXIT_INPUT


def test_config_file(capsys, tmp_path):
    config = tmp_path / "settings.yaml"
    config.write_text("seed: 7\nsamples:\n  kernel: 2\n", encoding="utf-8")
    code, report = _run(capsys, "verify", _fixture("cp112.json"), "--suite", "kernel",
                        "--config", str(config))
    assert code == 0
    assert {c["seed"] for c in report["checks"]} == {7}
    assert {c["samples"] for c in report["checks"]} == {2}

    settings = build_config(["verify", _fixture("cp112.json"), "--config", str(config)])
    assert settings.seed == 7
    assert settings.samples["morse"] == 100

    code, _ = _run(capsys, "verify", _fixture("cp112.json"), "--config", str(tmp_path / "absent.yaml"))
    assert code == EXIT_INPUT


def test_config_is_read_on_demand(monkeypatch):
    monkeypatch.setenv(SEED_VARIABLE, "five")
    reloaded = importlib.reload(config_module)
    assert not hasattr(reloaded, "CONFIG")
    monkeypatch.delenv(SEED_VARIABLE)
    settings = build_config(["verify", _fixture("cp112.json")])
    assert settings.perturbation_degree == 4
    assert settings.tolerance.constraint == 1e-12


def test_cut(capsys):
    print("=" * 70)
    print("TEST 4: cut, resolve and verify the embedding")
    print("=" * 70)
    code, data = _run(capsys, "cut", _fixture("cut_line.json"), "--at", "2", "--side", "above")
    assert code == 0
    assert data["cut_model"]["weights"] == [[1, 2, -1]]
    assert data["hypersurface_singularities"][0]["support"] == [2]

    code, data = _run(capsys, "cut", _fixture("cut_line.json"), "--at", "2", "--side", "above",
                      "--resolve", "--verify", "--samples", "4")
    assert code == 0
    assert data["ham_weights"] == [1, 2, 0, 0]
    assert data["locality_violations"] == []
    assert data["verification"]["status"] == "pass"
    assert data["verification"]["checks"][0]["samples"] == 4


def test_empty_cut(capsys):
    code, data = _run(capsys, "cut", _fixture("cut_line.json"), "--at", "-1", "--side", "below")
    assert code == 1
    assert data is None


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
