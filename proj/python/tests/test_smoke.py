import json
import math
from pathlib import Path

import numpy as np
import pytest

import cqm

ROOT = Path(__file__).resolve().parents[2]
SCENARIOS = ROOT / "scenarios"

FLAT = {
    "chart": {"dim": 1, "extent": [-10, 10], "points": 511, "time_step": 0.001},
    "tasks": [{"type": "validate"}],
}


def harmonic():
    return cqm.Scenario.load(str(SCENARIOS / "harmonic.json"))


def test_load_and_parse():
    s = harmonic()
    assert s.dim == 1
    assert "H0" in s.functions and "P1" in s.functions and "x1" in s.functions
    assert len(s.tasks) > 0
    text = json.dumps(FLAT)
    p = cqm.Scenario.parse(text)
    assert p.config_hash == cqm.fnv1a(text.encode())
    assert p.grid_points().shape == (511, 1)


def test_config_errors():
    bad = dict(FLAT, tasks=[{"type": "spectrum", "modes": 2, "function": "nope"}])
    with pytest.raises(cqm.ConfigError, match="nope"):
        cqm.Scenario.parse(json.dumps(bad))
    with pytest.raises(cqm.ConfigError):
        cqm.Scenario.parse("{ not json")
    assert issubclass(cqm.ConfigError, cqm.Error)


def test_validate():
    rows = harmonic().validate()
    assert rows.pop("min_metric_eigenvalue") == pytest.approx(1.0)
    assert len(rows) > 0
    for value in rows.values():
        assert value < 1e-8


def test_trajectory_half_period():
    rows = harmonic().trajectory([1.0], [0.0], math.pi, 2000)
    t, x, v = rows[-1]
    assert t == pytest.approx(math.pi)
    assert x == pytest.approx(-1.0, abs=1e-6)
    assert v == pytest.approx(0.0, abs=1e-6)


def test_brackets_and_classification():
    s = cqm.Scenario.parse(json.dumps(FLAT))
    assert s.bracket("x1", "P1", 0.0, [0.2], [0.5]) == pytest.approx(1.0, abs=1e-9)
    assert s.bracket("P1", "x1", 0.0, [0.2], [0.5]) == pytest.approx(-1.0, abs=1e-9)
    assert s.classify("H0")["quantisable"]
    assert s.classify("x1")["spacetime"]


def test_spectrum_and_evolution():
    s = harmonic()
    levels, residuals, states = s.spectrum(3)
    assert np.allclose(levels, [0.5, 1.5, 2.5], rtol=1e-3)
    assert max(residuals) < 1e-8
    psi0 = states[0]
    assert s.norm(psi0, 0.0) == pytest.approx(1.0, abs=1e-10)
    assert s.expectation("H0", psi0).real == pytest.approx(levels[0], rel=1e-8)
    psi = s.evolve(psi0, 1.0, 500)
    assert s.norm(psi, 1.0) == pytest.approx(1.0, abs=1e-10)
    assert abs(np.vdot(psi0, psi)) / np.vdot(psi0, psi0).real == pytest.approx(1.0, abs=1e-6)


def test_operator_hermiticity():
    s = harmonic()
    x = s.grid_points()[:, 0]
    a = np.exp(-((x - 0.5) ** 2) + 0.3j * x)
    b = np.exp(-((x + 0.4) ** 2) / 2 - 0.7j * x)
    assert s.hermiticity_residual("H0", a, b) < 1e-10
    assert s.apply_operator("x1", a).shape == a.shape


def test_run(tmp_path):
    report = cqm.run(SCENARIOS / "flat_free.json", tmp_path / "flat")
    assert report["exit_code"] == 0
    assert all(t["passed"] for t in report["tasks"])
    assert (tmp_path / "flat" / "manifest.json").exists()
    first = (tmp_path / "flat" / report["tasks"][0]["csv"]).read_text().splitlines()[0]
    assert first == "# cqm-csv v1"

    broken = cqm.run(SCENARIOS / "broken_curvature.json", tmp_path / "broken", validate_only=True)
    assert broken["exit_code"] == 1
