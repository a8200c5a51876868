import json
from pathlib import Path

import numpy as np
import pytest

from latticegrow import harness, lattice1d
from latticegrow.lattice1d import COLUMNS, Trace


def test_config_round_trip_and_hash():
    c = harness.ExperimentConfig("ages", {"n": 50, "reps": 10}, seed=3)
    d = harness.ExperimentConfig.from_json(c.to_json())
    assert d == c and d.hash() == c.hash() and len(c.hash()) == 16
    assert harness.ExperimentConfig("ages", {"reps": 10, "n": 50}, seed=3).hash() == c.hash()
    assert harness.ExperimentConfig("ages", {"n": 50, "reps": 10}, seed=4).hash() != c.hash()


def test_config_rejects_unknown():
    with pytest.raises(harness.ConfigError):
        harness.ExperimentConfig.from_json('{"experiment":"ages","colour":1}')
    with pytest.raises(harness.ConfigError):
        harness.ExperimentConfig("nope")
    with pytest.raises(harness.ConfigError):
        harness.ExperimentConfig("ages", schema=99)


def test_config_save_load(tmp_path):
    c = harness.ExperimentConfig("dla", {"steps": 10}, seed=1, snapshot_every=5)
    c.save(tmp_path / "c.json")
    assert harness.ExperimentConfig.load(tmp_path / "c.json") == c


def test_trace_round_trip(tmp_path):
    tr = lattice1d.run_model(3, 1000, seed=5)
    harness.write_trace(tmp_path / "t.csv", tr)
    back = harness.read_trace(tmp_path / "t.csv")
    assert back.K == 3 and np.array_equal(back.data, tr.data) and len(back) == 1001


def test_trace_empty(tmp_path):
    tr = Trace(2, np.zeros((0, len(COLUMNS)), dtype=np.int64))
    harness.write_trace(tmp_path / "t.csv", tr)
    back = harness.read_trace(tmp_path / "t.csv")
    assert back.data.shape == (0, len(COLUMNS))


def test_trace_bad_header(tmp_path):
    tr = lattice1d.run_model(2, 5, seed=1)
    p = tmp_path / "t.csv"
    harness.write_trace(p, tr)
    lines = p.read_text().splitlines()
    lines[1] = lines[1].replace("G2,", "GG,", 1)
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(harness.FormatError, match=r"column 4: expected 'G2', found 'GG'"):
        harness.read_trace(p)
    p.write_text("period,size\n")
    with pytest.raises(harness.FormatError):
        harness.read_trace(p)


def _files(rec):
    return {Path(a).name: Path(a).read_bytes() for a in rec.artifacts}


@pytest.mark.parametrize("exp,params", [
    ("sim1d", {"K": 2, "periods": 300, "backend": "python", "logSteps": True}),
    ("ages", {"n": 40, "reps": 500}),
    ("dla", {"steps": 60}),
    ("couple", {"policy": "alternate", "n": 5000}),
])
def test_run_is_byte_deterministic(outdir, exp, params):
    c = harness.ExperimentConfig(exp, params, seed=7, snapshot_every=20)
    a = _files(harness.run_experiment(c))
    b = _files(harness.run_experiment(c))
    assert a and a == b
    assert (outdir / f"{exp}-{c.hash()}" / "config.json").read_text() == c.to_json()


def test_ages_summary(outdir):
    rec = harness.run_experiment(harness.ExperimentConfig("ages", {"n": 100, "reps": 2000}))
    assert rec.error is None
    s = json.loads(Path(rec.artifacts[1]).read_text())
    assert s["ksExact"] < 0.05


def test_errors_are_recorded(outdir):
    rec = harness.run_experiment(harness.ExperimentConfig("couple", {"policy": "bogus"}))
    assert rec.error and "bogus" in rec.error
    d = outdir / f"couple-{harness.ExperimentConfig('couple', {'policy': 'bogus'}).hash()}"
    assert json.loads((d / "record.json").read_text())["error"] == rec.error


def test_phi_experiment(outdir):
    rec = harness.run_experiment(harness.ExperimentConfig("phi", {"n": 500, "samples": 2}, seed=1))
    assert rec.error is None and rec.flags == {"surgery": True}
    lines = Path(rec.artifacts[0]).read_text().splitlines()
    assert len(lines) == 2 and all(json.loads(l)["holeGain"] >= 0 for l in lines)


def test_patches_infeasible_is_recorded(outdir):
    rec = harness.run_experiment(harness.ExperimentConfig("patches", {"cluster": [[0, 0]]}))
    assert "ConstructionInfeasible" in rec.error


def test_criterion_line():
    assert harness.Criterion("A3", True, "ok").line() == "A3 PASS: ok"
    assert harness.Criterion("A6", False, "x", soft=True).line().startswith("A6 SOFT-FAIL")
