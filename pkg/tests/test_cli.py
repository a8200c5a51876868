import json
import os

from latticegrow import harness
from latticegrow.cli import main


def test_usage_errors(outdir):
    assert main([]) == 2
    assert main(["sim1d", "--bogus"]) == 2
    assert main(["sim1d", "--K", "1"]) == 2
    assert main(["accept", "--suite", "A99"]) == 2
    assert main(["sim1d", "--backend", "fast", "--steps-out", "x.jsonl"]) == 2


def test_sim1d_direct_outputs(tmp_path):
    out, steps = tmp_path / "t.csv", tmp_path / "s.jsonl"
    assert main(["sim1d", "--K", "3", "--periods", "50", "--backend", "python",
                 "--out", str(out), "--steps-out", str(steps)]) == 0
    assert len(harness.read_trace(out)) == 51
    assert len(steps.read_text().splitlines()) == 50 * 5


def test_output_root_override(outdir):
    assert main(["ages", "--n", "30", "--reps", "100"]) == 0
    (d,) = list(outdir.iterdir())
    assert d.name.startswith("ages-")
    assert {"config.json", "record.json", "scaled.csv", "summary.json"} <= set(os.listdir(d))


def test_flag_failure_exit_code(outdir):
    assert main(["rwtest", "--N", "1000", "--trials", "200000", "--seed", "1"]) == 1
    (d,) = list(outdir.iterdir())
    assert json.loads((d / "overshoot.json").read_text())["estimate"] > 0


def test_accept_exact(capsys, tmp_path):
    assert main(["accept", "--suite", "exact", "--out", str(tmp_path)]) == 0
    assert capsys.readouterr().out.startswith("A1 PASS")
    assert (tmp_path / "A1.json").exists()
