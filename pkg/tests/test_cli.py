import json

import numpy as np
import pytest

from ppgbench import load_report, read_video
from ppgbench.cli import main
from ppgbench.metrics import AccelTrace, write_accel_csv


def test_synth_to_stdout(capsys):
    assert main(["synth", "--hr", "90", "--duration", "2", "--fs", "50"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t_s,value"
    assert len(lines) == 1 + 100


def test_encode_decode_estimate(tmp_path, capsys):
    wf = tmp_path / "wf.csv"
    vid = tmp_path / "clip.ppgv"
    rec = tmp_path / "rec.csv"
    assert main(["synth", "--hr", "84", "--duration", "12", "--out", str(wf)]) == 0
    assert main(["encode", "--waveform", str(wf), "--width", "64", "--height", "48",
                 "--profile", "strong", "--out", str(vid)]) == 0
    assert len(read_video(vid)) == 360
    assert main(["decode", str(vid), "--out", str(rec)]) == 0
    capsys.readouterr()
    assert main(["estimate", str(rec), "--format", "json"]) == 0
    est = json.loads(capsys.readouterr().out)
    assert abs(est["bpm"] - 84.0) < 1.0


def test_suite_build_run_report(tmp_path, capsys):
    suite = tmp_path / "suite.json"
    report = tmp_path / "report.json"
    assert main(["suite", "build", "--duration", "10", "--out", str(suite)]) == 0
    d = json.loads(suite.read_text())
    assert len(d["cases"]) == 20
    # Shrink to two low-resolution cases to keep the test fast.
    d["cases"] = d["cases"][:2]
    for c in d["cases"]:
        c["spec"] = {"width": 64, "height": 48, "fps": 30.0}
    suite.write_text(json.dumps(d))
    assert main(["suite", "run", "--suite", str(suite), "--repetitions", "5",
                 "--out", str(report)]) == 0
    assert load_report(report).aggregates["n_ok"] == 10
    capsys.readouterr()
    assert main(["report", str(report), "--format", "csv"]) == 0
    assert capsys.readouterr().out.startswith("id,repetition")


def test_accel(tmp_path, capsys):
    t = np.arange(2000) / 100.0
    path = write_accel_csv(AccelTrace(t, 1 + np.sin(2 * np.pi * 1.5 * t)), tmp_path / "a.csv")
    assert main(["accel", str(path), "--bpm", "90"]) == 0
    assert json.loads(capsys.readouterr().out)["matches"] is True
    assert main(["accel", str(path), "--bpm", "120"]) == 1


def test_errors_exit_2(tmp_path, capsys):
    assert main(["estimate", str(tmp_path / "missing.csv")]) == 2
    bad = tmp_path / "bad.ppgv"
    bad.write_bytes(b"nope")
    assert main(["decode", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["bogus"])
