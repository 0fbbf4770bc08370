import json

import numpy as np
import pytest

from aeropipe.cli import main
from aeropipe.io.trace import MicrophoneTrace, read_mic_trace, write_mic_trace
from aeropipe.synthetic import write_phonation_case


def _trace(tmp_path):
    t = np.arange(256) * 1e-5
    write_mic_trace(MicrophoneTrace("mic", t, np.sin(2 * np.pi * 3125 * t)), tmp_path / "mic.txt")
    return tmp_path / "mic.txt"


def test_no_command_and_unknown(capsys):
    assert main([]) == 64
    assert main(["frobnicate"]) == 64
    assert "usage" in capsys.readouterr().err
    assert main(["--help"]) == 0


def test_missing_file(capsys, tmp_path):
    missing = tmp_path / "nope.xml"
    for cmd in ("pipeline", "solve", "spectrum", "info"):
        assert main([cmd, str(missing)]) == 2
        assert str(missing) in capsys.readouterr().err


def test_validation_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "p.xml"
    bad.write_text("<cfsdat><pipeline><bogus/></pipeline></cfsdat>")
    assert main(["pipeline", str(bad)]) == 1
    assert "bogus" in capsys.readouterr().err


def test_spectrum_output_deterministic(tmp_path, capsys):
    path = _trace(tmp_path)
    assert main(["spectrum", str(path), "--segment", "128"]) == 0
    first = capsys.readouterr().out
    assert main(["spectrum", str(path), "--segment", "128"]) == 0
    assert capsys.readouterr().out == first
    rows = [l.split("\t") for l in first.splitlines() if not l.startswith("#")]
    assert len(rows) == 65
    freq = np.array([float(r[0]) for r in rows])
    asd = np.array([float(r[1]) for r in rows])
    assert freq[np.argmax(asd)] == pytest.approx(3125.0)
    assert "# freq_Hz\tASD" in first


def test_spectrum_to_file(tmp_path):
    path = _trace(tmp_path)
    out = tmp_path / "spec.txt"
    assert main(["spectrum", str(path), "--rho0", "2.0", "-o", str(out)]) == 0
    assert "rho0 = 2.0" in out.read_text()


def test_spectrum_too_short(tmp_path):
    write_mic_trace(MicrophoneTrace("mic", [0, 1e-5], [0, 1]), tmp_path / "m.txt")
    assert main(["spectrum", str(tmp_path / "m.txt")]) == 1


def test_full_chain_small(tmp_path, capsys, monkeypatch):
    case = write_phonation_case(tmp_path, num_steps=40)
    monkeypatch.chdir(tmp_path)
    assert main(["pipeline", "interpolatePressure.xml"]) == 0
    assert main(["pipeline", "calc_dpdt.xml"]) == 0
    assert (tmp_path / "results_hdf5" / "source_dpdt.cfs").exists()
    assert main(["solve", "propagation.xml"]) == 0
    trace = read_mic_trace(tmp_path / "history" / "propagation-acouPotentialD1-mic.txt")
    assert len(trace) == case.num_steps
    assert (tmp_path / "results_hdf5" / "propagation.cfs").exists()
    capsys.readouterr()
    assert main(["info", "results_hdf5/propagation.cfs"]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["results"][0]["name"] == "acouPotentialD1"
    assert info["time_grid"]["num_steps"] == 40
    assert main(["spectrum", "history/propagation-acouPotentialD1-mic.txt", "--segment", "32"]) == 0
