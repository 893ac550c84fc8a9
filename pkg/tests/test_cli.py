import csv
import io
import json
import subprocess
import sys

import pytest

from rabi2q.cli import EXIT_CONFIG, EXIT_OK, EXIT_UNCONVERGED, main
from rabi2q.sweep import RECORD_FIELDS


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_predict_stdout(capsys):
    assert main(["predict", "--g-min", "0.5", "--g-max", "2", "--g-steps", "2"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert {r["g"] for r in rows} == {"0.5", "2"}
    plus2 = [r for r in rows if r["g"] == "2" and r["sector"] == "plus"]
    assert {r["branch"] for r in plus2} == {"upper", "lower"}
    assert float(plus2[0]["rescaled_energy"]) == pytest.approx(-2.125)


def test_predict_json_file(tmp_path):
    out = tmp_path / "p.json"
    assert main(["predict", "--format", "json", "--out", str(out), "--g-steps", "3"]) == EXIT_OK
    assert len(json.loads(out.read_text())) > 0


def test_sweep_writes_records_and_summary(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--gamma-over-omega", "10", "--g-min", "0.8", "--g-max", "1.2",
                 "--g-steps", "21", "--out", str(out)])
    assert code == EXIT_OK
    rows = _rows(out.read_text())
    assert list(rows[0]) == list(RECORD_FIELDS)
    assert len(rows) == 42
    assert "g_c estimates" in capsys.readouterr().err


def test_sweep_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("gamma_over_omega = 10\ng_min = 0.2\ng_max = 0.4\ng_steps = 5\ncutoff = 20\n")
    assert main(["sweep", "--config", str(cfg), "--g-steps", "2", "--no-detect"]) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    assert len(rows) == 4 and {r["cutoff_used"] for r in rows} == {"20"}


def test_invalid_config_exit_code(capsys):
    assert main(["sweep", "--g-min", "2", "--g-max", "1"]) == EXIT_CONFIG
    assert "invalid config" in capsys.readouterr().err
    assert main(["predict", "--gamma-over-omega", "100,10"]) == EXIT_CONFIG


def test_unconverged_exit_code(tmp_path, capsys):
    code = main(["converge", "--gamma-over-omega", "200", "--g", "1.5", "--n-start", "8", "--n-cap", "16"])
    assert code == EXIT_UNCONVERGED
    captured = capsys.readouterr()
    assert "converged=False" in captured.err
    assert len(_rows(captured.out)) == 2


def test_converge_ladder(capsys):
    assert main(["converge", "--gamma-over-omega", "200", "--g", "1.5"]) == EXIT_OK
    captured = capsys.readouterr()
    rows = _rows(captured.out)
    assert [int(r["n_max"]) for r in rows] == [32, 64, 128, 256, 512, 1024]
    assert "cutoff_used=512" in captured.err


def test_spectrum_blocks(capsys):
    args = ["spectrum", "--eps1", "0.3", "--gamma", "1.2", "--lam1", "0.7", "--lam2", "0.2", "--n-max", "30", "-k", "3"]
    assert main(args) == EXIT_OK
    rows = _rows(capsys.readouterr().out)
    energies = {b: sorted(float(r["energy"]) for r in rows if r["block"] == b) for b in ("plus", "minus", "full")}
    merged = sorted(energies["plus"] + energies["minus"])[:3]
    assert energies["full"] == pytest.approx(merged, abs=1e-10)


def test_spectrum_random_seed_is_reproducible(capsys):
    main(["spectrum", "--random", "--seed", "4", "--n-max", "15"])
    first = capsys.readouterr().out
    main(["spectrum", "--random", "--seed", "4", "--n-max", "15"])
    assert capsys.readouterr().out == first
    main(["spectrum", "--random", "--seed", "5", "--n-max", "15"])
    assert capsys.readouterr().out != first


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "rabi2q", "predict", "--g-steps", "2"], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("gamma_over_omega,sector,g")


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
