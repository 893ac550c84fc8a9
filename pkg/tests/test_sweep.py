import dataclasses
import json
import math

import numpy as np
import pytest

from rabi2q import sweep
from rabi2q.errors import ConfigError, TooFewPointsError
from rabi2q.model import ModelParams
from rabi2q.sweep import (
    RECORD_FIELDS,
    SweepConfig,
    analytic_records,
    detect_transition,
    emit,
    load_records,
    make_config,
    predict,
    predict_grid,
    read_config_file,
    render,
    run_sweep,
    solve_point,
)


def _cfg(**kw):
    return make_config(**kw)


@pytest.fixture(scope="module")
def small_sweep():
    cfg = _cfg(gamma_over_omega=(10.0, 20.0), g_min=0.3, g_max=1.5, g_steps=4)
    return cfg, run_sweep(cfg)


def test_config_validation():
    for bad in (
        dict(g_min=1.0, g_max=0.5),
        dict(g_steps=1),
        dict(gamma_over_omega=(10.0, 5.0)),
        dict(gamma_over_omega=(0.0,)),
        dict(scenario="biased"),
        dict(cutoff=0),
        dict(format="xml"),
    ):
        with pytest.raises(ConfigError):
            _cfg(**bad)
    with pytest.raises(ConfigError):
        make_config(nonsense=1)


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# sweep\nscenario = unbiased\ngamma_over_omega = 10,100\ng_steps = 5  # few\ncutoff=40\n")
    values = read_config_file(path)
    cfg = make_config(values, g_steps="7")
    assert cfg.scenario == "unbiased"
    assert cfg.gamma_over_omega == (10.0, 100.0)
    assert cfg.g_steps == 7 and cfg.cutoff == 40


def test_config_file_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("omega 1\n")
    with pytest.raises(ConfigError):
        read_config_file(path)
    path.write_text("colour = red\n")
    with pytest.raises(ConfigError):
        read_config_file(path)
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.cfg")
    with pytest.raises(ConfigError):
        make_config({"g_steps": "many"})


def test_params_back_solve_g():
    cfg = _cfg(scenario="unbiased")
    p = cfg.params(100.0, 0.4)
    assert p.gamma == 100.0 and p.eps1 == p.eps2 == 0.0
    assert math.sqrt(2) * (p.lam1 - p.lam2) / math.sqrt(p.omega * p.gamma) == pytest.approx(0.4)


def test_row_count_minimal():
    cfg = _cfg(gamma_over_omega=(10.0,), g_min=0.3, g_max=0.6, g_steps=2, cutoff=30)
    assert len(run_sweep(cfg)) == 2 * 2


def test_row_count_and_order(small_sweep):
    cfg, recs = small_sweep
    assert len(recs) == len(cfg.gamma_over_omega) * cfg.g_steps * 2
    keys = [(r.gamma_over_omega, r.sector != "plus", r.g) for r in recs]
    assert keys == sorted(keys)


def test_record_invariants(small_sweep):
    _, recs = small_sweep
    for r in recs:
        assert r.E0 <= r.E1
        assert 0.0 <= r.C <= 1.0 and r.N >= 0.0
        assert isinstance(r.converged, bool) and r.converged
        assert r.E0_rescaled == pytest.approx(r.E0 / r.gamma_over_omega)


def test_minus_sector_is_decoupled(small_sweep):
    _, recs = small_sweep
    for r in recs:
        if r.sector == "minus":
            gamma = r.gamma_over_omega
            assert r.E0 == pytest.approx(-math.hypot(0.01 * gamma, gamma), abs=1e-9 * gamma)
            assert r.N == pytest.approx(0.0, abs=1e-20)
            assert r.fidelity_analytic == pytest.approx(1.0, abs=1e-12)


def test_workers_do_not_change_output(small_sweep):
    cfg, recs = small_sweep
    assert render(run_sweep(cfg, workers=2), "csv") == render(recs, "csv")


def test_sweep_is_deterministic():
    cfg = _cfg(gamma_over_omega=(10.0,), g_min=0.5, g_max=1.5, g_steps=3)
    assert render(run_sweep(cfg), "json") == render(run_sweep(cfg), "json")


def test_normal_phase_rescaled_energy_example():
    cfg = _cfg(gamma_over_omega=(1000.0,), g_min=0.2, g_max=0.8, g_steps=4)
    for r in run_sweep(cfg):
        assert r.E0_rescaled == pytest.approx(-1.0, rel=0.02)


def test_superradiant_point_example():
    cfg = _cfg(gamma_over_omega=(200.0,))
    plus = solve_point(cfg, 200.0, math.sqrt(2.0))[0]
    assert plus.sector == "plus" and plus.converged
    assert plus.C == pytest.approx(0.5, rel=0.05)
    # the numerics give (g^2 - g^-2)/2 = 0.75 for the rescaled photon number
    assert plus.N_rescaled == pytest.approx(0.75, rel=0.01)
    assert plus.fidelity_analytic > 0.99


def test_fixed_cutoff_is_used():
    cfg = _cfg(gamma_over_omega=(10.0,), cutoff=24, g_min=0.2, g_max=0.4, g_steps=2)
    assert {r.cutoff_used for r in run_sweep(cfg)} == {24}


def test_unconverged_rows_are_recorded(monkeypatch):
    monkeypatch.setattr(sweep, "AUTO_N_CAP", 32)
    cfg = _cfg(gamma_over_omega=(200.0,), g_min=1.4, g_max=1.6, g_steps=2)
    recs = run_sweep(cfg)
    assert len(recs) == 4
    assert not all(r.converged for r in recs)


def test_emit_csv(tmp_path):
    cfg = _cfg(gamma_over_omega=(10.0,), cutoff=20, g_min=0.3, g_max=0.6, g_steps=2)
    recs = run_sweep(cfg)[:1]
    path = tmp_path / "one.csv"
    text = emit(recs, "csv", path)
    lines = path.read_bytes().split(b"\r\n")
    assert lines[0].decode() == ",".join(RECORD_FIELDS)
    assert len([ln for ln in lines if ln]) == 2
    assert emit(recs, "csv", None) == text
    assert ",true" in text.splitlines()[1]


def test_emit_rejects_empty_csv():
    with pytest.raises(ValueError):
        render([], "csv")
    assert render([], "json").strip() == "[]"


def test_emit_io_error(tmp_path):
    recs = analytic_records(ModelParams(1.0, gamma=1.0, lam1=0.5), [0.5])
    with pytest.raises(OSError, match="missing"):
        emit(recs, "csv", tmp_path / "missing" / "out.csv")


def test_json_roundtrip(tmp_path, small_sweep):
    _, recs = small_sweep
    path = tmp_path / "recs.json"
    emit(recs, "json", path)
    back = load_records(path)
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        for f in RECORD_FIELDS:
            va, vb = getattr(a, f), getattr(b, f)
            if isinstance(va, float) and math.isnan(va):
                assert math.isnan(vb)
            else:
                assert va == vb, f
    assert json.loads(path.read_text())[0]["sector"] == "plus"


def test_csv_roundtrip_to_twelve_digits(tmp_path, small_sweep):
    _, recs = small_sweep
    emit(recs, "csv", tmp_path / "r.csv")
    for a, b in zip(recs, load_records(tmp_path / "r.csv")):
        assert b.E0 == pytest.approx(a.E0, rel=1e-11)
        assert b.cutoff_used == a.cutoff_used and b.converged == a.converged


def test_predict_examples():
    cfg = _cfg(gamma_over_omega=(10.0,))
    rows = predict_grid(cfg, [0.5, 2.0])
    normal = [r for r in rows if r["g"] == 0.5 and r["sector"] == "plus"]
    assert len(normal) == 1
    n = normal[0]
    assert (n["rescaled_energy"], n["n_rescaled"], n["concurrence"], n["magnetization"]) == (-1.0, 0.0, 1.0, 0.0)
    sup = [r for r in rows if r["g"] == 2.0 and r["sector"] == "plus"]
    assert {r["branch"] for r in sup} == {"upper", "lower"}
    for r in sup:
        assert r["rescaled_energy"] == pytest.approx(-2.125)
        assert r["concurrence"] == pytest.approx(0.25)
        assert abs(r["magnetization"]) == pytest.approx(math.sqrt(0.75))
    assert predict_grid(cfg, []) == []


def test_predict_critical_point_row():
    rows = predict_grid(_cfg(), [1.0])
    plus = [r for r in rows if r["sector"] == "plus"][0]
    assert plus["phase"] == "critical" and plus["error"]
    assert math.isnan(plus["energy"])


def test_predict_grid_invariance():
    coarse = _cfg(g_min=0.2, g_max=1.8, g_steps=5)
    fine = dataclasses.replace(coarse, g_steps=17)
    index = lambda rows: {(r["sector"], r["g"], r["branch"]): r for r in rows}
    a, b = index(predict(coarse)), index(predict(fine))
    assert set(a) <= set(b)
    for key, row in a.items():
        assert render([row], "json") == render([b[key]], "json")


def test_predict_unbiased_kink_positions():
    rows = predict_grid(_cfg(scenario="unbiased"), [0.6])
    plus = [r for r in rows if r["sector"] == "plus"]
    minus = [r for r in rows if r["sector"] == "minus"]
    assert plus[0]["phase"] == "superradiant" and minus[0]["phase"] == "normal"


def test_detect_analytic_counter_biased():
    p = ModelParams.counter_biased(1.0, 100.0, 0.5)
    grid = np.linspace(0.5, 1.5, 200)
    report = detect_transition(analytic_records(p, grid))
    step = grid[1] - grid[0]
    assert report.estimates["plus"] == [pytest.approx(1.0, abs=step)]
    assert report.estimates["minus"] == []
    assert report.uncertainty == pytest.approx(step)
    # the curves part quadratically, so separation trails the kink slightly
    assert 1.0 <= report.diagnostics["separation_g"] <= 1.05


def test_detect_analytic_unbiased():
    p = ModelParams.unbiased(1.0, 100.0, 0.5, lambda_ratio=3.0)
    grid = np.linspace(0.2, 1.4, 121)
    report = detect_transition(analytic_records(p, grid))
    step = grid[1] - grid[0]
    assert report.estimates["plus"] == [pytest.approx(0.5, abs=step)]
    assert report.estimates["minus"] == [pytest.approx(1.0, abs=step)]


def test_detect_flat_curve():
    rows = [{"g": g, "gamma_over_omega": 1.0, "sector": "plus", "E0": -1.0, "E0_rescaled": -1.0, "residual": 1e-12}
            for g in np.linspace(0, 1, 30)]
    assert detect_transition(rows).estimates == {"plus": []}


def test_detect_preconditions():
    p = ModelParams.counter_biased(1.0, 10.0, 0.5)
    with pytest.raises(TooFewPointsError):
        detect_transition(analytic_records(p, np.linspace(0.5, 1.5, 10)))
    with pytest.raises(ValueError):
        detect_transition(analytic_records(p, np.geomspace(0.5, 1.5, 30)))
    mixed = analytic_records(p, np.linspace(0.5, 1.5, 30)) + analytic_records(
        ModelParams.counter_biased(1.0, 20.0, 0.5), np.linspace(0.5, 1.5, 30)
    )
    with pytest.raises(ValueError):
        detect_transition(mixed)


def test_numerical_kink_moves_towards_one():
    estimates = []
    for x in (10.0, 100.0):
        cfg = _cfg(gamma_over_omega=(x,), g_min=0.8, g_max=1.2, g_steps=21)
        estimates.append(detect_transition(run_sweep(cfg)).estimates["plus"][0])
    assert abs(estimates[1] - 1.0) < abs(estimates[0] - 1.0)
