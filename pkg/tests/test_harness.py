import json
import math

import numpy as np
import pytest

from otocsim import harness
from otocsim.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    ResultTable,
    cell_seed,
    dump_config_text,
    format_number,
    identity_residuals,
    load_config,
    oracle_table,
    paper_default_config,
    parse_config_text,
    parse_csv,
    povm_worst,
    run_cell,
    run_sweep,
    table_to_csv,
    table_to_json,
    validate,
    write_outputs,
)
from otocsim.protocols import modified_eigenvalue


def small_config(**kw):
    base = dict(n=2, deltas=[0.5], t_max=1.4, n_points=3, shots=200, reps=3)
    base.update(kw)
    return ExperimentConfig(**base)


def test_default_config():
    cfg = paper_default_config()
    grid = cfg.time_grid()
    assert len(grid) == 15
    assert grid[0] == 0.0
    assert grid[-1] == pytest.approx(2.1)
    assert grid[7] == pytest.approx(1.05)
    assert cfg.field_strength(0.9) == pytest.approx(0.05)
    assert len(cfg.deltas) * len(grid) == 75
    assert cfg.evolution_label().startswith("trotter")


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(protocols=["XYZ"])
    with pytest.raises(ValueError):
        ExperimentConfig(n_points=1)
    with pytest.raises(ValueError):
        ExperimentConfig(gibbs_mode="approx")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"n": 2, "bogus": 1})
    cfg = small_config()
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_config_text_round_trip():
    text = """
    # comment line
    n = 3
    deltas = 0.1, 0.5   # inline comment
    protocols = rtm, ism
    evolution_mode = exact-gate
    """
    cfg = parse_config_text(text)
    assert cfg.n == 3
    assert cfg.deltas == [0.1, 0.5]
    assert cfg.protocols == ["RTM", "ISM"]
    assert cfg.trotter is None
    assert parse_config_text(dump_config_text(cfg)) == cfg
    with pytest.raises(ValueError):
        parse_config_text("nonsense_key = 1")


def test_load_config_from_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("shots = 77\nbeta = 0.5\n")
    cfg = load_config(path)
    assert (cfg.shots, cfg.beta) == (77, 0.5)
    assert cfg.n == 4


def test_cell_seed_is_stable_and_distinct():
    a = cell_seed(2025, "RTM", 0, 0)
    assert a == cell_seed(2025, "RTM", 0, 0)
    seeds = {cell_seed(2025, p, d, t) for p in ("RTM", "WMM", "ISM") for d in range(5) for t in range(15)}
    assert len(seeds) == 225


def test_sweep_rows_and_oracle_join():
    cfg = small_config(protocols=["RTM", "ISM"])
    table = run_sweep(cfg)
    assert len(table.rows) == 2 * 3
    for row in table.rows:
        assert tuple(row) == CSV_COLUMNS or set(row) == set(CSV_COLUMNS)
        if row["tau"] == 0.0:
            assert row["mean_C"] == pytest.approx(0.0, abs=1e-12)
            assert row["oracle_C"] == pytest.approx(0.0, abs=1e-12)
    ism = [r for r in table.rows if r["protocol"] == "ISM"]
    assert all("estimator=finite-theta" in r["extra"] for r in ism)
    rec = run_cell(cfg, "RTM", 0, 2)
    assert rec.tau == pytest.approx(1.4)


def test_csv_header_and_round_trip():
    table = run_sweep(small_config(protocols=["WMM"]))
    text = table_to_csv(table)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    parsed = parse_csv(text)
    for orig, back in zip(table.rows, parsed):
        for c in ("mean_C", "std_C", "oracle_C", "tau"):
            assert back[c] == pytest.approx(orig[c], rel=1e-11, abs=1e-12)
    with pytest.raises(ValueError):
        parse_csv("a,b\n1,2\n")


def test_format_number():
    assert format_number(-0.0) == "0"
    assert format_number(1 / 3) == "0.333333333333"
    assert format_number(7) == "7"
    assert format_number("x") == "x"


def test_sweep_is_deterministic_and_worker_independent():
    cfg = small_config()
    a = table_to_csv(run_sweep(cfg))
    b = table_to_csv(run_sweep(cfg))
    assert a == b
    c = table_to_csv(run_sweep(cfg, workers=2))
    assert a == c
    d = table_to_csv(run_sweep(small_config(master_seed=7)))
    assert d != a


def test_failing_cell_becomes_error_row(monkeypatch):
    real = harness.run_cell

    def flaky(cfg, protocol, di, ti, input_state=None):
        if ti == 1:
            raise RuntimeError("boom")
        return real(cfg, protocol, di, ti, input_state)

    monkeypatch.setattr(harness, "run_cell", flaky)
    table = run_sweep(small_config(protocols=["RTM"]))
    assert len(table.rows) == 3
    bad = table.rows[1]
    assert math.isnan(bad["mean_C"])
    assert "error=RuntimeError:boom" in bad["extra"]
    assert not math.isnan(table.rows[2]["mean_C"])
    doc = json.loads(table_to_json(table))
    assert doc["rows"][1]["mean_C"] is None


def test_invalid_trotter_settings_rejected():
    with pytest.raises(ValueError):
        small_config(trotter_steps=0.0)
    assert small_config(trotter_steps=0.0, evolution_mode="exact-gate").trotter is None


def test_json_output_and_files(tmp_path):
    table = run_sweep(small_config(protocols=["RTM"]))
    doc = json.loads(table_to_json(table))
    assert set(doc) == {"config", "rows", "versions", "wallclock"}
    assert doc["config"]["shots"] == 200
    assert "numpy" in doc["versions"]
    written = write_outputs(table, tmp_path / "out" / "sweep.csv")
    assert sorted(p.name for p in written) == ["sweep.csv", "sweep.json"]
    with pytest.raises(ValueError):
        write_outputs(ResultTable([], {}, "0", {}), tmp_path / "empty")
    with pytest.raises(ValueError):
        write_outputs(table, tmp_path / "x", ("xml",))


def test_oracle_table_matches_oracle():
    cfg = small_config()
    rows = oracle_table(cfg)
    assert len(rows) == 3
    assert rows[0]["C_exact"] == pytest.approx(0.0, abs=1e-12)
    assert all(r["C_exact"] >= -1e-12 for r in rows)


def test_vqa_gibbs_mode_runs_and_records_fidelity():
    cfg = small_config(protocols=["RTM"], n_points=2, gibbs_mode="vqa",
                       vqa_layers_a=1, vqa_layers_s=2, vqa_max_evals=1500)
    table = run_sweep(cfg)
    assert all("vqa_fidelity=" in r["extra"] for r in table.rows)
    assert all(r["gibbs_mode"] == "vqa" for r in table.rows)


def test_validate_passes_and_negative_control_fails():
    report = validate()
    assert report.passed, "\n".join(report.lines())
    assert json.loads(report.to_json())["passed"] is True
    wrong = lambda a, phi: (-1) ** a / np.sin(phi / 2)  # noqa: E731
    bad = validate(alpha=wrong)
    assert not bad.passed
    failed = {c.name for c in bad.checks if not c.passed}
    assert "povm_decomposition" in failed
    assert all(name.startswith("povm_") for name in failed)


def test_identity_and_povm_helpers():
    r_f, r_frob = identity_residuals(6)
    assert r_f < 1e-10 and r_frob < 1e-10
    assert max(povm_worst(alpha=modified_eigenvalue).values()) < 1e-12
