import json

import pytest

from otocsim.cli import build_parser, effective_config, main
from otocsim.harness import CSV_COLUMNS
from otocsim.oracle import ORACLE_COLUMNS


def write_small_config(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text("n = 2\ndeltas = 0.5\nt_max = 1.4\nn_points = 3\nreps = 2\nshots = 100\n")
    return str(path)


def test_flags_override_config_file(tmp_path):
    cfg_path = write_small_config(tmp_path)
    args = build_parser().parse_args(["sweep", "--config", cfg_path, "--shots", "50", "--seed", "9",
                                      "--delta", "0.3", "--exact-gates"])
    cfg = effective_config(args)
    assert (cfg.n, cfg.shots, cfg.reps, cfg.master_seed) == (2, 50, 2, 9)
    assert cfg.deltas == [0.3]
    assert cfg.trotter is None


def test_oracle_command(tmp_path, capsys):
    assert main(["oracle", "--config", write_small_config(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == ",".join(ORACLE_COLUMNS)
    assert len(lines) == 4


def test_run_command_requires_protocol(tmp_path):
    with pytest.raises(SystemExit):
        main(["run", "--config", write_small_config(tmp_path)])


def test_run_and_sweep_commands(tmp_path, capsys):
    cfg_path = write_small_config(tmp_path)
    assert main(["run", "--config", cfg_path, "--protocol", "ism"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert out[0] == ",".join(CSV_COLUMNS)
    assert len(out) == 4 and all(line.startswith("ISM,") for line in out[1:])
    target = tmp_path / "res"
    assert main(["sweep", "--config", cfg_path, "--out", str(target), "--format", "json"]) == 0
    doc = json.loads((tmp_path / "res.json").read_text())
    assert len(doc["rows"]) == 9
    assert doc["config"]["shots"] == 100


def test_sweep_output_is_byte_identical(tmp_path):
    cfg_path = write_small_config(tmp_path)
    main(["sweep", "--config", cfg_path, "--out", str(tmp_path / "a.csv")])
    main(["sweep", "--config", cfg_path, "--out", str(tmp_path / "b.csv")])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_gibbs_command(tmp_path, capsys):
    cfg_path = tmp_path / "g.cfg"
    cfg_path.write_text("n = 2\ndeltas = 0.5\nvqa_layers_a = 1\nvqa_layers_s = 2\nvqa_max_evals = 1000\n")
    assert main(["gibbs", "--config", str(cfg_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report[0]["delta"] == 0.5
    assert 0.0 <= report[0]["fidelity"] <= 1.0


def test_validate_command(capsys):
    assert main(["validate"]) == 0
    assert all(line.startswith("PASS") for line in capsys.readouterr().out.strip().splitlines())
    assert main(["validate", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["passed"] is True


def test_bad_config_exits_with_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("protocols = nope\n")
    assert main(["sweep", "--config", str(bad)]) == 2
    assert "otocsim:" in capsys.readouterr().err
    assert main(["sweep", "--config", str(tmp_path / "missing.cfg")]) == 2
