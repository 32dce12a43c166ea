from __future__ import annotations

import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from chaoslab import __version__
from chaoslab.cli import main
from chaoslab.config import SCHEMA, ConfigError, config_from_sidecar, load_config, loads_config
from chaoslab.experiments import COLUMNS, run_experiment, rows_to_csv

REPO = Path(__file__).resolve().parents[1]


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def _rows(path):
    return list(csv.DictReader(io.StringIO(Path(path).read_text())))


# config parsing

def test_defaults_cover_every_key():
    cfg = loads_config("")
    assert set(cfg.to_dict()) == set(SCHEMA)
    assert cfg.experiment == "superconv"


def test_dotted_keys_and_types():
    cfg = loads_config('experiment = "goe"\ngoe.p = 3\nfamily.ratio = 1\nn_list = [4, 8]\n')
    assert cfg["goe.p"] == 3
    assert cfg["family.ratio"] == 1.0 and isinstance(cfg["family.ratio"], float)
    assert cfg["n_list"] == [4, 8]


@pytest.mark.parametrize(
    "text,needle",
    [
        ('seed = 1\nbogus = 2\n', "line 2: unknown key 'bogus'"),
        ('samples = "many"\n', "line 1: samples: expected int"),
        ('experiment = "nope"\n', "experiment"),
        ('n_list = [1.5]\n', "n_list"),
        ('[goe]\np = 2\n', "line 1: table headers"),
        ('seed = \n', "syntax error"),
        ('seed = -1\n', "seed"),
        ('goe.q = 1\n', "unknown key 'goe.q'"),
    ],
)
def test_schema_violations(text, needle):
    with pytest.raises(ConfigError) as exc:
        loads_config(text)
    assert needle in str(exc.value)


def test_output_relative_to_config(tmp_path):
    p = _write(tmp_path, 'output = "sub/x.csv"\n')
    assert load_config(p).output_path == tmp_path / "sub" / "x.csv"


# run

SMALL = {
    "superconv": 'experiment = "superconv"\nsamples = 4000\nn_list = [5, 20]\nq_list = [0, 1]\n',
    "negmom": 'experiment = "negmom"\nsamples = 4000\nn_list = [8, 16]\nq_list = [1, 2]\n',
    "fourthmoment": 'experiment = "fourthmoment"\nsamples = 4000\nn_list = [10, 20]\n',
    "breuer-major": 'experiment = "breuer-major"\nsamples = 4000\nn_list = [4, 8]\nq_list = [0]\n',
    "goe": 'experiment = "goe"\nsamples = 4000\nn_list = [6, 12]\nq_list = [0]\n',
    "wishart": 'experiment = "wishart"\nsamples = 4000\nn_list = [6, 12]\nq_list = [1]\n',
    "counterexample": 'experiment = "counterexample"\nsamples = 4000\nn_list = [5]\nq_list = [1]\n',
}


@pytest.mark.parametrize("name", sorted(SMALL))
def test_run_every_experiment(tmp_path, name, capsys):
    p = _write(tmp_path, SMALL[name] + 'output = "out.csv"\nseed = 3\n')
    assert main(["run", str(p)]) == 0
    out = tmp_path / "out.csv"
    header = out.read_text().splitlines()[0]
    assert header == ",".join(COLUMNS)
    rows = _rows(out)
    assert rows and all(r["experiment"] == name for r in rows)
    assert all(r["runtime_ms"] == "" for r in rows)
    side = json.loads((tmp_path / "out.csv.json").read_text())
    assert side["version"] == __version__
    assert side["config"]["experiment"] == name


def test_counterexample_emits_divergent_token(tmp_path):
    p = _write(tmp_path, SMALL["counterexample"] + 'output = "c.csv"\n')
    assert main(["run", str(p)]) == 0
    (row,) = _rows(tmp_path / "c.csv")
    assert row["negmom_estimate"] == "divergent"
    assert float(row["negmom_top_decile"]) > 0.9


def test_goe_first_power_delta_zero(tmp_path):
    p = _write(tmp_path, 'experiment = "goe"\ngoe.p = 1\nsamples = 4000\nn_list = [5, 10]\nq_list = [0]\noutput = "g.csv"\n')
    assert main(["run", str(p)]) == 0
    assert all(abs(float(r["delta"])) < 1e-12 for r in _rows(tmp_path / "g.csv"))


def test_run_deterministic_across_workers(tmp_path):
    text = SMALL["superconv"].replace("samples = 4000", "samples = 300000")
    p = _write(tmp_path, text + 'output = "a.csv"\n')
    assert main(["run", str(p)]) == 0
    assert main(["run", str(p), "--workers", "3", "--output", "b.csv"]) == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_timing_flag(tmp_path):
    p = _write(tmp_path, SMALL["negmom"] + 'timing = true\noutput = "t.csv"\n')
    assert main(["run", str(p)]) == 0
    assert all(r["runtime_ms"].isdigit() for r in _rows(tmp_path / "t.csv"))


def test_sidecar_round_trip(tmp_path):
    p = _write(tmp_path, SMALL["wishart"] + 'output = "w.csv"\n')
    assert main(["run", str(p)]) == 0
    again = config_from_sidecar(tmp_path / "w.csv.json")
    assert again.to_dict() == load_config(p).to_dict()
    rows, _ = run_experiment(again)
    assert rows_to_csv(rows) == (tmp_path / "w.csv").read_text()


def test_run_config_error_exit_code(tmp_path, capsys):
    p = _write(tmp_path, "seed = 1\nbogus = 1\n")
    assert main(["run", str(p)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.toml")]) == 2


def test_run_experiment_error_exit_code(tmp_path, capsys):
    p = _write(tmp_path, 'experiment = "negmom"\nq_list = [0]\nsamples = 1000\nn_list = [8]\noutput = "x.csv"\n')
    assert main(["run", str(p)]) == 3
    assert "order 0" in capsys.readouterr().err


# selftest / oracle

def test_selftest(capsys):
    assert main(["selftest", "--cases", "10"]) == 0
    out = capsys.readouterr().out
    assert "8/8 suites passed" in out


def test_oracle_list_and_values(capsys):
    assert main(["oracle", "list"]) == 0
    names = capsys.readouterr().out
    for name in ("family-negmom", "wick", "cauchy-binet", "wishart"):
        assert name in names
    assert main(["oracle", "wick"]) == 0
    assert "3" in capsys.readouterr().out
    assert main(["oracle", "nonexistent"]) == 2


def test_shipped_configs_parse():
    for p in sorted((REPO / "configs").glob("*.toml")):
        cfg = load_config(p)
        assert cfg.experiment == p.stem


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "chaoslab.cli", "oracle", "list"], capture_output=True, text=True)
    assert r.returncode == 0 and "wick" in r.stdout
