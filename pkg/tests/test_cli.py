import json
import subprocess
import sys
from pathlib import Path

import pytest

from chiralnet import cli
from chiralnet.config import KEYS, ConfigError, load, parse_text
from chiralnet.dynamics import CSV_COLUMNS

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run_cli(tmp_path, *args):
    out = tmp_path / "out"
    code = cli.main([*args, "--out", str(out), "--workers", "1"])
    files = sorted(out.glob("*")) if out.exists() else []
    return code, files


def summary_of(files):
    [js] = [f for f in files if f.suffix == ".json"]
    return json.loads(js.read_text())


def test_help_lists_every_key_with_default_and_unit(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for key, spec in KEYS.items():
        line = next(l for l in text.splitlines() if l.strip().startswith(key + " "))
        assert spec.default in line and f"[{spec.unit}]" in line


def test_top_level_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit):
        cli.main(["--help"])
    text = capsys.readouterr().out
    for name in cli.COMMANDS:
        assert name in text


@pytest.mark.parametrize("text,fragment", [
    ("g1 = 0.1\ng3 = 2\n", ":2: unknown key 'g3'"),
    ("g1 = 0.1\ng1 = 0.2\n", ":2: duplicate key 'g1'"),
    ("# comment\njust words\n", ":2: expected 'key = value'"),
    ("g1 =\n", ":1: empty value"),
])
def test_config_diagnostics(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("(", r"\(")):
        parse_text(text, "run.cfg")


def test_config_comments_and_overrides(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text("g1 = 0.3  # inline\n\nsamples = 5\n")
    conf = load(path, ["g1=0.4", "seed=3"])
    assert conf.params.g1 == 0.4
    assert conf["samples"] == 5 and conf["seed"] == 3


@pytest.mark.parametrize("override", ["g1=abc", "variant=none", "seed=-1", "g1_bounds=0", "t_max=nan", "nokey=1", "g1"])
def test_bad_values(override):
    with pytest.raises(ConfigError):
        load(None, [override])


def test_list_and_pair_values():
    conf = load(None, ["free=g1, gamma_R2", "g1_bounds=0.1,0.9"])
    assert conf["free"] == ("g1", "gamma_R2")
    assert conf["g1_bounds"] == (0.1, 0.9)


def test_unknown_key_exits_with_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("g1 = 0.1\nbogus = 1\n")
    code, files = run_cli(tmp_path, "simulate", "--config", str(bad))
    assert code == 2 and files == []
    assert "bad.cfg:2: unknown key 'bogus'" in capsys.readouterr().err


def test_invalid_parameter_exits_with_usage_error(tmp_path):
    assert run_cli(tmp_path, "simulate", "--set", "g2=-1")[0] == 2


def test_precondition_failure_exits_with_usage_error(tmp_path):
    code, _ = run_cli(tmp_path, "simulate", "--set", "solver=analytic", "--set", "gamma_L1=0.5")
    assert code == 2


def test_simulate_symmetric_optimum(tmp_path):
    code, files = run_cli(tmp_path, "simulate", "--config", str(CONFIGS / "chiral_symmetric.cfg"))
    assert code == 0
    summary = summary_of(files)
    assert summary["C_max"] == pytest.approx(0.920, abs=0.005)
    assert {"objective", "best_params", "best_value", "t_peak", "seed", "evaluations"} <= set(summary)
    assert set(summary["F_peaks"]) == {"F1", "F2", "F3"}
    [csv] = [f for f in files if f.suffix == ".csv"]
    assert csv.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_simulate_zero_coupling(tmp_path):
    code, files = run_cli(tmp_path, "simulate", "--config", str(CONFIGS / "zero_coupling.cfg"))
    assert code == 0
    assert summary_of(files)["C_max"] == 0


@pytest.mark.parametrize("solver", ["master", "schrodinger", "analytic"])
def test_solvers_agree(tmp_path, solver):
    code, files = run_cli(tmp_path, "simulate", "--config", str(CONFIGS / "chiral_symmetric.cfg"), "--set", f"solver={solver}")
    assert code == 0
    assert summary_of(files)["C_max"] == pytest.approx(0.92001907542, abs=1e-7)


def test_repeated_runs_are_byte_identical(tmp_path):
    args = ["sweep-detuning", "--config", str(CONFIGS / "chiral_symmetric.cfg"), "--set", "samples=4",
            "--set", "delta_points=2", "--seed", "5"]
    code_a, files_a = run_cli(tmp_path / "a", *args)
    code_b, files_b = run_cli(tmp_path / "b", *args)
    assert code_a == code_b == 0
    assert [f.read_bytes() for f in files_a] == [f.read_bytes() for f in files_b]
    assert summary_of(files_a)["seed"] == 5


def test_outputs_do_not_overwrite(tmp_path):
    args = ["simulate", "--config", str(CONFIGS / "zero_coupling.cfg")]
    run_cli(tmp_path, *args)
    _, files = run_cli(tmp_path, *args)
    assert len(files) == 4


def test_sweep_detuning_zero_width(tmp_path):
    code, files = run_cli(tmp_path, "sweep-detuning", "--config", str(CONFIGS / "chiral_symmetric.cfg"),
                          "--set", "delta_max=0", "--set", "delta_points=1", "--set", "samples=5")
    assert code == 0
    [csv] = [f for f in files if f.suffix == ".csv"]
    assert csv.read_text().splitlines()[1].endswith(",0")


def test_sweep_distance_is_flat_for_chiral(tmp_path):
    code, files = run_cli(tmp_path, "sweep-distance", "--config", str(CONFIGS / "chiral_symmetric.cfg"))
    assert code == 0
    assert summary_of(files)["spread"] <= 1e-8


def test_sweep_decay_columns(tmp_path):
    code, files = run_cli(tmp_path, "sweep-decay", "--config", str(CONFIGS / "chiral_symmetric.cfg"),
                          "--set", "Gamma_points=2", "--set", "reoptimize=false")
    assert code == 0
    [csv] = [f for f in files if f.suffix == ".csv"]
    assert csv.read_text().splitlines()[0] == "Gamma,C_0"


def test_optimize_writes_trace(tmp_path):
    code, files = run_cli(tmp_path, "optimize", "--config", str(CONFIGS / "chiral_symmetric.cfg"),
                          "--set", "grid_points=5", "--set", "n_starts=1")
    assert code == 0
    summary = summary_of(files)
    assert summary["best_value"] >= 0.92
    assert set(summary["best_params"]) == {"g1", "g2"}


@pytest.mark.parametrize("n,state", [(1, "psi_plus"), (2, "psi_minus")])
def test_bell_phase_command(tmp_path, n, state):
    code, files = run_cli(tmp_path, "bell-phase", "--config", str(CONFIGS / "nonchiral.cfg"),
                          "--set", f"bell_n={n}")
    assert code == 0
    assert summary_of(files)["bell_state"] == state


def test_bell_phase_refuses_chiral_config(tmp_path):
    assert run_cli(tmp_path, "bell-phase", "--config", str(CONFIGS / "chiral_symmetric.cfg"))[0] == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "chiralnet", "simulate", "--config", str(CONFIGS / "zero_coupling.cfg"),
         "--out", str(tmp_path), "--workers", "1"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert len(proc.stdout.split()) == 2


def test_missing_config_file(tmp_path):
    assert run_cli(tmp_path, "simulate", "--config", str(tmp_path / "nope.cfg"))[0] == 2
