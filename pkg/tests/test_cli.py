import numpy as np
import pytest

from superrad import cli
from superrad.cli import ConfigError, RunConfig, compare, main, preset, read_csv, run

BASIC = """
[params]
n_atoms = 40
coupling_ratio = 1.0
xi = 0.2

[sweep]
variable = w
min = 2
max = 30
points = 5

[run]
method = analytic
seed = 3
"""


def test_ini_round_trip():
    cfg = RunConfig.from_ini(BASIC)
    again = RunConfig.from_ini(cfg.to_ini())
    assert again == cfg


@pytest.mark.parametrize("text, msg", [
    (BASIC + "\n[extra]\nx = 1\n", "unknown section"),
    (BASIC.replace("xi = 0.2", "xi = 0.2\nbogus = 1"), "unknown key"),
    (BASIC.replace("method = analytic", "method = magic"), "unknown method"),
    (BASIC.replace("xi = 0.2", "xi = -1"), "xi"),
    (BASIC.replace("method = analytic", "method = langevin"), "n_traj"),
    ("[run]\nmethod = analytic\n", "params"),
])
def test_config_errors(text, msg):
    with pytest.raises(ConfigError, match=msg):
        RunConfig.from_ini(text)


def test_analytic_sweep_rows_and_metadata():
    res = run(RunConfig.from_ini(BASIC), created="2000-01-01T00:00:00")
    text = res.to_csv()
    meta, rows = read_csv(text)
    assert meta["schema"] == cli.CSV_SCHEMA
    assert meta["config"] == RunConfig.from_ini(BASIC)
    assert len(rows) == 5
    assert [float(r["value"]) for r in rows] == pytest.approx(np.linspace(2, 30, 5))
    r19 = [r for r in rows if abs(float(r["w"]) - 16.0) < 1e-9][0]
    assert float(r19["photons"]) > 0


def test_compare_identical_runs():
    a = run(RunConfig.from_ini(BASIC))
    rows = compare(a, a)
    assert all(float(r["photons_ratio"]) == pytest.approx(1.0) for r in rows
               if r.get("photons_ratio") not in ("", None) and float(r["photons_a"]) > 0)


def test_compare_grid_mismatch():
    a = run(RunConfig.from_ini(BASIC))
    b = run(RunConfig.from_ini(BASIC.replace("points = 5", "points = 4")))
    with pytest.raises(ConfigError):
        compare(a, b)


@pytest.mark.parametrize("name", ["fig1", "fig2", "fig3", "fig4"])
def test_presets_validate(name):
    cfg = preset(name)
    cfg.validate()
    assert RunConfig.from_ini(cfg.to_ini()) == cfg


def test_fig4_preset_fixed_coupling():
    cfg = preset("fig4")
    res = run(cfg)
    k = [float(r["kappa"]) for r in res.rows]
    xi = [float(r["xi"]) for r in res.rows]
    g = [float(r["coupling"]) for r in res.rows]
    assert np.allclose(g, g[0])
    assert np.all(np.diff(k) < 0) and np.all(np.diff(xi) > 0)


def test_main_solve_kappa(capsys):
    assert main(["solve-kappa", "40", "1", "0.2"]) == 0
    out = capsys.readouterr().out
    assert "kappa=25.0" in out


def test_main_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[params]\nn_atoms = 4\n")
    assert main(["run", "--config", str(bad)]) == cli.EXIT_CONFIG
    big = tmp_path / "big.ini"
    big.write_text("[params]\nn_atoms = 30\nkappa = 1\ncoupling = 1\n[run]\nmethod = bruteforce\n")
    assert main(["run", "--config", str(big)]) == cli.EXIT_CAPACITY


def test_main_run_writes_csv(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text(BASIC)
    out = tmp_path / "o.csv"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    meta, rows = read_csv(str(out))
    assert len(rows) == 5


def test_dump_config(capsys):
    assert main(["run", "--preset", "fig3", "--xi", "5", "--dump-config"]) == 0
    cfg = RunConfig.from_ini(capsys.readouterr().out)
    assert cfg.xi_values() == [5.0]
