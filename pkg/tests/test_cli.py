import csv
import json
import math
import subprocess
import sys
import textwrap

import pytest

from bose1d import cli, experiment
from bose1d.errors import SamplerAbort
from bose1d.model import e_tg

CONFIG = """
[system]
n_particles = 3
g = 2, inf

[vmc]
n_walkers = 20
n_equil_steps = 20
n_steps = 60
n_blocks = 10

[dmc]
tau = 0.01
target_population = 100
n_equil_blocks = 2
n_blocks = 5
steps_per_block = 20

[observables]
density = yes
pair = yes
density_bins = 20
pair_bins = 10
estimator = all
"""


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text(textwrap.dedent(CONFIG))
    return p


def outputs(directory):
    return {p.name: p.read_text() for p in sorted(directory.iterdir())}


def test_scan_is_reproducible(config, tmp_path, capsys):
    assert cli.main(["scan", "--config", str(config), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["scan", "--config", str(config), "--out", str(tmp_path / "b"),
                     "--workers", "2"]) == 0
    a, b = outputs(tmp_path / "a"), outputs(tmp_path / "b")
    assert a.keys() == b.keys()
    for name in a:
        if name.endswith("_record.json"):
            ra, rb = json.loads(a[name]), json.loads(b[name])
            ra.pop("timestamp"), rb.pop("timestamp")
            assert ra == rb
        else:
            assert a[name] == b[name], name
    printed = capsys.readouterr().out.split()
    assert len(printed) == 2 * len(a)


def test_energy_table(config, tmp_path):
    cli.main(["scan", "--config", str(config), "--out", str(tmp_path)])
    table = next(tmp_path.glob("*_energies.csv"))
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["g", "1/g", "E_vmc", "err", "E_dmc", "err", "E/E_TG"]
    assert [r[0] for r in rows[1:]] == ["2", "inf"]
    assert rows[2][1] == "0"
    for r in rows[1:]:
        assert float(r[6]) == pytest.approx(float(r[4]) / e_tg(3), rel=1e-12, abs=0)
    tg = rows[2]
    # the TG trial is exact: zero variance, energy N^2/2
    assert float(tg[2]) == pytest.approx(4.5, rel=1e-12) and float(tg[3]) == 0.0
    record = json.loads(next(tmp_path.glob("*_record.json")).read_text())
    assert record["seed"] == 0 and len(record["config_hash"]) == 12
    assert len(record["histogram_files"]["g=2"]) == 12
    assert len(list(tmp_path.glob("*_pair_extrapolated.csv"))) == 2


def test_subcommands_restrict_sampler(config, tmp_path):
    assert cli.main(["vmc", "--config", str(config), "--out", str(tmp_path), "--format",
                     "csv"]) == 0
    rows = list(csv.reader(next(tmp_path.glob("*_energies.csv")).open()))
    assert rows[1][4] == "" and rows[1][2] != ""
    assert not list(tmp_path.glob("*.json"))
    assert not list(tmp_path.glob("*_mixed.csv"))


def test_configuration_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[system]\nn_particles = 0\ng = 1\n")
    assert cli.main(["scan", "--config", str(bad)]) == 2
    assert "n_particles" in capsys.readouterr().err
    assert cli.main(["scan", "--config", str(tmp_path / "none.ini")]) == 2
    assert cli.main(["oracle", "busch", "--g", "-3"]) == 2
    with pytest.raises(SystemExit) as exc:
        cli.main(["scan", "--config", str(bad), "--seed", "-1"])
    assert exc.value.code == 2


def test_sampler_abort_exit_3(config, tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SamplerAbort("population collapsed", {"step": 7, "walkers": 0})
    monkeypatch.setattr(experiment, "run_dmc", boom)
    assert cli.main(["dmc", "--config", str(config), "--out", str(tmp_path)]) == 3
    diag = json.loads(next(tmp_path.glob("*_abort.json")).read_text())
    assert diag["diagnostics"]["step"] == 7


def test_oracle_subcommand(capsys):
    assert cli.main(["oracle", "busch", "--g", "inf"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == 2.0
    assert cli.main(["oracle", "quad", "--g", "0", "--n", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["value"] == pytest.approx(1.0, abs=1e-6)
    assert cli.main(["oracle", "fd", "--trap", "harmonic"]) == 0
    assert math.isclose(json.loads(capsys.readouterr().out)["value"], 0.5, abs_tol=1e-4)


def test_selftest_exit_0():
    r = subprocess.run([sys.executable, "-m", "bose1d", "selftest"], capture_output=True,
                       text=True, timeout=600)
    assert r.returncode == 0, r.stdout + r.stderr
    lines = r.stdout.strip().splitlines()
    assert len(lines) == 6 and all(line.startswith("PASS") for line in lines)
