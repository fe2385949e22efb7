import json
import shutil
import subprocess

import pytest

from penal_lab import cli
from penal_lab.io import read_csv

EX41 = {"density": {"kind": "formula-id", "params": {"id": "ex4.1"}}}


def _cfg(tmp_path, name, body):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps({"schema_version": 1, **body}))
    return p


def test_catalogue_lists_ids(capsys):
    assert cli.main(["catalogue"]) == 0
    out = capsys.readouterr().out
    for fid in ("ex3.1", "ex3.2", "ex3.4", "ex3.5", "ex4.1", "ex4.2", "ex5.1", "ex5.2", "ex8.1"):
        assert fid in out


def test_phi_solve_ok(tmp_path, capsys):
    p = _cfg(tmp_path, "phi", {"pipeline": "phi-solve", "potential": EX41})
    assert cli.main(["run", str(p)]) == 0
    out = capsys.readouterr().out
    assert "PASS oracle-match" in out and "PASS normalization" in out
    tab = read_csv(tmp_path / "phi_out" / "phi.csv")
    assert set(tab) == {"x", "phi", "dphi"}
    summary = read_csv(tmp_path / "phi_out" / "summary.csv")
    assert len(summary["check"]) == 3


def test_outputs_dir_and_table_filter(tmp_path):
    p = _cfg(tmp_path, "phi", {"pipeline": "phi-solve", "potential": EX41,
                               "outputs": {"dir": "custom", "tables": []}})
    assert cli.run(p) == 0
    assert sorted(x.name for x in (tmp_path / "custom").iterdir()) == ["summary.csv"]


@pytest.mark.parametrize("body,raw", [
    ({"pipeline": "phi-solve", "potential": {"atoms": [[0.0, -1.0]]}}, None),
    ({"pipeline": "phi-solve", "potential": EX41, "solver": {"hmx": 1}}, None),
    ({"pipeline": "phi-solve", "potential": EX41, "extra": 1}, None),
    ({"pipeline": "nope"}, None),
    (None, "{not json"),
])
def test_config_errors_exit_2(tmp_path, body, raw):
    p = tmp_path / "bad.json"
    p.write_text(raw if raw is not None else json.dumps({"schema_version": 1, **body}))
    assert cli.run(p) == 2


def test_wrong_schema_version(tmp_path):
    p = tmp_path / "v2.json"
    p.write_text(json.dumps({"schema_version": 2, "pipeline": "phi-solve", "potential": EX41}))
    assert cli.run(p) == 2


def test_failed_check_exit_1(tmp_path, capsys):
    p = _cfg(tmp_path, "tight", {"pipeline": "phi-solve", "potential": EX41,
                                 "solver": {"oracle_tol": 0.0, "hmax": 0.05}})
    assert cli.run(p) == 1
    assert "FAIL oracle-match" in capsys.readouterr().out


def test_unclassifiable_potential_exit_1(tmp_path):
    pot = {"density": {"kind": "formula-id", "params": {"id": "half_line"}},
           "tails": {"left": {"moment_finite": False, "limit": 1.0},
                     "right": {"moment_finite": True, "limit": 0.0}}}
    p = _cfg(tmp_path, "uc", {"pipeline": "phi-solve", "potential": pot})
    assert cli.run(p) == 1


def test_z_mc_bytes_reproducible(tmp_path, monkeypatch):
    body = {"pipeline": "z-mc", "potential": EX41, "mc": {"n_paths": 5000, "seed": 4, "dt": 1e-2}}
    outs = []
    for i, nt in enumerate(("1", "3")):
        monkeypatch.setenv("PENAL_LAB_THREADS", nt)
        p = _cfg(tmp_path, f"zmc{i}", body)
        assert cli.run(p) == 0
        outs.append((tmp_path / f"zmc{i}_out" / "z_mc.csv").read_bytes())
    assert outs[0] == outs[1]


def test_gamma0_pipeline(tmp_path, capsys):
    pot = {"density": {"kind": "formula-id", "params": {"id": "ex8.1"}}}
    assert cli.run(_cfg(tmp_path, "g0", {"pipeline": "gamma0", "potential": pot})) == 0


def test_ld_pipeline(tmp_path):
    body = {"pipeline": "ld", "model": {"alpha": 1.0, "lams": [1.0], "etas": [0.1, 0.05, 0.01, 0.0]}}
    assert cli.run(_cfg(tmp_path, "ld", body)) == 0
    tab = read_csv(tmp_path / "ld_out" / "ld_table.csv")
    assert list(tab["eta"]) == [0.1, 0.05, 0.01, 0.0]


def test_console_script():
    exe = shutil.which("penal-lab")
    if exe is None:
        pytest.skip("console script not installed")
    r = subprocess.run([exe, "catalogue"], capture_output=True, text=True, timeout=120)
    assert r.returncode == 0 and "ex8.1" in r.stdout
