import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from fpp_cutlab.cli import config_hash, main

BOX = {"d": 2, "solid": [{"box": [[0, 1], [0, 1]]}], "gamma1": [{"face": "x0-min"}], "gamma2": [{"face": "x0-max"}]}
CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path: Path, cfg: dict, name: str = "cfg.json") -> str:
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def read_rows(out: Path) -> list[dict]:
    with open(out / "results.csv") as fh:
        return list(csv.DictReader(fh))


def det1_flow_constant(n_list=(2, 4, 8)):
    return {
        "experiment": "flow-constant",
        "seed": 1,
        "law": {"kind": "deterministic", "c": 1},
        "cylinder": {"A": {"axis_face": 0}, "h": 1.0, "v": [1, 0]},
        "n_list": list(n_list),
        "reps": 2,
    }


def test_flow_constant_rows_are_exact(tmp_path):
    out = tmp_path / "out"
    assert main(["flow-constant", "--config", write(tmp_path, det1_flow_constant()), "--out", str(out)]) == 0
    rows = read_rows(out)
    for r, n in zip(rows, (2, 4, 8)):
        assert r["tau_min"] == r["tau_max"] == str(n + 1)
        assert r["experiment"] == "flow-constant"
    manifest = json.loads((out / "manifest.json").read_text())
    assert all(r["manifest"] == manifest["manifest"] for r in rows)
    assert manifest["manifest"] == config_hash(manifest["config"])


def test_missing_seed_exit_2(tmp_path, capsys):
    cfg = det1_flow_constant()
    del cfg["seed"]
    assert main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert "missing seed" in capsys.readouterr().err


def test_seed_flag_overrides(tmp_path):
    cfg = det1_flow_constant()
    del cfg["seed"]
    assert main(["run", "--config", write(tmp_path, cfg), "--seed", "9", "--out", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "manifest.json").read_text())["seed"] == 9


def test_corruption_hook_exit_3(tmp_path):
    cfg = {"experiment": "domain-flow", "seed": 1, "law": {"kind": "deterministic", "c": 1}, "domain": BOX, "n_list": [3], "reps": 1, "debug": {"corrupt_capacity": True}}
    assert main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 3


@pytest.mark.parametrize(
    "cfg",
    [
        {"experiment": "nonsense", "seed": 1},
        {"experiment": "domain-flow", "seed": 1, "law": {"kind": "deterministic", "c": 1}, "domain": BOX, "n_list": []},
        {"experiment": "domain-flow", "seed": 1, "law": {"kind": "deterministic", "c": 1}, "domain": BOX, "n_list": [2], "reps": 0},
        {"experiment": "domain-flow", "seed": 1, "law": {"kind": "two_point", "a": 1, "b": 3, "p": 0.5, "M": 2}, "domain": BOX, "n_list": [2]},
    ],
)
def test_config_errors_exit_2(tmp_path, cfg):
    assert main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 2


def test_bad_json_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert main(["run", "--config", str(p)]) == 2


def test_resource_limit_exit_4(tmp_path):
    cfg = {"experiment": "domain-flow", "seed": 1, "law": {"kind": "deterministic", "c": 1}, "domain": BOX, "n_list": [5000], "reps": 1}
    assert main(["run", "--config", write(tmp_path, cfg), "--out", str(tmp_path)]) == 4


def test_verify_reports_sizes(tmp_path, capsys):
    assert main(["verify", "--config", write(tmp_path, {"domain": BOX, "law": {"kind": "deterministic", "c": 1}, "n_list": [2]})]) == 0
    out = capsys.readouterr().out
    assert "9 vertices" in out and "12 edges" in out
    assert "|Gamma_n^1| = 3" in out and "|Gamma_n^2| = 3" in out


def test_verify_empty_gamma_diagnostic(tmp_path, capsys):
    dom = dict(BOX, gamma1=[{"rect": [[0, 0], [0.1, 0.2]]}], gamma2=[{"rect": [[0, 0], [0.25, 0.3]]}])
    main(["verify", "--config", write(tmp_path, {"domain": dom, "n_list": [2]})])
    assert "empty Gamma_n^1" in capsys.readouterr().out


def test_verify_capacity_warning(tmp_path, capsys):
    dom3 = {"d": 3, "solid": [{"box": [[0, 1]] * 3}], "gamma1": [{"face": "x0-min"}], "gamma2": [{"face": "x0-max"}]}
    main(["verify", "--config", write(tmp_path, {"domain": dom3, "n_list": [64]})])
    assert "capacity warning" in capsys.readouterr().out


def test_json_mirror(tmp_path):
    out = tmp_path / "o"
    main(["run", "--config", write(tmp_path, det1_flow_constant((2,))), "--out", str(out), "--json"])
    lines = (out / "results.jsonl").read_text().splitlines()
    assert len(lines) == len(read_rows(out))
    assert json.loads(lines[0])["experiment"] == "flow-constant"


@pytest.mark.parametrize("name", ["domain_flow", "cut_geometry", "ball_events", "minimality_panel"])
def test_shipped_configs_run(tmp_path, name):
    cfg = json.loads((CONFIGS / f"{name}.json").read_text())
    if "n_list" in cfg:
        cfg["n_list"] = cfg["n_list"][:1]
    cfg["reps"] = min(cfg.get("reps", 1), 3)
    out = tmp_path / name
    assert main(["run", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    assert read_rows(out)


def test_cut_geometry_exports(tmp_path):
    cfg = json.loads((CONFIGS / "cut_geometry.json").read_text())
    cfg["reps"] = 1
    out = tmp_path / "cg"
    main(["run", "--config", write(tmp_path, cfg), "--out", str(out)])
    assert (out / "mu_n8_r0.csv").read_text().startswith("c0,c1,weight")
    assert json.loads((out / "R_n8_r0.json").read_text())["n"] == 8


def test_oracle_check_and_invariants(capsys):
    assert main(["oracle-check", "--trials", "20", "--seed", "3"]) == 0
    assert main(["invariants", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "20/20" in out


def test_thread_count_does_not_change_output(tmp_path):
    cfg = {"experiment": "domain-flow", "seed": 4, "law": {"kind": "two_point", "a": 1, "b": 2, "p": 0.5}, "domain": BOX, "n_list": [4, 6], "reps": 12}
    path = write(tmp_path, cfg)
    main(["run", "--config", path, "--threads", "1", "--out", str(tmp_path / "a")])
    main(["run", "--config", path, "--threads", "3", "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()


@pytest.mark.skipif(shutil.which("fpp-cutlab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    proc = subprocess.run(["fpp-cutlab", "run", "--config", write(tmp_path, {"experiment": "domain-flow"})], capture_output=True, text=True)
    assert proc.returncode == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fpp_cutlab.cli", "oracle-check", "--trials", "5"], capture_output=True, text=True)
    assert proc.returncode == 0 and "5/5" in proc.stdout
