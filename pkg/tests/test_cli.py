import json
import os
from pathlib import Path

import pytest

from srlinksim.cli import main


def run_cli(args, env_out):
    old = os.environ.get("SRLINKSIM_OUT")
    os.environ["SRLINKSIM_OUT"] = str(env_out)
    try:
        return main(args)
    finally:
        if old is None:
            os.environ.pop("SRLINKSIM_OUT", None)
        else:
            os.environ["SRLINKSIM_OUT"] = old


def test_dump_allocation_examples(capsys):
    assert main(["dump-allocation", "--n", "8", "--p", "1",
                 "--scheme", "fo", "--modulation", "ofsk"]) == 0
    roles = json.loads(capsys.readouterr().out)["roles"]
    assert roles == ["D", "B1", "D", "B1", "D", "B1", "D", "B1"]

    assert main(["dump-allocation", "--n", "8", "--p", "2",
                 "--scheme", "so", "--modulation", "ofsk"]) == 0
    roles = json.loads(capsys.readouterr().out)["roles"]
    assert roles == ["D", "B1", "B2", "D", "D", "D", "D", "D"]


def test_dump_allocation_invalid_capacity(capsys):
    rc = main(["dump-allocation", "--n", "4", "--p", "3",
               "--scheme", "fo", "--modulation", "mfsk"])
    assert rc == 2
    assert "error" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path, capsys):
    rc = run_cli(["run", "--config", str(tmp_path / "missing.toml")], tmp_path)
    assert rc == 2
    assert not (tmp_path / "missing").exists()


def test_config_run_writes_artifacts(tmp_path):
    cfg = tmp_path / "tiny.toml"
    cfg.write_text("""
[system]
n_subcarriers = 16
cp_len = 4
num_bds = 1
scheme = "fully_orthogonal"
modulation = "mfsk"
alpha = [0.5]
snr_db_grid = [5.0]
num_trials = 200
seed = 9
""")
    out = tmp_path / "runs"
    assert run_cli(["run", "--config", str(cfg)], out) == 0
    run_dir = out / "tiny"
    csv = (run_dir / "metrics.csv").read_text()
    header = csv.splitlines()[0]
    assert header == "scheme,modulation,N,P,alpha,snr_db,metric,value,ci_lo,ci_hi,trials,source,cfo,sic"
    manifest = json.loads((run_dir / "manifest.json").read_text())
    assert manifest["seed"] == 9
    assert manifest["records"] == len(csv.strip().splitlines()) - 1


def test_preset_run_deterministic(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    args = ["run", "--preset", "fig16", "--trials", "50"]
    assert run_cli(args, out1) == 0
    assert run_cli(args, out2) == 0
    csv1 = (out1 / "fig16" / "metrics.csv").read_bytes()
    csv2 = (out2 / "fig16" / "metrics.csv").read_bytes()
    assert csv1 == csv2
    assert len(csv1.splitlines()) > 32
