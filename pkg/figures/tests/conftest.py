"""Generate tiny preset CSVs once per session through the simulator CLI."""
import os
import subprocess
import sys

import pytest

PRESETS = [f"fig{i}" for i in range(6, 20)]


@pytest.fixture(scope="session")
def preset_csvs(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    env = {k: v for k, v in os.environ.items() if k != "SRLINKSIM_OUT"}
    paths = {}
    for name in PRESETS:
        proc = subprocess.run(
            [sys.executable, "-m", "srlinksim.cli", "run", "--preset", name,
             "--trials", "400", "--out", str(out)],
            capture_output=True, text=True, env=env,
        )
        assert proc.returncode == 0, f"{name}: {proc.stderr}"
        paths[name] = out / name / "metrics.csv"
        assert paths[name].exists()
    return paths
