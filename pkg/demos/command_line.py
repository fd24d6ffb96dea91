"""Driving the package from the command line.

Writes a configuration, then runs the four subcommands on it: spectrum,
simulate, solve-exact and verify.  Trajectories are CSV files.  Summaries
and errors go to stderr as JSON, and the exit code says what happened.
"""

import subprocess
import sys
import tempfile
from pathlib import Path

CONFIG = """\
[string]
positions = [0.2, 0.4, 0.6]
masses = [0.1, 0.15, 0.1]
h = 1.0
H = 0.0

[flow]
k = 2

[run]
t_end = 1.0
adaptive_tol = 1e-10
sample_times = [0.0, 0.25, 0.5, 0.75, 1.0]
"""


def run(*args):
    cmd = [sys.executable, "-m", "isostring.cli", *args]
    res = subprocess.run(cmd, capture_output=True, text=True)
    print(f"$ isostring {' '.join(args)}\n  exit {res.returncode}")
    if res.stderr.strip():
        print("  stderr:", res.stderr.strip())
    return res


with tempfile.TemporaryDirectory() as tmp:
    cfg = Path(tmp, "run.toml")
    cfg.write_text(CONFIG)
    print("  stdout:", run("spectrum", "--config", str(cfg)).stdout.strip())
    run("simulate", "--config", str(cfg), "--output", str(Path(tmp, "ode.csv")))
    run("solve-exact", "--config", str(cfg), "--output", str(Path(tmp, "exact.csv")))
    print("\nlast row, ODE:  ", Path(tmp, "ode.csv").read_text().splitlines()[-1][:90])
    print("last row, exact:", Path(tmp, "exact.csv").read_text().splitlines()[-1][:90])
    print()
    print("  stdout:", run("verify", "--config", str(cfg)).stdout.strip())
    cfg.write_text(CONFIG.replace("H = 0.0", "H = 2.0"))
    run("solve-exact", "--config", str(cfg))
