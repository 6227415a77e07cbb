import os
import subprocess
import sys

import numpy as np

from pluritorus.cli import main


SOLVE_TOML = """
[grid]
dim = 1
sizes = [64]

[form]
kind = "closed"
A = [[1.0]]

[density]
value = 1.0

[params]
seed = 1
mode = "normalized"
"""

NEG_VOLUME_TOML = """
[grid]
dim = 2
sizes = [8, 8]

[form]
kind = "closed"
A = [[-1.0, 0.0], [0.0, -1.0]]

[params]
eps_list = [0.2, 0.1]
"""

MA_TOML = """
[grid]
dim = 1
sizes = [8]

[form]
kind = "closed"
A = [[4.0]]

[potential]
file = "u.csv"
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_solve_trivial_exit0(tmp_path, capsys):
    cfg = write(tmp_path, "c.toml", SOLVE_TOML)
    out = tmp_path / "out"
    code = main(["solve", "--config", cfg, "--out", str(out)])
    assert code == 0
    import json
    data = json.loads((out / "solve.json").read_text())
    assert data["c"] == 1.0


def test_volume_not_psef_exit3(tmp_path):
    cfg = write(tmp_path, "v.toml", NEG_VOLUME_TOML)
    out = tmp_path / "out"
    code = main(["volume", "--config", cfg, "--out", str(out)])
    assert code == 3
    import json
    data = json.loads((out / "volume.json").read_text())
    assert data["vol_big"] == 0.0 and data["status"] == "not_psef"


def test_ma_npp_with_pole_potential(tmp_path):
    from pluritorus.serialize import save_field_csv
    vals = np.zeros(8)
    vals[0] = -np.inf
    save_field_csv(tmp_path / "u.csv", vals)
    cfg = write(tmp_path, "m.toml", MA_TOML)
    out = tmp_path / "out"
    assert main(["npp", "--config", cfg, "--out", str(out)]) == 0
    import json
    data = json.loads((out / "npp.json").read_text())
    assert data["total_mass"] == 2.5


def test_bad_config_exit4(tmp_path):
    cfg = write(tmp_path, "bad.toml", "[grid]\ndim = 1\n")  # sizes missing
    assert main(["envelope", "--config", cfg, "--out", str(tmp_path / "o")]) == 4
    assert main(["nonsense"]) == 4


def test_verify_cli_exit0(tmp_path):
    code = main(["verify", "--suite", "qpsh", "--seed", "1",
                 "--out", str(tmp_path / "rep")])
    assert code == 0
    assert (tmp_path / "rep" / "verify_report.json").exists()


def _run_cli(args, cwd, env_extra):
    env = os.environ.copy()
    env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "pluritorus", *args],
                          cwd=cwd, env=env, capture_output=True, text=True)


def test_determinism_across_thread_counts(tmp_path):
    cfg = write(tmp_path, "c.toml", SOLVE_TOML)
    outputs = []
    for threads, sub in (("1", "a"), ("4", "b")):
        out = tmp_path / sub
        proc = _run_cli(["solve", "--config", cfg, "--out", str(out)],
                        tmp_path, {"PLURITORUS_THREADS": threads,
                                   "OMP_NUM_THREADS": threads,
                                   "OPENBLAS_NUM_THREADS": threads})
        assert proc.returncode == 0, proc.stderr
        outputs.append((out / "solve.json").read_bytes() +
                       (out / "phi.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_verify_rerun_bit_identical(tmp_path):
    blobs = []
    for sub in ("r1", "r2"):
        out = tmp_path / sub
        proc = _run_cli(["verify", "--suite", "measures", "--seed", "3",
                         "--out", str(out)], tmp_path, {})
        assert proc.returncode == 0, proc.stderr
        blobs.append((out / "verify_report.json").read_bytes())
    assert blobs[0] == blobs[1]


ENVELOPE_TOML = """
[grid]
dim = 1
sizes = [32]

[form]
kind = "closed"
A = [[-1.0]]

[obstacle]
value = 0.0
"""

DELTA_TOML = """
[grid]
dim = 1
sizes = [32]

[form]
kind = "closed"
A = [[2.0]]

[params]
samples = 5
seed = 2
"""


def test_envelope_infeasible_exit3(tmp_path):
    cfg = write(tmp_path, "e.toml", ENVELOPE_TOML)
    out = tmp_path / "out"
    assert main(["envelope", "--config", cfg, "--out", str(out)]) == 3
    import json
    data = json.loads((out / "envelope.json").read_text())
    assert data["status"] == "infeasible"


def test_delta_cli(tmp_path):
    cfg = write(tmp_path, "d.toml", DELTA_TOML)
    out = tmp_path / "out"
    assert main(["delta", "--config", cfg, "--out", str(out)]) == 0
    import json
    data = json.loads((out / "delta.json").read_text())
    assert data["estimate"] <= 1e-12 and data["samples"] == 5
