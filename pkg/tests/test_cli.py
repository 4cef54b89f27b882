import csv
import subprocess
import sys

import numpy as np
import pytest

import quasistat.cli as cli
from quasistat import ConfigError, PotentialOutput, import_graph
from quasistat.cli import main
from quasistat.config import RunConfig, parse_config_text, parse_grid
from quasistat.pendulum import LinearSpringPendulum

LINEAR_SMALL = """\
# small linear-pendulum run
system = linear-pendulum
grid = 7x7
bounds = -1.5, 1.5, 3.5, 6.5   # around the critical control
n_seeds = 4
"""

CONTACT = """\
system = contact-pendulum
L0 = 1.0
W0 = 0.1
mg = 10
k_min = 1
k_max = 1e4
eps = 0.1
diagonals = true
"""


@pytest.fixture
def linear_cfg(tmp_path):
    p = tmp_path / "linear.conf"
    p.write_text(LINEAR_SMALL)
    return str(p)


@pytest.fixture
def contact_cfg(tmp_path):
    p = tmp_path / "contact.conf"
    p.write_text(CONTACT)
    return str(p)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_parse_config_values():
    cfg = parse_config_text(LINEAR_SMALL + "match_threshold = auto\ndiagonals = yes\nk_c = 2\n")
    assert cfg.system == "linear-pendulum"
    assert cfg.grid == (7, 7)
    assert cfg.bounds == (-1.5, 1.5, 3.5, 6.5)
    assert cfg.n_seeds == 4 and isinstance(cfg.n_seeds, int)
    assert cfg.match_threshold is None and cfg.diagonals is True and cfg.k_c == 2.0
    assert cfg.validate() is cfg


@pytest.mark.parametrize(
    "text",
    [
        "system = spring",
        "L0 = -1",
        "eps = 3",
        "k_max = 0.5",
        "grid = 0x4",
        "bounds = 1, 0, 0, 1",
        "switch_penalty = -1",
        "n_seeds = 0",
    ],
)
def test_invalid_values(text):
    with pytest.raises(ConfigError):
        parse_config_text(text).validate()


@pytest.mark.parametrize("text", ["colour = red", "grid = 3", "just words", "tol = fast"])
def test_malformed_lines(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_parse_grid():
    assert parse_grid("61x61") == (61, 61)
    assert parse_grid("3X5") == (3, 5)


def test_default_bounds_follow_system():
    lin = RunConfig().grid_bounds()
    assert lin == [(-1.5, 1.5), (3.5, 6.5)]
    con = RunConfig(system="contact-pendulum").grid_bounds()
    assert con == [(-1.5, 1.5), (-1.5, 1.5)]


def test_sample_writes_csv(linear_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["sample", "--config", linear_cfg, "--out", str(out)]) == 0
    rows = read_csv(out / "samples.csv")
    assert rows[0] == ["u_x", "u_y", "z_star", "energy", "stability", "det_hess_zz"]
    sys_ = LinearSpringPendulum()
    regular = [r for r in rows[1:] if (float(r[0]), float(r[1])) != tuple(sys_.u_crit)]
    singular = [r for r in rows[1:] if (float(r[0]), float(r[1])) == tuple(sys_.u_crit)]
    # one stable and one unstable point per fiber; over u_crit every angle is a critical equilibrium
    assert sorted(r[4] for r in regular) == ["stable"] * 48 + ["unstable"] * 48
    assert singular and all(r[4] == "critical" for r in singular)
    for r in rows[1:]:
        u, z = [float(r[0]), float(r[1])], [float(r[2])]
        assert abs(sys_.evaluate(z, u).grad_z[0]) <= 1e-10
    assert "49/49 fibers" in capsys.readouterr().out


def test_sample_is_deterministic(linear_cfg, tmp_path):
    main(["sample", "--config", linear_cfg, "--out", str(tmp_path / "a")])
    main(["sample", "--config", linear_cfg, "--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "samples.csv").read_bytes() == (tmp_path / "b" / "samples.csv").read_bytes()


def test_sample_one_by_one(contact_cfg, tmp_path):
    assert main(["sample", "--config", contact_cfg, "--grid", "1x1", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "samples.csv")
    assert rows[0][0] == "u_x" and len(rows) >= 1


def test_sample_fails_when_most_fibers_fail(linear_cfg, tmp_path, monkeypatch):
    monkeypatch.setattr("quasistat.cli.sample_fibers", lambda system, bottom, cfg: [[] for _ in bottom.vertices])
    assert main(["sample", "--config", linear_cfg, "--out", str(tmp_path)]) == 2


def test_plan_start_equals_goal(linear_cfg, tmp_path):
    assert main(["plan", "--config", linear_cfg, "--out", str(tmp_path), "--start", "0,4", "--goal", "0,4"]) == 0
    assert (tmp_path / "summary.txt").read_text().startswith("cost=0 ")
    rows = read_csv(tmp_path / "path.csv")
    assert len(rows) == 2


def test_plan_linear(linear_cfg, tmp_path, capsys):
    code = main(
        ["plan", "--config", linear_cfg, "--out", str(tmp_path), "--diagonals", "--start", "0,4,-1.57", "--goal", "0,6"]
    )
    assert code == 0
    rows = read_csv(tmp_path / "path.csv")
    header = rows[0]
    assert header == ["step", "node_id", "u_x", "u_y", "z_star", "energy", "cumulative_cost", "switch"]
    cum = [float(r[6]) for r in rows[1:]]
    assert cum[0] == 0.0 and all(b >= a for a, b in zip(cum, cum[1:]))
    assert f"cost={format(cum[-1], '.17g')}" in capsys.readouterr().out


def test_plan_unreachable_goal(linear_cfg, tmp_path, monkeypatch, capsys):
    # drop every edge so nothing is reachable
    real = cli.lift

    def no_edges(*a, **kw):
        g = real(*a, **kw)
        g.edges.clear()
        g._out = None
        return g

    monkeypatch.setattr(cli, "lift", no_edges)
    assert main(["plan", "--config", linear_cfg, "--out", str(tmp_path), "--start", "0,4", "--goal", "0,6"]) == 2
    assert "reachable set: 1" in capsys.readouterr().err


def test_plan_with_bad_point(linear_cfg, tmp_path):
    assert main(["plan", "--config", linear_cfg, "--out", str(tmp_path), "--start", "0", "--goal", "0,6"]) == 1


def test_switch_penalty_flag(contact_cfg, tmp_path):
    args = ["plan", "--config", contact_cfg, "--grid", "7x7", "--start", "0.5,-1.5,-1.57", "--goal", "0.5,-0.5,-0.79"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b"), "--switch-penalty", "1e9"]) == 0
    a = (tmp_path / "a" / "summary.txt").read_text()
    b = (tmp_path / "b" / "summary.txt").read_text()
    n_switch = int(b.split("switches=")[1])
    cost_a = float(a.split()[0].split("=")[1])
    cost_b = float(b.split()[0].split("=")[1])
    assert cost_b >= cost_a + 1e9 * n_switch - 1e-6 * cost_b


def test_pendulum_analytic_constant(tmp_path):
    assert main(["pendulum-analytic", "--out", str(tmp_path), "--samples", "33"]) == 0
    rows = read_csv(tmp_path / "pendulum_curve.csv")
    assert rows[0] == ["alpha", "lambda_u", "u_x", "u_y"]
    assert all(float(r[1]) == 1.0 for r in rows[1:])
    assert len(rows) == 34


def test_pendulum_analytic_boundaries_and_residuals(tmp_path):
    args = ["--alpha1", "-1.2", "--alpha2", "0.9", "--lambda1", "0.7", "--lambda2", "1.3", "--samples", "51"]
    assert main(["pendulum-analytic", "--out", str(tmp_path), *args]) == 0
    rows = np.array([[float(x) for x in r] for r in read_csv(tmp_path / "pendulum_curve.csv")[1:]])
    assert rows[0, 0] == -1.2 and rows[-1, 0] == 0.9
    assert rows[0, 1] == 0.7 and rows[-1, 1] == 1.3
    sys_ = LinearSpringPendulum()
    for alpha, _, ux, uy in rows:
        assert abs(sys_.evaluate([alpha], [ux, uy]).grad_z[0]) <= 1e-10


def test_pendulum_analytic_degenerate(tmp_path):
    assert main(["pendulum-analytic", "--out", str(tmp_path), "--alpha1", "0.5", "--alpha2", "0.5"]) == 1


def test_check_linear_passes(tmp_path, capsys):
    assert main(["check", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out


def test_check_contact_passes(contact_cfg, tmp_path, capsys):
    assert main(["check", "--config", contact_cfg, "--out", str(tmp_path)]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_check_detects_corrupted_gradient(tmp_path, monkeypatch, capsys):
    class Corrupted(LinearSpringPendulum):
        def evaluate(self, z, u):
            out = super().evaluate(z, u)
            return PotentialOutput(out.value, out.grad_z + 1e-3, out.grad_u, out.hess_zz, out.hess_uz, out.hess_uu)

    monkeypatch.setattr(RunConfig, "build_system", lambda self: Corrupted())
    assert main(["check", "--out", str(tmp_path)]) == 3
    assert "FAIL  derivatives" in capsys.readouterr().out


def test_export_graph(linear_cfg, tmp_path):
    assert main(["export-graph", "--config", linear_cfg, "--out", str(tmp_path)]) == 0
    g = import_graph(tmp_path / "graph.txt")
    assert len(g.nodes) == 48  # the fiber over u_crit has no stable point
    assert all(e.weight >= 0 for e in g.edges)


def test_invalid_config_exit_code(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("system = teapot\n")
    assert main(["sample", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["sample", "--config", str(tmp_path / "missing.conf")]) == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run(
        [sys.executable, "-m", "quasistat", "pendulum-analytic", "--out", str(tmp_path), "--samples", "3"],
        capture_output=True,
        text=True,
    )
    assert r.returncode == 0
    assert (tmp_path / "pendulum_curve.csv").exists()
