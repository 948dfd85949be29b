import json

import numpy as np
import pytest

from mchull.cli import main, parse_config, UsageError
from mchull.grid import GridSpec, VoxelSet, read_mchv, write_mchv


def run_cli(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


class TestConfig:
    def test_defaults_and_echo(self, tmp_path):
        assert run_cli(tmp_path, "shape", "--grid", "32") == 0
        cfg = json.loads((tmp_path / "config.json").read_text())
        assert cfg["command"] == "shape" and cfg["grid"] == "32" and cfg["seed"] == 0

    def test_flag_beats_file(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text(json.dumps({"grid": "48", "seed": 3, "scene": "l_shape"}))
        cfg = parse_config(["shape", "--config", str(f), "--seed", "5", "--out", str(tmp_path)])
        assert cfg["seed"] == 5 and cfg["grid"] == "48" and cfg["scene"] == "l_shape"
        assert cfg["overridden"] == ["seed"]

    def test_unknown_key(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text(json.dumps({"grdi": "48"}))
        with pytest.raises(UsageError, match="unknown key"):
            parse_config(["shape", "--config", str(f)])

    def test_wrong_type(self, tmp_path):
        f = tmp_path / "c.json"
        f.write_text(json.dumps({"seed": "x"}))
        assert run_cli(tmp_path, "shape", "--config", str(f)) == 2

    def test_bad_stencil_names_valid_orders(self, tmp_path, capsys):
        assert run_cli(tmp_path, "shape", "--grid", "32", "--stencil", "7") == 2
        err = capsys.readouterr().err
        assert "4, 8, 16" in err

    def test_bad_grid_and_scene(self, tmp_path):
        assert run_cli(tmp_path, "shape", "--grid", "abc") == 2
        assert run_cli(tmp_path, "shape", "--scene", "blob") == 2
        assert run_cli(tmp_path, "flow", "--in", str(tmp_path / "missing.mchv")) == 2


class TestCommands:
    def test_shape(self, tmp_path):
        assert run_cli(tmp_path, "shape", "--grid", "32", "--scene", "l_shape") == 0
        E = read_mchv(tmp_path / "shape.mchv")
        meta = json.loads((tmp_path / "shape.json").read_text())
        assert meta["count"] == E.count() > 0
        assert (tmp_path / "shape.pgm").read_bytes().startswith(b"P5")

    def test_shape_param(self, tmp_path):
        assert run_cli(tmp_path, "shape", "--grid", "32", "--param", "r=0.5") == 0
        big = read_mchv(tmp_path / "shape.mchv").count()
        assert run_cli(tmp_path, "shape", "--grid", "32", "--param", "r=0.25") == 0
        assert read_mchv(tmp_path / "shape.mchv").count() < big

    def test_flow(self, tmp_path):
        code = run_cli(tmp_path, "flow", "--grid", "32", "--h", "16", "--snapshot-every", "2")
        assert code == 0
        tr = json.loads((tmp_path / "trajectory.json").read_text())
        assert tr["stationary"] and tr["n_steps"] >= 1
        assert read_mchv(tmp_path / "final.mchv").count() > 0
        assert (tmp_path / "snapshots").is_dir()

    def test_flow_frame_touching_obstacle(self, tmp_path):
        spec = GridSpec((16, 16))
        m = np.zeros(spec.shape, bool)
        m[1:8, 1:8] = True
        write_mchv(tmp_path / "o.mchv", VoxelSet(spec, m))
        assert run_cli(tmp_path, "flow", "--in", str(tmp_path / "o.mchv"), "--h", "4") == 2

    def test_hull_and_export(self, tmp_path):
        code = run_cli(tmp_path, "hull", "--grid", "16", "--dim", "3", "--scene", "ball",
                       "--eps", "2,1,0.5", "--hs", "16,8", "--obj")
        assert code == 0
        rep = json.loads((tmp_path / "hull_report.json").read_text())
        assert len(rep["runs"]) == 6
        assert (tmp_path / "hull.obj").read_text().count("\nf ") > 0
        exp = tmp_path / "exp"
        assert main(["export", "--in", str(tmp_path / "hull.mchv"), "--obj",
                     "--out", str(exp)]) == 0
        assert (exp / "hull.obj").read_text() == (tmp_path / "hull.obj").read_text()

    def test_export_needs_input(self, tmp_path):
        assert run_cli(tmp_path, "export", "--obj") == 2

    def test_verify_lattice(self, tmp_path, capsys):
        assert run_cli(tmp_path, "verify", "--suite", "lattice", "--trials", "50",
                       "--seed", "7") == 0
        checks = json.loads((tmp_path / "checks.json").read_text())
        assert checks[0]["pass"] is True and checks[0]["trials"] == 50
        assert "PASS" in capsys.readouterr().out

    def test_verify_unknown_suite(self, tmp_path):
        assert run_cli(tmp_path, "verify", "--suite", "nope") == 2

    def test_deterministic_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            assert main(["flow", "--grid", "32", "--scene", "l_shape", "--out", str(d)]) == 0
        for name in ("final.mchv", "trajectory.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
