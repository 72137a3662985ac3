"""End-to-end command surface: pipelines, exit codes, CSV schemas."""

import csv

import pytest

from pairtrack import cli
from pairtrack.mot_io import parse_mot_gt, parse_mot_result


def _read_csv(path):
    lines = path.read_text().splitlines()
    schema = lines[0]
    rows = list(csv.DictReader(lines[1:]))
    return schema, rows


def _simulate(tmp_path, name="gt.txt", seed=3, frames=12, objects=3):
    out = tmp_path / name
    rc = cli.main(
        [
            "simulate",
            "--out",
            str(out),
            "--seed",
            str(seed),
            "--set",
            f"sim.n_frames={frames}",
            "--set",
            f"sim.n_objects={objects}",
        ]
    )
    assert rc == 0
    return out


class TestPipeline:
    def test_simulate_track_eval(self, tmp_path):
        gt = _simulate(tmp_path)
        assert len(parse_mot_gt(gt).frames) == 12

        res = tmp_path / "res.txt"
        rc = cli.main(
            ["track", "--gt", str(gt), "--out", str(res), "--seed", "3",
             "--set", "sampler.n_p=200"]
        )
        assert rc == 0
        assert parse_mot_result(res).frames == parse_mot_gt(gt).frames

        out_csv = tmp_path / "metrics.csv"
        rc = cli.main(["eval", "--gt", str(gt), "--res", str(res), "--out", str(out_csv)])
        assert rc == 0
        schema, rows = _read_csv(out_csv)
        assert schema == "# pairtrack-csv-v1 eval"
        assert [r["seq"] for r in rows] == ["gt"]
        assert float(rows[0]["mota"]) >= 0.99
        assert list(rows[0]) == [
            "seq", "mota", "idf1", "idp", "idr", "fp", "fn",
            "idsw", "frag", "mt", "ml", "gt_total",
        ]

    def test_track_is_reproducible(self, tmp_path):
        gt = _simulate(tmp_path, frames=8, objects=2)
        args = ["track", "--gt", str(gt), "--seed", "5", "--set", "sampler.n_p=150"]
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        assert cli.main(args + ["--out", str(a)]) == 0
        assert cli.main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_drives_commands(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("sim.n_frames=6\nsim.n_objects=2\nseed=8\n")
        out = tmp_path / "gt.txt"
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        seq = parse_mot_gt(out)
        assert len(seq.frames) == 6 and seq.identities() == [0, 1]

    def test_directory_mode_matches_serial(self, tmp_path):
        gt_dir = tmp_path / "gt"
        gt_dir.mkdir()
        _simulate(gt_dir, "seq_a.txt", seed=1, frames=5, objects=2)
        _simulate(gt_dir, "seq_b.txt", seed=2, frames=5, objects=2)
        common = ["--seed", "4", "--set", "sampler.n_p=150"]
        out1, out2 = tmp_path / "serial", tmp_path / "parallel"
        assert cli.main(["track", "--gt", str(gt_dir), "--out", str(out1), "--jobs", "1"] + common) == 0
        assert cli.main(["track", "--gt", str(gt_dir), "--out", str(out2), "--jobs", "2"] + common) == 0
        for name in ("seq_a.txt", "seq_b.txt"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

        out_csv = tmp_path / "metrics.csv"
        assert cli.main(["eval", "--gt", str(gt_dir), "--res", str(out1), "--out", str(out_csv)]) == 0
        _, rows = _read_csv(out_csv)
        assert [r["seq"] for r in rows] == ["seq_a", "seq_b"]


class TestSweep:
    def test_grid_rows_and_schema(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = cli.main(
            ["sweep", "--np", "100,200", "--out", str(out), "--seed", "1",
             "--set", "sim.n_frames=6", "--set", "sim.n_objects=2"]
        )
        assert rc == 0
        schema, rows = _read_csv(out)
        assert schema == "# pairtrack-csv-v1 sweep"
        assert [r["n_p"] for r in rows] == ["100", "200"]
        assert list(rows[0]) == ["n_p", "n_ss", "n_rp", "b_th", "mota", "idf1", "idsw", "wall_time_s"]
        for r in rows:
            assert float(r["wall_time_s"]) >= 0.0


class TestLossAudit:
    def test_timestep_stride(self, tmp_path):
        out = tmp_path / "loss.csv"
        rc = cli.main(
            ["loss-audit", "--out", str(out), "--tr-step", "13", "--seed", "2",
             "--set", "sim.n_frames=6", "--set", "sim.n_objects=2",
             "--set", "loss.n_train=60"]
        )
        assert rc == 0
        schema, rows = _read_csv(out)
        assert schema == "# pairtrack-csv-v1 loss_audit"
        assert [int(r["t_r"]) for r in rows] == [1, 14, 27]
        assert list(rows[0]) == ["t_r", "sigma", "cls_term", "l1_term", "giou3d_term", "total"]


class TestExitCodes:
    def test_no_command_is_usage_error(self):
        with pytest.raises(SystemExit) as ei:
            cli.main([])
        assert ei.value.code == 1

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as ei:
            cli.main(["track", "--bogus"])
        assert ei.value.code == 1

    def test_missing_required_argument(self):
        with pytest.raises(SystemExit) as ei:
            cli.main(["simulate"])
        assert ei.value.code == 1

    def test_missing_gt_is_data_error(self, tmp_path, capsys):
        rc = cli.main(["track", "--gt", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "o.txt")])
        assert rc == 2
        assert "error:" in capsys.readouterr().err

    def test_malformed_gt_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("1,1,0,0,10\n")
        rc = cli.main(["track", "--gt", str(bad), "--out", str(tmp_path / "o.txt")])
        assert rc == 2

    def test_mixed_eval_paths_are_data_error(self, tmp_path):
        gt = _simulate(tmp_path, frames=5, objects=1)
        rc = cli.main(["eval", "--gt", str(gt), "--res", str(tmp_path)])
        assert rc == 2

    def test_missing_result_in_directory(self, tmp_path):
        gt_dir, res_dir = tmp_path / "gt", tmp_path / "res"
        gt_dir.mkdir()
        res_dir.mkdir()
        _simulate(gt_dir, "seq_a.txt", frames=5, objects=1)
        rc = cli.main(["eval", "--gt", str(gt_dir), "--res", str(res_dir)])
        assert rc == 2

    def test_extra_result_in_directory(self, tmp_path):
        gt_dir, res_dir = tmp_path / "gt", tmp_path / "res"
        gt_dir.mkdir()
        res_dir.mkdir()
        gt = _simulate(gt_dir, "seq_a.txt", frames=5, objects=1)
        assert cli.main(["track", "--gt", str(gt), "--out", str(res_dir / "seq_a.txt"),
                         "--set", "sampler.n_p=100"]) == 0
        (res_dir / "stray.txt").write_text("1,1,0,0,10,10,1\n")
        rc = cli.main(["eval", "--gt", str(gt_dir), "--res", str(res_dir)])
        assert rc == 2

    def test_bad_config_file_is_data_error(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("sampler.bogus=1\n")
        rc = cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o.txt")])
        assert rc == 2
