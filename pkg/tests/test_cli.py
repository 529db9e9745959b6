import json

import numpy as np
import pytest

from freqnbv.cli import main
from freqnbv.frequency import gaussian_blur
from freqnbv.metrics import read_report, write_ppm

SMALL = {"n_views": 16, "n_orbits": 2, "n_gaussians": 40, "seed": 3}


def files(directory):
    return {p.relative_to(directory).as_posix(): p.read_bytes() for p in sorted(directory.rglob("*")) if p.is_file()}


@pytest.fixture
def generated(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(SMALL))
    assert main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "gen")]) == 0
    return tmp_path / "gen"


def plan(gen, out, *extra):
    return main(["plan", "--scene", str(gen / "scene.json"), "--dataset", str(gen / "dataset"),
                 "--out-dir", str(out), "--init-count", "4", "--budget", "8", *extra])


class TestGenerate:
    def test_writes_files(self, tmp_path, capsys):
        cfg = tmp_path / "config.json"
        cfg.write_text(json.dumps(SMALL))
        assert main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "gen")]) == 0
        generated = tmp_path / "gen"
        assert (generated / "scene.json").exists()
        for name in ("cameras.txt", "images.txt", "points3D.txt"):
            assert (generated / "dataset" / name).exists()
        out = capsys.readouterr().out
        assert "views 16" in out and "trajectory_length" in out

    def test_missing_config(self, tmp_path, capsys):
        assert main(["generate", "--config", str(tmp_path / "nope.json"), "--out-dir", str(tmp_path)]) == 2
        assert "usage" in capsys.readouterr().err

    def test_same_seed_same_bytes(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(SMALL))
        for name in ("a", "b"):
            assert main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / name)]) == 0
        assert files(tmp_path / "a") == files(tmp_path / "b")

    def test_seed_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(SMALL))
        main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "a")])
        main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "b"), "--seed", "4"])
        assert (tmp_path / "a" / "scene.json").read_bytes() != (tmp_path / "b" / "scene.json").read_bytes()

    def test_bad_config(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"n_views": 16, "colour": 1}')
        assert main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 1
        assert "config" in capsys.readouterr().err


class TestPlan:
    def test_outputs(self, generated, tmp_path, capsys):
        out = tmp_path / "run"
        assert plan(generated, out) == 0
        report = read_report(out / "report.json")
        assert len(report.selected_ids) == 4
        assert (out / "steps.csv").read_text().startswith("step,candidate_id,median_frequency,chosen\n")
        for i in report.selected_ids:
            assert (out / "renders" / f"selected_{i:04d}.ppm").exists()
        for i in report.test_ids:
            assert (out / "renders" / f"test_{i:04d}_truth.ppm").exists()
        printed = capsys.readouterr().out
        assert "Traveling distance" in printed and "PSNR" in printed
        ratio = next(l for l in printed.splitlines() if l.strip().startswith("ratio")).split()[1]
        assert float(ratio) == report.trajectory_ratio

    def test_budget_equals_init(self, generated, tmp_path):
        out = tmp_path / "run"
        assert plan(generated, out, "--budget", "4") == 0
        assert read_report(out / "report.json").selected_ids == []

    def test_rerun_is_byte_identical(self, generated, tmp_path):
        assert plan(generated, tmp_path / "a", "--seed", "7") == 0
        assert plan(generated, tmp_path / "b", "--seed", "7") == 0
        assert files(tmp_path / "a") == files(tmp_path / "b")

    def test_flags_reach_config(self, generated, tmp_path):
        out = tmp_path / "run"
        assert plan(generated, out, "--radius", "0.5", "--widen-factor", "2", "--blur-scale-base", "3",
                    "--maturity-count", "2", "--score-mode", "magnitude-median", "--window", "hann") == 0
        cfg = read_report(out / "report.json").config
        assert cfg["radius"] == 0.5 and cfg["widen_factor"] == 2.0 and cfg["window"] == "hann"
        assert cfg["proxy"]["blur_scale_base"] == 3.0 and cfg["proxy"]["maturity_count"] == 2
        assert cfg["score_mode"] == "magnitude-median"

    def test_missing_scene(self, generated, tmp_path, capsys):
        rc = main(["plan", "--scene", str(tmp_path / "none.json"), "--dataset", str(generated / "dataset"),
                   "--out-dir", str(tmp_path / "x")])
        assert rc == 2 and not (tmp_path / "x").exists()

    def test_failing_stage_is_named(self, generated, tmp_path, capsys):
        assert plan(generated, tmp_path / "x", "--budget", "40") == 1
        assert "plan failed" in capsys.readouterr().err

    def test_report_subcommand(self, generated, tmp_path, capsys):
        plan(generated, tmp_path / "run")
        capsys.readouterr()
        assert main(["report", "--report", str(tmp_path / "run" / "report.json")]) == 0
        assert "selected" in capsys.readouterr().out


class TestScore:
    def test_blurred_ranks_first(self, tmp_path, capsys, rng):
        x = rng.uniform(size=(32, 32, 3))
        write_ppm(x, tmp_path / "a_sharp.ppm")
        write_ppm(gaussian_blur(x, 2.0), tmp_path / "b_blurred.ppm")
        assert main(["score", "--images", str(tmp_path), "--out-dir", str(tmp_path / "csv")]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].endswith("b_blurred.ppm") and lines[-1] == "argmin b_blurred.ppm"
        assert (tmp_path / "csv" / "a_sharp_spectrum.csv").exists()

    def test_single_image(self, tmp_path, capsys, rng):
        write_ppm(rng.uniform(size=(16, 16)), tmp_path / "only.ppm")
        assert main(["score", "--images", str(tmp_path)]) == 0
        assert capsys.readouterr().out.strip().endswith("argmin only.ppm")

    def test_empty_directory(self, tmp_path, capsys):
        assert main(["score", "--images", str(tmp_path)]) == 2
        assert "no .ppm" in capsys.readouterr().err

    def test_unreadable_image(self, tmp_path, capsys):
        (tmp_path / "bad.ppm").write_bytes(b"garbage")
        assert main(["score", "--images", str(tmp_path)]) == 1
        assert "bad.ppm" in capsys.readouterr().err

    def test_constant_image_scores_zero(self, tmp_path, capsys):
        write_ppm(np.full((16, 16), 0.5), tmp_path / "flat.ppm")
        assert main(["score", "--images", str(tmp_path)]) == 0
        assert capsys.readouterr().out.startswith("0.000000  flat.ppm")


def test_requires_subcommand():
    with pytest.raises(SystemExit) as err:
        main([])
    assert err.value.code == 2
