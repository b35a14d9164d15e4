import json

import pytest

from onsdkit.cli import main
from onsdkit.phantom import load_truth


@pytest.fixture(scope="module")
def phantom_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-phantom") / "vid0"
    spec_file = out.parent / "spec.txt"
    spec_file.write_text(
        "width=340\nheight=96\ntrue_sheath_width=44\n"
        "sheath_center_column=170.0\nfat_mean=180\nfat_sigma=4\n"
        "sheath_mean=40\nsheath_sigma=4\nspeckle_sigma=15\n"
        "drift_per_frame=0.2\nclean_frame_index=2\nmm_per_pixel=0.05\n"
    )
    rc = main(["phantom", "--spec", str(spec_file), "--out", str(out),
               "--frames", "6", "--seed", "17"])
    assert rc == 0
    return out


class TestPhantomCommand:
    def test_outputs(self, phantom_dir):
        assert len(list(phantom_dir.glob("*.pgm"))) == 6
        assert (phantom_dir / "meta.txt").exists()
        assert (phantom_dir / "truth.json").exists()
        assert (phantom_dir / "phantom.cfg").exists()

    def test_deterministic_bytes(self, tmp_path):
        rcs = []
        for name in ("a", "b"):
            rcs.append(main(["phantom", "--out", str(tmp_path / name),
                             "--frames", "3", "--seed", "4"]))
        assert rcs == [0, 0]
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_bad_spec_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("width=nonsense\n")
        rc = main(["phantom", "--spec", str(bad), "--out", str(tmp_path / "x")])
        assert rc == 4

    def test_missing_spec_file_is_input_error(self, tmp_path):
        rc = main(["phantom", "--spec", str(tmp_path / "absent.txt"),
                   "--out", str(tmp_path / "x")])
        assert rc == 2


class TestMeasureCommand:
    def test_measure_phantom(self, phantom_dir, tmp_path):
        out = tmp_path / "out"
        rc = main(["measure", str(phantom_dir), "--out", str(out),
                   "--config", str(phantom_dir / "phantom.cfg")])
        assert rc == 0
        report = json.loads((out / "vid0.json").read_text())
        assert report["optimal_frame"] == 2
        truth = load_truth(phantom_dir / "truth.json")
        t = truth.frames[2]
        assert abs(report["measurement"]["onsd_px"] - (t.right_edge - t.left_edge)) <= 1.5

    def test_reports_byte_identical_on_rerun(self, phantom_dir, tmp_path):
        outs = []
        for name in ("r1", "r2"):
            out = tmp_path / name
            rc = main(["measure", str(phantom_dir), "--out", str(out),
                       "--config", str(phantom_dir / "phantom.cfg")])
            assert rc == 0
            outs.append((out / "vid0.json").read_bytes())
        assert outs[0] == outs[1]

    def test_dump_signals(self, phantom_dir, tmp_path):
        out = tmp_path / "dump"
        rc = main(["measure", str(phantom_dir), "--out", str(out),
                   "--config", str(phantom_dir / "phantom.cfg"), "--dump-signals"])
        assert rc == 0
        for name in ("column_signal.csv", "kl_left.csv", "kl_right.csv",
                     "entropy.csv", "frame_scores.csv", "roi_boxes.csv"):
            assert (out / name).exists(), name
        # row counts match domains
        report = json.loads((out / "vid0.json").read_text())
        v_rows = (out / "column_signal.csv").read_text().strip().splitlines()
        assert len(v_rows) - 1 == 340
        entropy_rows = (out / "entropy.csv").read_text().strip().splitlines()
        assert len(entropy_rows) - 1 == report["n_frames"]
        kl_rows = (out / "kl_left.csv").read_text().strip().splitlines()
        b = report["measurement"]["boundaries"]
        assert len(kl_rows) - 1 == b["d_center"] - b["d_left"] + 1

    def test_empty_directory_is_input_error(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        rc = main(["measure", str(empty), "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_missing_seed_box_is_input_error(self, phantom_dir, tmp_path):
        # copy frames without the truth record
        bare = tmp_path / "bare"
        bare.mkdir()
        for f in phantom_dir.glob("*.pgm"):
            (bare / f.name).write_bytes(f.read_bytes())
        rc = main(["measure", str(bare), "--out", str(tmp_path / "o")])
        assert rc == 2

    def test_explicit_seed_box(self, phantom_dir, tmp_path):
        truth = load_truth(phantom_dir / "truth.json")
        box = ",".join(str(v) for v in truth.seed_box)
        rc = main(["measure", str(phantom_dir), "--out", str(tmp_path / "o"),
                   "--config", str(phantom_dir / "phantom.cfg"), "--seed-box", box])
        assert rc == 0

    def test_bad_config_is_config_error(self, phantom_dir, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("top_k=0\n")
        rc = main(["measure", str(phantom_dir), "--out", str(tmp_path / "o"),
                   "--config", str(bad)])
        assert rc == 4


class TestBatchMode:
    def test_batch_with_jobs(self, tmp_path):
        parent = tmp_path / "videos"
        for i in range(2):
            rc = main(["phantom", "--out", str(parent / f"v{i}"),
                       "--frames", "4", "--seed", str(i)])
            assert rc == 0
        out1 = tmp_path / "seq"
        rc = main(["measure", str(parent), "--batch", "--out", str(out1),
                   "--config", str(parent / "v0" / "phantom.cfg")])
        assert rc == 0
        index = json.loads((out1 / "index.json").read_text())
        assert set(index) == {"v0", "v1"}
        # parallel run produces identical bytes
        out2 = tmp_path / "par"
        rc = main(["measure", str(parent), "--batch", "--jobs", "2",
                   "--out", str(out2),
                   "--config", str(parent / "v0" / "phantom.cfg")])
        assert rc == 0
        assert (out1 / "index.json").read_bytes() == (out2 / "index.json").read_bytes()
        for i in range(2):
            a = (out1 / f"v{i}" / f"v{i}.json").read_bytes()
            b = (out2 / f"v{i}" / f"v{i}.json").read_bytes()
            assert a == b

    def test_batch_without_videos_is_input_error(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        rc = main(["measure", str(empty), "--batch", "--out", str(tmp_path / "o")])
        assert rc == 2


class TestEvaluateCommand:
    def _write_series(self, path, values, ids=None):
        ids = ids or [f"s{i}" for i in range(len(values))]
        path.write_text(
            "id,value\n" + "\n".join(f"{k},{v}" for k, v in zip(ids, values)) + "\n"
        )

    def test_self_agreement(self, tmp_path):
        a = tmp_path / "a.csv"
        self._write_series(a, [4.1, 4.5, 3.9, 5.2, 4.8, 4.4])
        rc = main(["evaluate", str(a), str(a), "--out", str(tmp_path / "ev")])
        assert rc == 0
        report = json.loads((tmp_path / "ev" / "agreement.json").read_text())
        assert report["mean_error"] == 0.0
        assert report["icc"] == pytest.approx(1.0)
        assert report["bland_altman_bias"] == 0.0

    def test_outputs_bland_altman_artifacts(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        self._write_series(a, [4.1, 4.5, 3.9, 5.2, 4.8, 4.4])
        self._write_series(b, [4.3, 4.4, 4.0, 5.0, 5.1, 4.3])
        rc = main(["evaluate", str(a), str(b), "--out", str(tmp_path / "ev")])
        assert rc == 0
        assert (tmp_path / "ev" / "bland_altman.csv").exists()
        assert (tmp_path / "ev" / "bland_altman.svg").exists()

    def test_id_mismatch_names_ids(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        self._write_series(a, [1.0, 2.0], ids=["x", "y"])
        self._write_series(b, [1.0, 2.0], ids=["x", "z"])
        rc = main(["evaluate", str(a), str(b), "--out", str(tmp_path / "ev")])
        assert rc == 2
        err = capsys.readouterr().err
        assert "y" in err and "z" in err

    def test_missing_file_is_input_error(self, tmp_path):
        a = tmp_path / "a.csv"
        self._write_series(a, [1.0, 2.0])
        rc = main(["evaluate", str(a), str(tmp_path / "absent.csv"),
                   "--out", str(tmp_path / "ev")])
        assert rc == 2
