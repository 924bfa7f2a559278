import contextlib
import csv
import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from zw3d.cli import main
from zw3d.frameio import load_clip, write_pbm


def run_cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = main([str(a) for a in argv])
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli_corpus")
    code, out, _ = run_cli("gen-corpus", "--out", root / "clips", "--clips", 3,
                           "--frames", 12, "--size", 48, "--seed", 5)
    assert code == 0
    return root / "clips"


@pytest.fixture(scope="module")
def registered(corpus, tmp_path_factory):
    db = tmp_path_factory.mktemp("cli_db") / "reg.zw3d"
    for i in range(3):
        clip = corpus / f"clip{i:03d}"
        code, out, err = run_cli(
            "register", "--db", db, "--id", f"clip{i:03d}",
            "--clip-2d", clip / "2d", "--clip-depth", clip / "depth",
            "--watermark-2d", clip / "watermark_2d.pbm",
            "--watermark-depth", clip / "watermark_depth.pbm",
        )
        assert code == 0, err
        assert out.strip() == str(i + 1)
    return db


@pytest.fixture(scope="module")
def thresholds_csv(registered, tmp_path_factory):
    out_csv = tmp_path_factory.mktemp("cli_cal") / "thresholds.csv"
    code, _, err = run_cli("calibrate", "--db", registered, "--target-pfp", 0.01,
                           "--out", out_csv)
    assert code == 0, err
    return out_csv


def test_gen_corpus_layout_and_determinism(tmp_path):
    code, _, _ = run_cli("gen-corpus", "--out", tmp_path / "a", "--clips", 1,
                         "--frames", 6, "--size", 32, "--seed", 9)
    assert code == 0
    code, _, _ = run_cli("gen-corpus", "--out", tmp_path / "b", "--clips", 1,
                         "--frames", 6, "--size", 32, "--seed", 9)
    assert code == 0
    a = (tmp_path / "a/clip000/2d/frame_000003.pgm").read_bytes()
    b = (tmp_path / "b/clip000/2d/frame_000003.pgm").read_bytes()
    assert a == b
    assert (tmp_path / "a/clip000/depth/frame_000000.pgm").exists()
    assert (tmp_path / "a/clip000/watermark_2d.pbm").exists()


def test_register_duplicate_exit_2(corpus, registered):
    clip = corpus / "clip000"
    code, _, err = run_cli(
        "register", "--db", registered, "--id", "clip000",
        "--clip-2d", clip / "2d", "--clip-depth", clip / "depth",
        "--watermark-2d", clip / "watermark_2d.pbm",
        "--watermark-depth", clip / "watermark_depth.pbm",
    )
    assert code == 2
    assert "already registered" in err


def test_register_bad_watermark_exit_4(corpus, tmp_path):
    clip = corpus / "clip000"
    bad = tmp_path / "bad.pbm"
    write_pbm(bad, np.zeros((10, 10), dtype=np.uint8))
    code, _, err = run_cli(
        "register", "--db", tmp_path / "x.zw3d", "--id", "z",
        "--clip-2d", clip / "2d", "--clip-depth", clip / "depth",
        "--watermark-2d", bad, "--watermark-depth", bad,
    )
    assert code == 4


def test_register_missing_dir_exit_3(corpus, tmp_path):
    clip = corpus / "clip000"
    code, _, _ = run_cli(
        "register", "--db", tmp_path / "x.zw3d", "--id", "z",
        "--clip-2d", tmp_path / "missing", "--clip-depth", clip / "depth",
        "--watermark-2d", clip / "watermark_2d.pbm",
        "--watermark-depth", clip / "watermark_depth.pbm",
    )
    assert code == 3


def test_calibrate_report(thresholds_csv):
    with open(thresholds_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["threshold"] for r in rows] == ["t_2d", "t_depth", "t_fusion"]
    assert all(float(r["value"]) > 0 for r in rows)


def test_query_self_match(corpus, registered, thresholds_csv):
    clip = corpus / "clip001"
    code, out, _ = run_cli(
        "query", "--db", registered, "--clip-2d", clip / "2d",
        "--clip-depth", clip / "depth", "--mode", "fused",
        "--thresholds", thresholds_csv,
    )
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows[0]["record_id"] == "clip001"
    assert float(rows[0]["d_fused"]) == 0.0
    assert rows[0]["decision"] == "match-fused"


def test_query_unrelated_clip_no_match(registered, thresholds_csv, tmp_path):
    run_cli("gen-corpus", "--out", tmp_path / "other", "--clips", 1,
            "--frames", 12, "--size", 48, "--seed", 777)
    clip = tmp_path / "other/clip000"
    code, out, _ = run_cli(
        "query", "--db", registered, "--clip-2d", clip / "2d",
        "--clip-depth", clip / "depth", "--mode", "independent",
        "--thresholds", thresholds_csv,
    )
    assert code == 1
    assert len(out.strip().splitlines()) == 1  # header only


def test_query_thresholds_from_config(corpus, registered, tmp_path):
    cfg = tmp_path / "zw3d.conf"
    cfg.write_text("t_2d = 0.5\nt_depth = 0.5\nt_fusion = 0.5\ngamma = 0.1\n")
    clip = corpus / "clip002"
    code, out, _ = run_cli(
        "--config", cfg, "query", "--db", registered, "--clip-2d", clip / "2d",
        "--clip-depth", clip / "depth",
    )
    assert code == 0
    assert "clip002" in out


def test_query_missing_thresholds_exit_4(corpus, registered):
    clip = corpus / "clip000"
    code, _, err = run_cli(
        "query", "--db", registered, "--clip-2d", clip / "2d",
        "--clip-depth", clip / "depth",
    )
    assert code == 4
    assert "thresholds" in err


def test_identify_round_trip(corpus, registered, tmp_path):
    clip = corpus / "clip000"
    code, out, err = run_cli(
        "identify", "--db", registered, "--clip-2d", clip / "2d",
        "--clip-depth", clip / "depth", "--id", "clip000",
        "--out-dir", tmp_path / "rec",
    )
    assert code == 0, err
    row = list(csv.DictReader(io.StringIO(out)))[0]
    assert float(row["ber_2d"]) == 0.0
    assert float(row["ber_depth"]) == 0.0
    assert float(row["ber_fused"]) == 0.0
    assert (tmp_path / "rec/recovered_2d.pbm").exists()
    # recovered watermark equals the corpus watermark bit-for-bit
    from zw3d.shares import load_watermark

    got = load_watermark(tmp_path / "rec/recovered_2d.pbm")
    want = load_watermark(clip / "watermark_2d.pbm")
    np.testing.assert_array_equal(got, want)


def test_identify_auto_chains_query(corpus, registered, thresholds_csv, tmp_path):
    clip = corpus / "clip001"
    code, out, _ = run_cli(
        "identify", "--db", registered, "--clip-2d", clip / "2d",
        "--clip-depth", clip / "depth", "--auto", "--mode", "fused",
        "--thresholds", thresholds_csv, "--out-dir", tmp_path / "rec2",
    )
    assert code == 0
    assert "clip001" in out


def test_identify_flipped_clip_zero_ber(corpus, registered, tmp_path):
    clip = corpus / "clip002"
    for role in ("2d", "depth"):
        code, _, _ = run_cli("attack", "--family", "fl", "--direction", "horizontal",
                             "--role", role, "--in", clip / role,
                             "--out", tmp_path / "flipped" / role)
        assert code == 0
    code, out, _ = run_cli(
        "identify", "--db", registered, "--clip-2d", tmp_path / "flipped/2d",
        "--clip-depth", tmp_path / "flipped/depth", "--id", "clip002",
        "--out-dir", tmp_path / "rec_fl",
    )
    assert code == 0
    row = list(csv.DictReader(io.StringIO(out)))[0]
    assert float(row["ber_2d"]) <= 1e-6
    assert float(row["ber_depth"]) <= 1e-6


def test_identify_unknown_id_exit_5(corpus, registered, tmp_path):
    clip = corpus / "clip000"
    code, _, err = run_cli(
        "identify", "--db", registered, "--clip-2d", clip / "2d",
        "--clip-depth", clip / "depth", "--id", "ghost",
        "--out-dir", tmp_path / "rec3",
    )
    assert code == 5


def test_attack_flip_twice_restores(corpus, tmp_path):
    src = corpus / "clip000/2d"
    code, _, _ = run_cli("attack", "--family", "fl", "--direction", "horizontal",
                         "--in", src, "--out", tmp_path / "f1")
    assert code == 0
    code, _, _ = run_cli("attack", "--family", "fl", "--direction", "horizontal",
                         "--in", tmp_path / "f1", "--out", tmp_path / "f2")
    assert code == 0
    orig = load_clip(src, "2d")
    back = load_clip(tmp_path / "f2", "2d")
    for a, b in zip(orig.frames, back.frames):
        np.testing.assert_array_equal(a, b)


def test_attack_missing_param_exit_4(corpus, tmp_path):
    code, _, err = run_cli("attack", "--family", "gb",
                           "--in", corpus / "clip000/2d", "--out", tmp_path / "o")
    assert code == 4
    assert "window" in err


def test_attack_missing_seed_exit_4(corpus, tmp_path):
    code, _, err = run_cli("attack", "--family", "gn", "--variance", 0.005,
                           "--in", corpus / "clip000/2d", "--out", tmp_path / "o")
    assert code == 4
    assert "seed" in err


def test_attack_gamma_transform_flag(corpus, tmp_path):
    code, _, _ = run_cli("attack", "--family", "gt", "--gamma", 0.6,
                         "--in", corpus / "clip000/2d", "--out", tmp_path / "gt")
    assert code == 0
    assert (tmp_path / "gt/frame_000000.pgm").exists()


def test_dibr_two_baselines_four_sequences(corpus, tmp_path):
    clip = corpus / "clip000"
    code, out, _ = run_cli(
        "dibr", "--clip-2d", clip / "2d", "--clip-depth", clip / "depth",
        "--out-dir", tmp_path / "views", "--baseline", 0.05, "--baseline", 0.07,
    )
    assert code == 0
    names = sorted(p.name for p in (tmp_path / "views").iterdir())
    assert names == ["left_05", "left_07", "right_05", "right_07"]
    for n in names:
        assert (tmp_path / "views" / n / "frame_000000.pgm").exists()


def test_eval_det_from_score_files(tmp_path):
    (tmp_path / "gen.txt").write_text("0.1\n0.2\n")
    (tmp_path / "imp.txt").write_text("0.8\n0.9\n# comment\n")
    code, _, _ = run_cli("eval-det", "--genuine", tmp_path / "gen.txt",
                         "--impostor", tmp_path / "imp.txt",
                         "--out", tmp_path / "det.csv")
    assert code == 0
    with open(tmp_path / "det.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[0]["pfp"]) == 0.0 and float(rows[0]["pfn"]) == 1.0
    assert float(rows[-1]["pfp"]) == 1.0 and float(rows[-1]["pfn"]) == 0.0


def test_eval_ber_over_attacked_corpus(corpus, registered, tmp_path):
    # build an attacked corpus for one cheap attack (horizontal flip)
    layout = tmp_path / "attacked"
    for i in range(3):
        cid = f"clip{i:03d}"
        for role in ("2d", "depth"):
            code, _, _ = run_cli("attack", "--family", "fl", "--direction", "horizontal",
                                 "--role", role,
                                 "--in", corpus / cid / role,
                                 "--out", layout / cid / "flh" / role)
            assert code == 0
    code, _, err = run_cli("eval-ber", "--db", registered, "--corpus-dir", layout,
                           "--out", tmp_path / "ber.csv")
    assert code == 0, err
    with open(tmp_path / "ber.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3  # one attack x three channels
    assert all(r["attack"] == "flh" for r in rows)
    for r in rows:
        assert float(r["mean_ber"]) <= 0.02  # flips are near-exact for features


def test_console_entry_point_runs():
    proc = subprocess.run([sys.executable, "-m", "zw3d", "--help"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "register" in proc.stdout
