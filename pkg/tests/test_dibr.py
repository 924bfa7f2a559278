import numpy as np
import pytest

from zw3d.dibr import BaselineConfig, synthesize_clip, synthesize_views
from zw3d.frameio import FrameSequence


def test_zero_disparity_is_identity():
    rng = np.random.default_rng(0)
    frame = rng.integers(0, 256, size=(32, 48), dtype=np.uint8)
    depth = np.full((32, 48), 0.5)
    cfg = BaselineConfig(baseline_fraction=0.05, convergence_depth=0.5)
    left, right = synthesize_views(frame, depth, cfg)
    np.testing.assert_array_equal(left, frame)
    np.testing.assert_array_equal(right, frame)


def test_disparity_magnitude():
    # w=320, baseline 5%, depth 1.0, convergence 0.5 -> shift of 4 columns
    rng = np.random.default_rng(1)
    frame = rng.integers(0, 256, size=(16, 320), dtype=np.uint8)
    depth = np.ones((16, 320))
    cfg = BaselineConfig(baseline_fraction=0.05, convergence_depth=0.5)
    left, right = synthesize_views(frame, depth, cfg)
    np.testing.assert_array_equal(left[:, 4:], frame[:, :-4])
    np.testing.assert_array_equal(right[:, :-4], frame[:, 4:])


def test_foreground_column_hand_traced():
    # flat background at depth 0.5 (zero disparity), one bright foreground
    # column at depth 1.0 with disparity +2 in the left view
    w = 8
    frame = np.full((8, w), 10, dtype=np.uint8)
    frame[:, 3] = 200
    depth = np.full((8, w), 0.5)
    depth[:, 3] = 1.0
    cfg = BaselineConfig(baseline_fraction=0.1, convergence_depth=0.5)
    # half-baseline 0.4 px/unit-depth * w -> round(0.1*8/2 * 0.5) = round(0.2)=0
    # use a wider synthetic width for a visible shift instead:
    w = 40
    frame = np.full((8, w), 10, dtype=np.uint8)
    frame[:, 20] = 200
    depth = np.full((8, w), 0.5)
    depth[:, 20] = 1.0
    left, right = synthesize_views(frame, depth, cfg)
    shift = round(0.1 * w / 2 * 0.5)
    assert shift == 1
    # foreground moved right by 1 in the left view, hole backfilled with 10
    assert left[0, 21] == 200 and left[0, 20] == 10 and left[0, 19] == 10
    # and left by 1 in the right view
    assert right[0, 19] == 200 and right[0, 20] == 10


def test_nearer_pixel_wins_occlusion():
    w = 40
    frame = np.full((4, w), 10, dtype=np.uint8)
    frame[:, 20] = 200  # foreground, depth 1.0, shifts +1 in left view
    frame[:, 21] = 99   # background pixel it collides with
    depth = np.full((4, w), 0.5)
    depth[:, 20] = 1.0
    cfg = BaselineConfig(baseline_fraction=0.1, convergence_depth=0.5)
    left, _ = synthesize_views(frame, depth, cfg)
    assert left[0, 21] == 200  # foreground overwrote the background pixel


def test_rows_stay_independent():
    rng = np.random.default_rng(2)
    frame = rng.integers(0, 256, size=(12, 64), dtype=np.uint8)
    depth = rng.random((12, 64))
    cfg = BaselineConfig(baseline_fraction=0.07)
    left, right = synthesize_views(frame, depth, cfg)
    for view in (left, right):
        for i in range(12):
            assert set(np.unique(view[i])) <= set(np.unique(frame[i]))
    # changing one row changes only that row
    frame2 = frame.copy()
    frame2[5] = rng.integers(0, 256, size=64, dtype=np.uint8)
    left2, _ = synthesize_views(frame2, depth, cfg)
    rows_changed = [i for i in range(12) if not (left2[i] == left[i]).all()]
    assert rows_changed == [5]


def test_color_frames_supported():
    rng = np.random.default_rng(3)
    frame = rng.integers(0, 256, size=(16, 32, 3), dtype=np.uint8)
    depth = np.full((16, 32), 0.5)
    cfg = BaselineConfig(baseline_fraction=0.05)
    left, right = synthesize_views(frame, depth, cfg)
    np.testing.assert_array_equal(left, frame)
    np.testing.assert_array_equal(right, frame)


def test_size_mismatch_rejected():
    cfg = BaselineConfig(baseline_fraction=0.05)
    with pytest.raises(ValueError, match="sizes differ"):
        synthesize_views(np.zeros((8, 8), dtype=np.uint8), np.zeros((8, 9)), cfg)


def test_vanishing_baseline_is_identity():
    rng = np.random.default_rng(7)
    frame = rng.integers(0, 256, size=(24, 40), dtype=np.uint8)
    depth = rng.random((24, 40))
    left, right = synthesize_views(frame, depth, BaselineConfig(baseline_fraction=1e-9))
    np.testing.assert_array_equal(left, frame)
    np.testing.assert_array_equal(right, frame)


def test_baseline_validation():
    with pytest.raises(ValueError):
        BaselineConfig(baseline_fraction=0.0)
    with pytest.raises(ValueError):
        BaselineConfig(baseline_fraction=0.2)
    with pytest.raises(ValueError):
        BaselineConfig(baseline_fraction=0.05, convergence_depth=1.5)


def test_synthesize_clip_constant_depth():
    rng = np.random.default_rng(4)
    frames = [rng.integers(0, 256, size=(16, 24), dtype=np.uint8) for _ in range(10)]
    depths = [np.full((16, 24), 128, dtype=np.uint8) for _ in range(10)]
    seq2d = FrameSequence(frames=frames, role="2d")
    seqdep = FrameSequence(frames=depths, role="depth")
    cfg = BaselineConfig(baseline_fraction=0.05, convergence_depth=128 / 255)
    left, right = synthesize_clip(seq2d, seqdep, cfg)
    assert left.role == right.role == "synthesized"
    assert len(left) == len(right) == 10
    for a, b in zip(left.frames, frames):
        np.testing.assert_array_equal(a, b)


def test_synthesize_clip_count_mismatch():
    rng = np.random.default_rng(5)
    seq2d = FrameSequence(frames=[rng.integers(0, 256, (8, 8), dtype=np.uint8)] * 3, role="2d")
    seqdep = FrameSequence(frames=[np.zeros((8, 8), dtype=np.uint8)] * 4, role="depth")
    with pytest.raises(ValueError, match="frame-count mismatch"):
        synthesize_clip(seq2d, seqdep, BaselineConfig(0.05))


def test_two_baselines_make_four_distinct_sequences():
    rng = np.random.default_rng(6)
    frames = [rng.integers(0, 256, size=(32, 64), dtype=np.uint8) for _ in range(4)]
    depth_img = np.clip(np.rint(rng.random((32, 64)) * 255), 0, 255).astype(np.uint8)
    depths = [depth_img for _ in range(4)]
    seq2d = FrameSequence(frames=frames, role="2d")
    seqdep = FrameSequence(frames=depths, role="depth")
    outs = []
    for baseline in (0.05, 0.07):
        left, right = synthesize_clip(seq2d, seqdep, BaselineConfig(baseline))
        outs.extend([left, right])
    assert len(outs) == 4
    blobs = [b"".join(f.tobytes() for f in seq.frames) for seq in outs]
    assert len(set(blobs)) == 4
