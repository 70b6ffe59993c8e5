from dataclasses import replace

import numpy as np
import pytest

from gfsdcf.errors import ConfigError, InputError, SequenceIOError
from gfsdcf.features import FeatureSpec
from gfsdcf.solver import RegularisationConfig, SelectionConfig, spatial_group_attributes
from gfsdcf.tensor import circ_correlate
from gfsdcf.tracker import (BoundingBox, TrackerConfig, clip_box, detect, init, learn, signed_offset,
                            stacked_history, track_sequence)

# box side 25.6 px -> 64 px window -> 2 px per cell on the default 32-cell grid
BOX = BoundingBox.from_centre(80.0, 80.0, 25.6, 25.6)
SINGLE = dict(scale_factors=(1.0,))


def _textured(ox=0, oy=0, seed=0):
    tex = np.random.default_rng(seed).uniform(0, 255, (20, 20))
    f = np.full((160, 160), 60.0)
    f[70 + oy:90 + oy, 70 + ox:90 + ox] = tex
    return f


def _blob(cx, cy, size, shape=(128, 128)):
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]] + 0.5
    return 40.0 + 180.0 * np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * (size / 4) ** 2))


def test_box_validation():
    with pytest.raises(InputError):
        BoundingBox(0, 0, 0, 5)
    assert BoundingBox.from_centre(10, 20, 4, 6).centre == (10, 20)


def test_signed_offset():
    assert [signed_offset(i, 8) for i in range(8)] == [0, 1, 2, 3, 4, -3, -2, -1]
    assert [signed_offset(i, 5) for i in range(5)] == [0, 1, 2, -2, -1]


def test_self_detection_has_no_displacement():
    frame = _blob(64, 64, 16)
    state = init(frame, BoundingBox.from_centre(64, 64, 16, 16), TrackerConfig())
    box, resp = detect(state, frame)
    assert resp.peak == (0, 0)
    assert np.allclose(box.centre, (64, 64), atol=1e-9)
    assert resp.scale_index == 1


def test_partially_outside_box_is_clipped():
    state = init(_blob(5, 5, 16), BoundingBox(-6, -6, 20, 20), TrackerConfig())
    assert (state.box.x, state.box.y, state.box.w, state.box.h) == (0, 0, 14, 14)
    with pytest.raises(InputError):
        clip_box(BoundingBox(500, 500, 10, 10), (64, 64))


def test_degenerate_box_is_rejected():
    with pytest.raises(InputError):
        init(_blob(64, 64, 16), BoundingBox(60, 60, 1.5, 10), TrackerConfig())


def test_baseline_filter_has_no_pruned_groups():
    frame = _blob(64, 64, 16)
    box = BoundingBox.from_centre(64, 64, 16, 16)
    base = init(frame, box, TrackerConfig(variant="baseline"))
    full = init(frame, box, TrackerConfig(variant="all"))
    assert base.model_filter.shape == full.model_filter.shape
    assert base.last_mask.channel_keep.all() and base.last_mask.spatial_keep.all()
    assert np.all(spatial_group_attributes(base.model_filter) > 0)
    assert not full.last_mask.spatial_keep.all()
    assert np.any(spatial_group_attributes(full.model_filter) == 0)


def test_two_cell_shift_is_recovered():
    for variant in ("baseline", "all"):
        state = init(_textured(), BOX, TrackerConfig(variant=variant, **SINGLE))
        box, resp = detect(state, _textured(ox=4))
        assert [signed_offset(v, state.grid) for v in resp.peak] == [0, 2]
        assert abs(box.centre[0] - 84.0) < 0.5 and abs(box.centre[1] - 80.0) < 0.5


def test_static_target_stays_put():
    frame = _textured()
    result = track_sequence([frame] * 4, BOX, TrackerConfig(subcell=False, **SINGLE))
    assert [b.as_list() for b in result.boxes] == [BOX.as_list()] * 4


def test_static_target_subcell_jitter_is_small():
    result = track_sequence([_textured()] * 4, BOX, TrackerConfig(**SINGLE))
    for b in result.boxes:
        assert np.hypot(*np.subtract(b.centre, BOX.centre)) < 0.25


def test_response_argmax_follows_circular_shift():
    rng = np.random.default_rng(3)
    x, w = rng.standard_normal((16, 16, 3)), rng.standard_normal((16, 16, 3))
    base = np.unravel_index(np.argmax(circ_correlate(x, w)), (16, 16))
    for di, dj in ((1, 0), (3, -5), (-7, 2)):
        shifted = np.roll(x, (di, dj), axis=(0, 1))
        peak = np.unravel_index(np.argmax(circ_correlate(shifted, w)), (16, 16))
        assert peak == ((base[0] + di) % 16, (base[1] + dj) % 16)


def test_scale_search_picks_the_grown_target():
    # pure maximal-response comparison: no margin in favour of the unit scale
    cfg = TrackerConfig(variant="baseline", scale_penalty=1.0)
    rng = np.random.default_rng(0)
    hits = 0
    for _ in range(50):
        cx, cy = rng.uniform(50, 78, 2)
        size = rng.uniform(14, 22)
        state = init(_blob(cx, cy, size), BoundingBox.from_centre(cx, cy, size, size), cfg)
        _, resp = detect(state, _blob(cx, cy, size * 1.02))
        hits += cfg.scale_factors[resp.scale_index] == 1.02
    assert hits >= 48


def test_zero_rate_keeps_the_model():
    frame = _blob(64, 64, 16)
    state = init(frame, BoundingBox.from_centre(64, 64, 16, 16), TrackerConfig(alpha=0.0))
    after = learn(state, _blob(66, 64, 16))
    np.testing.assert_array_equal(after.model_filter, state.model_filter)
    assert after.frame_index == 2


def test_dominant_temporal_anchor_freezes_the_filter():
    frame = _blob(64, 64, 16)
    state = init(frame, BoundingBox.from_centre(64, 64, 16, 16), TrackerConfig(variant="lr"))
    anchored = TrackerConfig(variant="lr", regularisation=RegularisationConfig(lambda_temporal=1e6))
    after = learn(replace(state, cfg=anchored), frame)
    diff = np.linalg.norm(after.prev_filter - state.prev_filter) / np.linalg.norm(state.prev_filter)
    assert diff < 1e-2


def test_filter_history_columns():
    frames = [_blob(60 + 2 * k, 64, 16) for k in range(3)]
    result = track_sequence(frames, BoundingBox.from_centre(60, 64, 16, 16), TrackerConfig(keep_history=True))
    hist = stacked_history(result.filter_history)
    assert hist.shape == (32 * 32 * 21, 3)


def test_one_frame_sequence_echoes_the_box():
    box = BoundingBox(50.3, 40.1, 16, 17)
    result = track_sequence([_blob(58, 48, 16)], box, TrackerConfig())
    assert result.boxes == [box]
    assert np.isnan(result.peak_values[0])
    assert len(result.channel_masks) == 1


def test_tracking_is_deterministic():
    frames = [_blob(50 + k, 60 + 0.5 * k, 16) for k in range(5)]
    box = BoundingBox.from_centre(50, 60, 16, 16)
    a = track_sequence(frames, box, TrackerConfig())
    b = track_sequence(frames, box, TrackerConfig())
    assert [x.as_list() for x in a.boxes] == [x.as_list() for x in b.boxes]
    assert a.final_filter.tobytes() == b.final_filter.tobytes()


def test_baseline_equals_all_without_penalties():
    frames = [_blob(50 + k, 60 - k, 16) for k in range(4)]
    box = BoundingBox.from_centre(50, 60, 16, 16)
    base = track_sequence(frames, box, TrackerConfig(variant="baseline"))
    off = TrackerConfig(variant="all", regularisation=RegularisationConfig(0.0, 0.0, 0.0),
                        selection=SelectionConfig(1.0, 1.0))
    full = track_sequence(frames, box, off)
    assert [x.as_list() for x in base.boxes] == [x.as_list() for x in full.boxes]
    assert base.final_filter.tobytes() == full.final_filter.tobytes()


def test_lazy_decoder_failure_names_the_frame():
    def broken():
        raise ValueError("truncated file")

    with pytest.raises(SequenceIOError, match="frame 2"):
        track_sequence([_blob(64, 64, 16), broken], BoundingBox.from_centre(64, 64, 16, 16), TrackerConfig())


def test_empty_sequence():
    with pytest.raises(InputError):
        track_sequence([], BOX, TrackerConfig())


def test_external_features_need_a_map():
    cfg = TrackerConfig(features=FeatureSpec(feature_types=("external",), cell_size=4))
    fmap = np.random.default_rng(0).standard_normal((32, 32, 5))
    state = init(np.zeros((128, 128)), BoundingBox.from_centre(64, 64, 16, 16), cfg, fmap)
    assert state.model_filter.shape == (10, 10, 5)
    with pytest.raises(InputError):
        detect(state, np.zeros((128, 128)))


@pytest.mark.parametrize("kwargs", [
    dict(variant="fancy"),
    dict(scale_factors=(0.98, 1.02)),
    dict(alpha=1.5),
    dict(scale_penalty=0.0),
    dict(model_side=63),
])
def test_config_validation(kwargs):
    with pytest.raises(ConfigError):
        TrackerConfig(**kwargs)
