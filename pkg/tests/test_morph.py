from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pmgan.morph import (
    LabelMap,
    MorphConfig,
    MorphError,
    MorphFileError,
    MorphMap,
    MorphShapeError,
    SamplingGrid,
    bilinear_sample,
    compose_grid,
    identity_grid,
    lerp_maps,
    load_morph_map,
    morph_features,
    normalize_map,
    offset_map,
    positional_encoding,
    resize_field,
    resize_grid,
    save_morph_map,
    segment_onehot_warp,
    warp_labels,
)
from pmgan.numeric import Tensor


def _shift_map(height: int, width: int, pixels: float) -> MorphMap:
    """Constant horizontal displacement of `pixels` source pixels."""
    values = np.zeros((height, width, 2))
    values[..., 0] = pixels * 2.0 / (width - 1)
    return MorphMap(Tensor(values))


def test_identity_grid_corners():
    grid = identity_grid(3, 5).values.data
    assert grid.shape == (3, 5, 2)
    np.testing.assert_array_equal(grid[0, 0], [-1.0, -1.0])
    np.testing.assert_array_equal(grid[-1, -1], [1.0, 1.0])
    np.testing.assert_allclose(grid[1, 2], [0.0, 0.0])


@pytest.mark.parametrize("size", [(1, 4), (4, 1), (0, 0)])
def test_identity_grid_needs_two_pixels_per_side(size):
    with pytest.raises(MorphShapeError):
        identity_grid(*size)


def test_field_shape_is_validated():
    with pytest.raises(MorphShapeError):
        MorphMap(Tensor(np.zeros((4, 4, 3))))
    with pytest.raises(MorphShapeError):
        SamplingGrid(Tensor(np.zeros((4, 2))))


def test_zero_map_is_exact_identity():
    source = Tensor(np.random.default_rng(0).standard_normal((2, 3, 6, 7)))
    out = morph_features(source, MorphMap.zeros(6, 7, batch=2))
    np.testing.assert_array_equal(out.data, source.data)


def test_constant_shift_moves_content_by_whole_pixels():
    source = Tensor(np.arange(25.0).reshape(1, 1, 5, 5))
    out = morph_features(source, _shift_map(5, 5, 1.0)).data[0, 0]
    np.testing.assert_array_equal(out[:, :-1], source.data[0, 0, :, 1:])
    np.testing.assert_array_equal(out[:, -1], np.zeros(5))


def test_coarse_map_is_resized_to_the_feature_level():
    source = Tensor(np.random.default_rng(1).standard_normal((1, 2, 8, 8)))
    out = morph_features(source, MorphMap.zeros(4, 4))
    np.testing.assert_allclose(out.data, source.data, atol=1e-6)


def test_bilinear_sample_rejects_mismatched_grid():
    with pytest.raises(MorphShapeError):
        bilinear_sample(Tensor(np.zeros((1, 4, 4))), identity_grid(3, 3))
    with pytest.raises(MorphShapeError):
        bilinear_sample(Tensor(np.zeros((4, 4))), identity_grid(4, 4))


def test_bilinear_sample_midpoint_averages_neighbours():
    source = Tensor(np.array([[[0.0, 2.0], [4.0, 6.0]]]))
    grid = SamplingGrid(Tensor(np.zeros((2, 2, 2))))
    out = bilinear_sample(source, grid)
    np.testing.assert_allclose(out.data, np.full((1, 2, 2), 3.0))


def test_normalize_map_scales_tanh_by_eta():
    morph = normalize_map(Tensor(np.ones((1, 1, 2))), MorphConfig(eta=3.0))
    np.testing.assert_allclose(morph.values.data, math.tanh(1.0) / 3.0, rtol=1e-6)
    assert morph.values.data[0, 0, 0] == pytest.approx(0.25389, abs=1e-5)


def test_saturated_map_stays_strictly_inside_bound():
    morph = normalize_map(Tensor(np.full((2, 2, 2), 50.0)), MorphConfig(eta=3.0))
    assert morph.within_bounds()
    assert morph.max_displacement() == pytest.approx(1 / 3, rel=1e-6)


@pytest.mark.parametrize("eta", [3.0, 2.0, 7.0])
def test_saturated_scale_is_within_one_ulp_of_the_bound(eta):
    peak = normalize_map(Tensor(np.full((1, 1, 2), 50.0)), MorphConfig(eta=eta)).values.data[0, 0, 0]
    assert peak < 1.0 / eta
    assert 1.0 / eta - float(peak) <= np.spacing(np.float32(1.0 / eta))

@settings(max_examples=40, deadline=None)
@given(
    raw=arrays(np.float64, (3, 3, 2), elements=st.floats(-1e3, 1e3)),
    eta=st.floats(0.5, 10.0),
)
def test_normalized_maps_are_always_bounded(raw, eta):
    assert normalize_map(Tensor(raw), MorphConfig(eta=eta)).within_bounds()


def test_select_needs_batched_map():
    with pytest.raises(MorphShapeError):
        MorphMap.zeros(4, 4).select(0)
    batch = MorphMap.zeros(4, 4, batch=3)
    assert batch.batched
    assert batch.select(2).values.shape == (4, 4, 2)


def test_compose_grid_adds_displacement():
    grid = compose_grid(identity_grid(4, 4), _shift_map(4, 4, 1.0))
    np.testing.assert_allclose(grid.values.data[0, 0], [-1 + 2 / 3, -1.0], rtol=1e-6)
    with pytest.raises(MorphShapeError):
        compose_grid(identity_grid(4, 4), MorphMap.zeros(5, 5))


def test_lerp_maps_endpoints():
    a = MorphMap(Tensor(np.full((2, 2, 2), 0.1)))
    b = MorphMap(Tensor(np.full((2, 2, 2), -0.2)))
    np.testing.assert_array_equal(lerp_maps(a, b, 0.0).values.data, a.values.data)
    np.testing.assert_array_equal(lerp_maps(a, b, 1.0).values.data, b.values.data)
    np.testing.assert_allclose(lerp_maps(a, b, 0.5).values.data, -0.05, rtol=1e-6)


@pytest.mark.parametrize("t", [-0.1, 1.5])
def test_lerp_maps_rejects_weights_outside_unit_interval(t):
    a = MorphMap.zeros(2, 2)
    with pytest.raises(MorphError):
        lerp_maps(a, a, t)


def test_lerp_maps_rejects_mismatched_shapes():
    with pytest.raises(MorphShapeError):
        lerp_maps(MorphMap.zeros(2, 2), MorphMap.zeros(3, 3), 0.5)


def test_offset_map_peaks_at_centre():
    morph = offset_map(MorphMap.zeros(5, 5), (0.0, 0.0), (0.2, -0.1), 0.3)
    np.testing.assert_allclose(morph.values.data[2, 2], [0.2, -0.1], rtol=1e-6)
    assert abs(morph.values.data[0, 0, 0]) < 0.2


def test_offset_map_is_clamped_and_may_exceed_eta():
    morph = offset_map(MorphMap.zeros(3, 3), (0.0, 0.0), (5.0, 0.0), 10.0)
    assert morph.max_displacement() == pytest.approx(1.0)
    assert not morph.within_bounds()


def test_offset_map_rejects_non_positive_sigma():
    with pytest.raises(MorphError):
        offset_map(MorphMap.zeros(3, 3), (0.0, 0.0), (0.1, 0.1), 0.0)


def test_resize_identity_grid_stays_identity():
    resized = resize_grid(identity_grid(4, 4), 9, 7)
    np.testing.assert_allclose(resized.values.data, identity_grid(9, 7).values.data, atol=1e-6)


def test_resize_constant_map_keeps_value():
    morph = MorphMap(Tensor(np.full((4, 4, 2), 0.125)), eta=4.0)
    resized = resize_grid(morph, 8, 8)
    assert resized.eta == 4.0
    np.testing.assert_allclose(resized.values.data, 0.125, rtol=1e-6)


def test_resize_field_handles_batches():
    values = Tensor(np.zeros((3, 4, 4, 2)))
    assert resize_field(values, 8, 6).shape == (3, 8, 6, 2)


def test_resize_grid_rejects_tiny_targets():
    with pytest.raises(MorphShapeError):
        resize_grid(identity_grid(4, 4), 1, 4)


def test_warp_labels_with_zero_map_is_identity():
    labels = LabelMap(np.random.default_rng(2).integers(0, 4, (6, 6)), 4)
    assert warp_labels(labels, MorphMap.zeros(3, 3)) == labels
    assert segment_onehot_warp(labels, MorphMap.zeros(6, 6)) == labels


def test_warp_labels_shift_and_background_fill():
    labels = LabelMap(np.tile(np.arange(1, 6), (5, 1)), 6)
    warped = warp_labels(labels, _shift_map(5, 5, 1.0)).labels
    np.testing.assert_array_equal(warped[0], [2, 3, 4, 5, 0])


def _smooth_map(rng: np.random.Generator, size: int) -> MorphMap:
    axis = np.linspace(-1.0, 1.0, size)
    x, y = np.meshgrid(axis, axis)
    channels = []
    for _ in range(2):
        fx, fy = rng.uniform(-1.5, 1.5, size=2)
        phase = rng.uniform(0.0, 2 * math.pi)
        channels.append(0.25 * np.sin(math.pi * (fx * x + fy * y) + phase))
    return MorphMap(Tensor(np.stack(channels, axis=-1)))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_warp_labels_agrees_with_onehot_warp_on_smooth_maps(seed):
    size = 32
    rng = np.random.default_rng(seed)
    rows, cols = np.indices((size, size))
    labels = LabelMap(1 + cols // 8 + 4 * (rows // 16), 9)
    morph = _smooth_map(rng, size)

    offset = morph.values.data.astype(np.float64)
    px = cols + offset[..., 0] * (size - 1) / 2
    py = rows + offset[..., 1] * (size - 1) / 2
    inside = (px >= 0) & (px <= size - 1) & (py >= 0) & (py <= size - 1)
    ties = (np.abs(np.mod(px, 1.0) - 0.5) < 1e-3) | (np.abs(np.mod(py, 1.0) - 0.5) < 1e-3)
    counted = inside & ~ties

    nearest = warp_labels(labels, morph).labels
    onehot = segment_onehot_warp(labels, morph).labels
    assert np.mean(nearest[counted] == onehot[counted]) >= 0.95


def test_warp_labels_needs_one_map():
    labels = LabelMap(np.zeros((4, 4), dtype=int), 1)
    assert warp_labels(labels, MorphMap.zeros(4, 4, batch=1)) == labels
    with pytest.raises(MorphShapeError):
        warp_labels(labels, MorphMap.zeros(4, 4, batch=2))


def test_label_map_validates_ids():
    with pytest.raises(MorphShapeError):
        LabelMap(np.array([[0, 3]]), 3)
    with pytest.raises(MorphShapeError):
        LabelMap(np.zeros(4, dtype=int), 2)


def test_positional_encoding_layout():
    pe = positional_encoding(3, 4, 8).data
    assert pe.shape == (8, 3, 4)
    np.testing.assert_allclose(pe[0, :, 0], 0.0, atol=1e-7)
    np.testing.assert_allclose(pe[1, :, 0], 1.0)
    np.testing.assert_allclose(pe[0, 0, 1], math.sin(1.0), rtol=1e-6)
    np.testing.assert_allclose(pe[2, 2, :], math.sin(2.0 / 10000 ** (4 / 8)), rtol=1e-6)


def test_positional_encoding_needs_multiple_of_four():
    with pytest.raises(MorphShapeError):
        positional_encoding(4, 4, 6)


def test_morph_map_file_and_sidecar(tmp_path):
    path = tmp_path / "map.pmt"
    morph = offset_map(MorphMap.zeros(4, 5, eta=2.0), (0.0, 0.0), (0.1, 0.2), 0.5)
    save_morph_map(path, morph)
    assert json.loads((tmp_path / "map.pmt.json").read_text()) == {"eta": 2.0, "order": "dxdy"}
    loaded = load_morph_map(path)
    assert loaded.eta == 2.0
    np.testing.assert_array_equal(loaded.values.data, morph.values.data)


def test_batched_map_cannot_be_saved(tmp_path):
    with pytest.raises(MorphFileError):
        save_morph_map(tmp_path / "map.pmt", MorphMap.zeros(4, 4, batch=2))


def test_load_morph_map_without_sidecar(tmp_path):
    path = tmp_path / "map.pmt"
    save_morph_map(path, MorphMap.zeros(4, 4))
    (tmp_path / "map.pmt.json").unlink()
    with pytest.raises(MorphFileError):
        load_morph_map(path)


def _naive_bilinear(source: np.ndarray, grid: np.ndarray) -> np.ndarray:
    channels, height, width = source.shape
    out = np.zeros((channels, *grid.shape[:2]))
    for i in range(grid.shape[0]):
        for j in range(grid.shape[1]):
            px = (grid[i, j, 0] + 1.0) * (width - 1) / 2
            py = (grid[i, j, 1] + 1.0) * (height - 1) / 2
            x0, y0 = math.floor(px), math.floor(py)
            for y in (y0, y0 + 1):
                for x in (x0, x0 + 1):
                    if 0 <= x < width and 0 <= y < height:
                        weight = (1 - abs(px - x)) * (1 - abs(py - y))
                        out[:, i, j] += weight * source[:, y, x]
    return out


def test_bilinear_sample_matches_naive_gather():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        source = Tensor(rng.standard_normal((2, 8, 8)))
        grid = SamplingGrid(Tensor(rng.uniform(-1.1, 1.1, size=(8, 8, 2))))
        expected = _naive_bilinear(source.data.astype(np.float64), grid.values.data.astype(np.float64))
        np.testing.assert_allclose(bilinear_sample(source, grid).data, expected, atol=1e-5, err_msg=f"seed {seed}")
