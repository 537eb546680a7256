from __future__ import annotations

import numpy as np
import pytest
from attrs import evolve

from pmgan.bench import TINY_MODEL
from pmgan.model import (
    PARENT,
    ConvergenceError,
    ModelConfig,
    ModelError,
    PMGANModel,
    UnknownDomainError,
    edit_transfer,
    invert,
    load_model,
    mean_latent,
    save_model,
    sefa_directions,
    style_matrix,
    translate,
)
from pmgan.morph import SamplingGrid, bilinear_sample, identity_grid, positional_encoding
from pmgan.nn import Module
from pmgan.numeric import Tensor, no_record, ops


def test_desk_scale_defaults():
    config = ModelConfig()
    assert config.resolutions == (4, 8, 16, 32)
    assert config.channels == (64, 64, 32, 16)
    assert config.morph.eta == 3.0


def test_full_scale_plan():
    config = ModelConfig.full_scale()
    assert config.top_resolution == 256
    assert config.channels == (512, 512, 512, 512, 512, 256, 128)
    assert config.latent_dim == 512


@pytest.mark.parametrize(
    "overrides",
    [{"trunk_channels": 10}, {"shared_k": 5, "levels": 4}, {"levels": 0}, {"eta": 0.0}],
)
def test_inconsistent_configs_are_rejected(overrides):
    with pytest.raises(ValueError):
        ModelConfig(**overrides)


def test_inference_shapes(tiny_model):
    n = 3
    with no_record():
        out = tiny_model.infer(tiny_model.sample_latents(n, 0))
    size = tiny_model.image_size
    assert len(out.images) == tiny_model.num_domains + 1
    assert out.images[-1] is out.parent
    for image in out.images:
        assert image.shape == (n, 3, size, size)
    assert len(out.maps) == tiny_model.num_domains
    for morph in out.maps:
        assert morph.values.shape == (n, size, size, 2)
        assert morph.within_bounds()
    assert [f.shape[-1] for f in out.features] == list(TINY_MODEL.resolutions)


def test_model_creation_is_seeded():
    a, b = PMGANModel.create(TINY_MODEL), PMGANModel.create(TINY_MODEL)
    c = PMGANModel.create(evolve(TINY_MODEL, seed=1))
    z = a.sample_latents(2, 5)
    with no_record():
        np.testing.assert_array_equal(a.infer(z).parent.data, b.infer(z).parent.data)
        assert not np.array_equal(a.infer(z).parent.data, c.infer(z).parent.data)


def test_render_matches_full_inference(tiny_model):
    with no_record():
        out = tiny_model.infer(tiny_model.sample_latents(2, 1))
        np.testing.assert_allclose(tiny_model.render(out.w, PARENT).data, out.parent.data, atol=1e-6)
        for d in range(1, tiny_model.num_domains + 1):
            np.testing.assert_allclose(tiny_model.render(out.w, d).data, out.domains[d - 1].data, atol=1e-6)


def test_disabled_morph_uses_zero_maps():
    model = PMGANModel.create(evolve(TINY_MODEL, morph_enabled=False))
    with no_record():
        out = model.infer(model.sample_latents(2, 0))
        assert all(m.max_displacement() == 0.0 for m in out.maps)
        direct = model.render_heads.render(0, out.features, out.w)
    np.testing.assert_array_equal(out.domains[0].data, direct.data)


def test_leading_render_layers_are_shared(tiny_model):
    first, second = tiny_model.render_heads.domains
    assert first[0] is second[0]
    assert first[1] is not second[1]
    aliases = tiny_model.parameter_aliases()
    assert any(name.startswith("render_heads.domains.1.0.") for name in aliases)

    unshared = PMGANModel.create(evolve(TINY_MODEL, shared_k=0))
    assert unshared.parameter_aliases() == {}


def test_unknown_domains_are_rejected(tiny_model):
    w = tiny_model.mapping(tiny_model.sample_latents(1, 0))
    with pytest.raises(UnknownDomainError):
        tiny_model.render(w, tiny_model.num_domains + 1)
    with pytest.raises(UnknownDomainError):
        tiny_model.check_domain(PARENT)
    tiny_model.check_domain(PARENT, allow_parent=True)


def test_mapping_checks_latent_shape(tiny_model):
    with pytest.raises(ModelError):
        tiny_model.mapping(tiny_model.sample_latents(1, 0).reshape(1, 2, 4))


def test_swap_with_own_map_is_plain_render(tiny_model):
    z = tiny_model.sample_latents(2, 2)
    with no_record():
        out = tiny_model.infer(z)
        swapped = tiny_model.infer_swapped(z, 1, 1)
        crossed = tiny_model.infer_swapped(z, 1, 2)
    np.testing.assert_allclose(swapped.data, out.domains[0].data, atol=1e-6)
    assert not np.allclose(crossed.data, out.domains[0].data)


def test_interpolation_endpoints(tiny_model):
    z_a, z_b = tiny_model.sample_latents(1, 3), tiny_model.sample_latents(1, 4)
    with no_record():
        start = tiny_model.infer_interpolated(z_a, z_b, 1, 2, 0.0)
        end = tiny_model.infer_interpolated(z_a, z_b, 1, 2, 1.0)
        fixed = tiny_model.infer_interpolated(z_a, z_b, 1, 2, 0.0, fix_map_of_a=True)
        np.testing.assert_allclose(start.data, tiny_model.infer(z_a).domains[0].data, atol=1e-5)
        np.testing.assert_allclose(end.data, tiny_model.infer(z_b).domains[1].data, atol=1e-5)
    np.testing.assert_allclose(fixed.data, start.data, atol=1e-6)


def test_interpolation_weight_range(tiny_model):
    z = tiny_model.sample_latents(1, 0)
    with pytest.raises(ModelError):
        tiny_model.infer_interpolated(z, z, 1, 2, 1.5)


def test_model_checkpoint_round_trip(tmp_path, tiny_model):
    save_model(tmp_path / "ckpt", tiny_model, metadata={"domains": ["p", "a", "b"]})
    loaded = load_model(tmp_path / "ckpt")
    assert loaded.config == tiny_model.config
    loaded_first, loaded_second = loaded.render_heads.domains
    assert loaded_first[0] is loaded_second[0]
    z = tiny_model.sample_latents(2, 9)
    with no_record():
        for a, b in zip(tiny_model.infer(z).images, loaded.infer(z).images, strict=True):
            np.testing.assert_array_equal(a.data, b.data)


def test_mean_latent_shape(tiny_model):
    assert mean_latent(tiny_model, samples=16).shape == (1, TINY_MODEL.latent_dim)


def test_inversion_does_not_increase_loss(tiny_model):
    with no_record():
        target = tiny_model.render(tiny_model.mapping(tiny_model.sample_latents(1, 11)), PARENT)
    result = invert(tiny_model, target, PARENT, steps=5, lr=0.05)
    assert len(result.history) == 6
    assert result.loss <= result.initial_loss
    assert result.w.shape == (1, TINY_MODEL.latent_dim)


def test_inversion_checks_target_shape(tiny_model):
    with pytest.raises(ModelError):
        invert(tiny_model, np.zeros((3, 4, 4)), PARENT, steps=1)


def test_translate_renders_every_domain(tiny_model):
    with no_record():
        target = tiny_model.render(tiny_model.mapping(tiny_model.sample_latents(1, 12)), 1)
    images, result = translate(tiny_model, target, 1, steps=2)
    assert len(images) == tiny_model.num_domains + 1
    assert len(result.history) == 3


def test_sefa_recovers_axis_directions():
    result = sefa_directions(np.diag([3.0, 2.0, 1.0]), 3)
    np.testing.assert_allclose(result.eigenvalues, [9.0, 4.0, 1.0], rtol=1e-6)
    np.testing.assert_allclose(result.directions, np.eye(3), atol=1e-4)


def test_sefa_directions_are_orthonormal():
    rng = np.random.default_rng(0)
    result = sefa_directions(rng.standard_normal((12, 5)), 4, seed=3)
    np.testing.assert_allclose(result.directions @ result.directions.T, np.eye(4), atol=1e-6)
    assert np.all(np.diff(result.eigenvalues) <= 1e-9)


def test_sefa_rejects_bad_counts():
    with pytest.raises(ModelError):
        sefa_directions(np.eye(3), 4)
    with pytest.raises(ModelError):
        sefa_directions(np.eye(3), 0)


def test_sefa_gives_up_without_convergence():
    with pytest.raises(ConvergenceError):
        sefa_directions(np.diag([3.0, 2.0, 1.0]), 1, tol=1e-15, max_iter=1)


def test_style_matrix_rows_are_unit_length(tiny_model):
    matrix = style_matrix(tiny_model)
    assert matrix.shape[1] == TINY_MODEL.latent_dim
    np.testing.assert_allclose(np.linalg.norm(matrix, axis=1), 1.0, rtol=1e-6)
    one = style_matrix(tiny_model, ["levels.0.convs.0"])
    assert one.shape[0] == TINY_MODEL.channels[0]
    with pytest.raises(ModelError):
        style_matrix(tiny_model, ["levels.9.convs.0"])


def test_zero_edit_is_plain_render(tiny_model):
    w = tiny_model.mapping(tiny_model.sample_latents(1, 4))
    direction = np.ones(TINY_MODEL.latent_dim) / np.sqrt(TINY_MODEL.latent_dim)
    with no_record():
        edited = edit_transfer(tiny_model, w, direction, 0.0)
        plain = tiny_model.render_all(w)
    for a, b in zip(edited, plain, strict=True):
        np.testing.assert_allclose(a.data, b.data, atol=1e-6)


def test_sefa_matches_dense_eigensolver():
    matrix = np.random.default_rng(5).standard_normal((16, 8))
    result = sefa_directions(matrix, 8)
    values, vectors = np.linalg.eigh(matrix.T @ matrix)
    np.testing.assert_allclose(result.eigenvalues, values[::-1], rtol=1e-6)
    np.testing.assert_allclose(result.directions @ result.directions.T, np.eye(8), atol=1e-6)
    overlap = np.abs(np.sum(result.directions * vectors[:, ::-1].T, axis=1))
    np.testing.assert_allclose(overlap, 1.0, atol=1e-5)


def test_generated_latent_is_an_inversion_fixed_point(tiny_model):
    w = tiny_model.mapping(tiny_model.sample_latents(1, 13))
    with no_record():
        target = tiny_model.render(w, 1)
    result = invert(tiny_model, target, 1, steps=250, lr=0.1, init_w=w)
    assert result.loss <= 1e-8


def _zero(module: Module) -> None:
    for param in module.parameters():
        param.assign(Tensor(np.zeros(param.shape)))


def _constant_head(model, domain: int, raw: tuple[float, float]) -> np.ndarray:
    """Make head `domain` emit a constant raw map; returns the expected displacement."""

    head = model.morphnet.heads[domain - 1]
    _zero(head.conv1)
    head.conv1.bias.assign(Tensor(np.array(raw)))
    return np.tanh(np.array(raw)) / model.config.eta


def test_zeroed_heads_leave_shared_features_unmorphed(tiny_model):
    for head in tiny_model.morphnet.heads:
        _zero(head)
    z = tiny_model.sample_latents(2, 6)
    with no_record():
        out = tiny_model.infer(z)
        for d, morph in enumerate(out.maps, start=1):
            assert morph.max_displacement() == 0.0
            for shared, morphed in zip(out.features, tiny_model.morph_features(out.features, morph), strict=True):
                np.testing.assert_array_equal(morphed.data, shared.data)
            plain = tiny_model.render_domain(out.features, out.w, d)
            np.testing.assert_array_equal(out.domains[d - 1].data, plain.data)
        swapped = tiny_model.infer_swapped(z, 1, 2)
    np.testing.assert_array_equal(swapped.data, out.domains[0].data)


def test_swapped_inference_matches_manual_pipeline(tiny_model):
    _constant_head(tiny_model, 1, (0.6, 0.0))
    shift = _constant_head(tiny_model, 2, (-0.4, 0.3))
    z = tiny_model.sample_latents(2, 7)
    with no_record():
        swapped = tiny_model.infer_swapped(z, 1, 2)
        own = tiny_model.infer(z).domains[0]

        w = tiny_model.mapping(z)
        features, _ = tiny_model.synthesize_features(w)
        morphed = []
        for u in features:
            grid = identity_grid(*u.shape[-2:]).values
            offset = Tensor(np.ones(grid.shape) * shift)
            morphed.append(bilinear_sample(u, SamplingGrid(ops.add(grid, offset))))
        manual = tiny_model.render_heads.render(0, morphed, w)

    np.testing.assert_allclose(swapped.data, manual.data, atol=1e-5)
    assert not np.allclose(swapped.data, own.data, atol=1e-5)


def test_merge_with_zero_parameters_is_the_positional_encoding(tiny_model):
    for layer in (*tiny_model.morphnet.reducers, *tiny_model.morphnet.trunk):
        _zero(layer)
    with no_record():
        features, _ = tiny_model.synthesize_features(tiny_model.mapping(tiny_model.sample_latents(2, 8)))
        trunk = tiny_model.merge_features(features)
    size = tiny_model.image_size
    encoding = positional_encoding(size, size, tiny_model.config.trunk_channels)
    assert trunk.shape == (2, *encoding.shape)
    for sample in trunk.data:
        np.testing.assert_array_equal(sample, encoding.data)
