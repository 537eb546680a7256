from __future__ import annotations

import json

import numpy as np
import pytest
from attrs import define

from pmgan.nn import (
    MANIFEST_NAME,
    AdamState,
    CheckpointFormatError,
    CheckpointVersionError,
    Conv2d,
    LayerError,
    Linear,
    ModulatedConv2d,
    Module,
    OptimizerError,
    Parameter,
    adam_step,
    content_hash,
    copy_module,
    effective_kernel,
    lerp_modules,
    load_checkpoint,
    map_parameters,
    read_manifest,
    save_checkpoint,
)
from pmgan.numeric import GradTape, Tensor, generator, ops, rng_fill


@define(eq=False)
class Shared(Module):
    first: Linear
    second: Linear
    stack: list[Linear]


def _shared() -> Shared:
    rng = generator(0, "test")
    layer = Linear.create(3, 2, rng)
    return Shared(layer, Linear.create(2, 2, rng), [layer, Linear.create(2, 1, rng)])


def test_linear_forward():
    layer = Linear(Parameter(Tensor([[1.0, 2.0], [0.0, -1.0]])), Parameter(Tensor([0.5, 0.0])))
    out = layer(Tensor([[1.0, 1.0]]))
    np.testing.assert_allclose(out.data, [[3.5, -1.0]])
    assert (layer.in_features, layer.out_features) == (2, 2)


def test_linear_rejects_wrong_input():
    layer = Linear.create(3, 2, generator(0))
    with pytest.raises(LayerError):
        layer(Tensor(np.zeros((1, 4))))


def test_conv2d_only_supports_small_kernels():
    with pytest.raises(LayerError):
        Conv2d.create(1, 1, 5, generator(0))


def test_stride_two_conv_halves_resolution():
    conv = Conv2d.create(2, 4, 3, generator(0), stride=2, padding=1)
    assert conv(Tensor(np.zeros((1, 2, 8, 8)))).shape == (1, 4, 4, 4)


def test_demodulated_filters_have_unit_norm():
    rng = generator(1)
    layer = ModulatedConv2d.create(3, 5, 3, 4, rng)
    w = rng_fill((2, 4), 7)
    kernel = effective_kernel(layer, w)
    assert kernel.shape == (2, 5, 3, 3, 3)
    norms = np.sqrt(np.sum(kernel.astype(np.float64) ** 2, axis=(2, 3, 4)))
    np.testing.assert_allclose(norms, 1.0, rtol=1e-4)


def test_modulated_conv_matches_per_sample_kernel():
    rng = generator(2)
    layer = ModulatedConv2d.create(2, 3, 3, 4, rng)
    layer.bias.assign(Tensor([0.1, -0.2, 0.3]))
    x = rng_fill((2, 2, 5, 5), 3)
    w = rng_fill((2, 4), 4)
    out = layer(x, w)
    kernel = effective_kernel(layer, w)
    for i in range(2):
        expected = ops.conv2d(Tensor(x.data[i : i + 1]), Tensor(kernel[i]), 1, 1)
        np.testing.assert_allclose(out.data[i], expected.data[0] + layer.bias.value.data[:, None, None], atol=1e-4)


def test_modulated_conv_checks_latent_shape():
    layer = ModulatedConv2d.create(2, 2, 1, 4, generator(0))
    with pytest.raises(LayerError):
        layer(Tensor(np.zeros((1, 2, 4, 4))), Tensor(np.zeros((2, 4))))


def test_parameter_assign_keeps_shape():
    param = Parameter(Tensor(np.zeros((2, 2))))
    with pytest.raises(LayerError):
        param.assign(Tensor(np.zeros(4)))


def test_shared_parameters_are_reported_once():
    module = _shared()
    names = [name for name, _ in module.named_parameters()]
    assert names == [
        "first.weight",
        "first.bias",
        "second.weight",
        "second.bias",
        "stack.1.weight",
        "stack.1.bias",
    ]
    assert module.parameter_aliases() == {"stack.0.weight": "first.weight", "stack.0.bias": "first.bias"}


def test_state_dict_round_trip_and_missing_names():
    module = _shared()
    other = copy_module(module)
    for param in other.parameters():
        param.assign(Tensor(np.zeros(param.shape)))
    other.load_state_dict(module.state_dict())
    for a, b in zip(module.parameters(), other.parameters(), strict=True):
        np.testing.assert_array_equal(a.value.data, b.value.data)
    with pytest.raises(CheckpointFormatError):
        other.load_state_dict({})


def test_copy_module_preserves_sharing_and_detaches():
    module = _shared()
    clone = copy_module(module)
    assert clone.stack[0] is clone.first
    assert clone.first is not module.first
    clone.first.weight.assign(Tensor(np.ones((2, 3))))
    assert not np.array_equal(module.first.weight.value.data, np.ones((2, 3)))


def test_map_parameters_sees_dotted_names():
    seen = []

    def visit(name, param):
        seen.append(name)
        return param

    map_parameters(_shared(), visit)
    assert seen[:2] == ["first.weight", "first.bias"]
    assert "stack.0.weight" not in seen


def test_lerp_modules_endpoints():
    rng = generator(3)
    a, b = Linear.create(2, 2, rng), Linear.create(2, 2, rng)
    mid = lerp_modules(a, b, 0.5)
    np.testing.assert_allclose(
        mid.weight.value.data, (a.weight.value.data + b.weight.value.data) / 2, rtol=1e-6, atol=1e-7
    )
    np.testing.assert_array_equal(lerp_modules(a, b, 0.0).weight.value.data, a.weight.value.data)


def test_adam_first_step_moves_by_learning_rate():
    param = Parameter(Tensor([1.0, -1.0, 0.5]))
    state = adam_step({"p": param}, {"p": Tensor([2.0, -0.1, 0.0])}, AdamState(), lr=0.01, betas=(0.0, 0.99))
    assert state.t == 1
    np.testing.assert_allclose(param.value.data, [0.99, -0.99, 0.5], rtol=1e-5)


def _scalar_adam(p: float, grads: list[float], lr: float, betas: tuple[float, float], eps: float = 1e-8) -> float:
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = betas[0] * m + (1 - betas[0]) * g
        v = betas[1] * v + (1 - betas[1]) * g * g
        p -= lr * (m / (1 - betas[0] ** t)) / ((v / (1 - betas[1] ** t)) ** 0.5 + eps)
    return p


@pytest.mark.parametrize("betas", [(0.0, 0.99), (0.9, 0.999)])
def test_two_adam_steps_match_scalar_oracle(betas):
    start, grad = [0.5, -1.25, 2.0], [0.3, -2.0, 1e-3]
    param = Parameter(Tensor(start))
    state = AdamState()
    for _ in range(2):
        state = adam_step({"p": param}, {"p": Tensor(grad)}, state, lr=0.01, betas=betas)
    assert state.t == 2
    expected = [_scalar_adam(p, [g, g], 0.01, betas) for p, g in zip(start, grad, strict=True)]
    np.testing.assert_allclose(param.value.data, expected, rtol=1e-5)


def test_adam_with_zero_gradient_keeps_parameters():
    param = Parameter(Tensor([1.0, -3.0]))
    adam_step({"p": param}, {"p": Tensor([0.0, 0.0])}, AdamState(), lr=0.1)
    np.testing.assert_array_equal(param.value.data, [1.0, -3.0])


def test_adam_skips_parameters_without_gradients():
    kept = Parameter(Tensor([1.0]))
    moved = Parameter(Tensor([1.0]))
    adam_step({"kept": kept, "moved": moved}, {"moved": Tensor([1.0])}, AdamState(), lr=0.1)
    assert kept.value.data[0] == 1.0
    assert moved.value.data[0] < 1.0


def test_adam_rejects_mismatches():
    param = Parameter(Tensor([1.0, 2.0]))
    with pytest.raises(OptimizerError):
        adam_step({"p": param}, {"q": Tensor([1.0, 1.0])}, AdamState(), lr=0.1)
    with pytest.raises(OptimizerError):
        adam_step({"p": param}, {"p": Tensor([1.0])}, AdamState(), lr=0.1)


def test_adam_state_tensors_round_trip():
    param = Parameter(Tensor([1.0, 2.0]))
    state = adam_step({"p": param}, {"p": Tensor([0.5, -0.5])}, AdamState(), lr=0.1)
    restored = AdamState.from_tensors(state.tensors("adam"), "adam", state.t)
    np.testing.assert_array_equal(restored.m["p"], state.m["p"])
    np.testing.assert_array_equal(restored.v["p"], state.v["p"])


def test_gradient_reaches_every_linear_parameter():
    layer = Linear.create(3, 2, generator(4))
    x = rng_fill((4, 3), 5)
    with GradTape() as tape:
        tape.watch(layer.weight.value, layer.bias.value)
        loss = ops.sum(layer(x))
    grads = tape.gradient(loss, [layer.weight.value, layer.bias.value])
    np.testing.assert_allclose(grads[layer.bias.value].data, [4.0, 4.0])
    np.testing.assert_allclose(grads[layer.weight.value].data, np.tile(x.data.sum(axis=0), (2, 1)), rtol=1e-5)


def _tensors():
    return {"a.weight": Tensor(np.arange(6.0).reshape(2, 3)), "b": Tensor([1.0])}


def test_checkpoint_directory_round_trip(tmp_path):
    manifest = save_checkpoint(tmp_path / "ckpt", _tensors(), aliases={"c": "b"}, metadata={"step": 3})
    assert manifest.content_hash == content_hash(_tensors())
    checkpoint = load_checkpoint(tmp_path / "ckpt")
    assert checkpoint.metadata == {"step": 3}
    assert checkpoint.manifest.aliases == {"c": "b"}
    np.testing.assert_array_equal(checkpoint.tensors["a.weight"].data, _tensors()["a.weight"].data)
    assert set(checkpoint.subset("a")) == {"weight"}


def test_checkpoint_detects_tampered_tensor(tmp_path):
    save_checkpoint(tmp_path, _tensors())
    (tmp_path / "b.pmt").write_bytes((tmp_path / "b.pmt").read_bytes()[:-4] + np.float32(2.0).tobytes())
    with pytest.raises(CheckpointFormatError, match="hash"):
        load_checkpoint(tmp_path)


def test_checkpoint_major_version_must_match(tmp_path):
    save_checkpoint(tmp_path, _tensors())
    path = tmp_path / MANIFEST_NAME
    raw = json.loads(path.read_text())
    raw["version"] = "2.0.0"
    path.write_text(json.dumps(raw))
    with pytest.raises(CheckpointVersionError):
        read_manifest(tmp_path)


@pytest.mark.parametrize(
    "manifest",
    ["not json", json.dumps({"format": "other", "version": "1.0.0"}), json.dumps({"tensors": []})],
)
def test_checkpoint_rejects_foreign_manifests(tmp_path, manifest):
    (tmp_path / MANIFEST_NAME).write_text(manifest)
    with pytest.raises(CheckpointFormatError):
        read_manifest(tmp_path)


def test_missing_checkpoint_directory(tmp_path):
    with pytest.raises(CheckpointFormatError):
        load_checkpoint(tmp_path / "absent")
