from __future__ import annotations

import json

import numpy as np
import pytest

from pmgan.morph import morph_features, warp_labels
from pmgan.numeric import Tensor
from pmgan.shapeworld import (
    MAX_DISPLACEMENT,
    DatasetError,
    DegenerateSpecError,
    DomainSpec,
    ImageFormatError,
    Warp,
    canonical_render,
    check_specs,
    decode,
    default_specs,
    dump_specs,
    encode_pgm,
    encode_ppm,
    from_model_space,
    gen_sample,
    ground_truth_map,
    image_grid,
    load_specs,
    quantize,
    read_dataset,
    render_shape,
    sample_params,
    sample_seed,
    segment_by_palette,
    to_model_space,
    write_dataset,
)
from pmgan.shapeworld.io import MANIFEST_NAME

from .conftest import DATA_COUNT, DATA_SIZE

PALETTE = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0))


def test_default_specs_are_valid():
    specs = default_specs()
    check_specs(specs)
    assert specs[0].warp.is_identity
    assert [spec.name for spec in specs] == ["parent", "squash", "bulge"]


@pytest.mark.parametrize(
    "make",
    [
        pytest.param(lambda: DomainSpec("", PALETTE), id="empty-name"),
        pytest.param(lambda: DomainSpec("a b", PALETTE), id="bad-name"),
        pytest.param(lambda: DomainSpec("x", ()), id="no-parts"),
        pytest.param(lambda: DomainSpec("x", ((1.5, 0.0, 0.0),)), id="colour-range"),
        pytest.param(lambda: DomainSpec("x", PALETTE, count=0), id="count"),
        pytest.param(lambda: DomainSpec("x", PALETTE, warp=Warp("scale", scale=(0.0, 1.0))), id="zero-scale"),
        pytest.param(lambda: DomainSpec("x", PALETTE, warp=Warp("bulge", strength=0.5, sigma=0.0)), id="sigma"),
    ],
)
def test_degenerate_specs_are_rejected(make):
    with pytest.raises(DegenerateSpecError):
        make()


def test_folding_warp_is_rejected():
    with pytest.raises(DegenerateSpecError, match="folds"):
        Warp("bulge", strength=-3.0, sigma=0.2).check()


def test_spec_list_rules():
    parent = DomainSpec("parent", PALETTE)
    child = DomainSpec("child", PALETTE, warp=Warp("shear", shear=0.2))
    check_specs([parent, child])
    with pytest.raises(DegenerateSpecError):
        check_specs([parent])
    with pytest.raises(DegenerateSpecError):
        check_specs([child, parent])
    with pytest.raises(DegenerateSpecError):
        check_specs([parent, DomainSpec("parent", PALETTE)])


def test_specs_json_round_trip(tmp_path):
    path = tmp_path / "specs.json"
    path.write_text(dump_specs(default_specs()))
    assert load_specs(path) == default_specs()


def test_load_specs_rejects_malformed_files(tmp_path):
    path = tmp_path / "specs.json"
    path.write_text(json.dumps([{"name": "parent"}]))
    with pytest.raises(DegenerateSpecError):
        load_specs(path)


def test_displacements_are_clamped():
    warp = Warp("scale", scale=(0.2, 1.0))
    x = np.linspace(-1.0, 1.0, 9)
    dx, dy = warp.displacement(x, np.zeros_like(x))
    assert np.abs(dx).max() == pytest.approx(MAX_DISPLACEMENT)
    assert not dy.any()


def test_sample_params_depend_on_seed_only():
    assert sample_params(11) == sample_params(11)
    assert sample_params(11) != sample_params(12)


def test_identity_render_matches_canonical_render():
    spec = default_specs()[1]
    params = sample_params(4)
    image, mask = canonical_render(spec, params, 16, 16)
    parent_image, parent_mask = render_shape(default_specs()[0], params, 16, 16)
    assert mask == parent_mask
    assert image.shape == parent_image.shape == (3, 16, 16)


def test_render_rejects_tiny_images():
    with pytest.raises(DegenerateSpecError):
        render_shape(default_specs()[0], sample_params(0), 8, 8)


def test_render_mask_classes():
    spec = default_specs()[0]
    sample = gen_sample(spec, 3, 32, 32)
    assert sample.mask.num_classes == spec.parts + 1
    assert sample.mask.labels[0, 0] == 0
    assert sample.image.min() >= 0.0
    assert sample.image.max() <= 1.0


def test_segment_by_palette_recovers_mask_on_interior():
    spec = default_specs()[0]
    sample = gen_sample(spec, 5, 32, 32)
    segmented = segment_by_palette(sample.image, spec)
    agreement = np.mean(segmented.labels == sample.mask.labels)
    assert agreement > 0.85


def test_ground_truth_map_warps_parent_mask_into_domain():
    parent, squash = default_specs()[:2]
    params = sample_params(9)
    _, parent_mask = render_shape(parent, params, 32, 32)
    _, domain_mask = render_shape(squash, params, 32, 32)
    warped = warp_labels(parent_mask, ground_truth_map(squash, 32, 32))
    agreement = np.mean(warped.labels == domain_mask.labels)
    assert agreement > 0.9


def test_identity_ground_truth_is_zero_map():
    truth = ground_truth_map(default_specs()[0], 16, 16)
    assert truth.max_displacement() == 0.0
    features = Tensor(np.random.default_rng(0).standard_normal((1, 2, 16, 16)))
    np.testing.assert_array_equal(morph_features(features, truth).data, features.data)


def test_quantize_and_model_space():
    pixels = quantize(np.array([0.0, 0.5, 1.0, 1.2]))
    np.testing.assert_array_equal(pixels, [0, 128, 255, 255])
    np.testing.assert_allclose(to_model_space(np.array([0, 255], dtype=np.uint8)), [-1.0, 1.0])
    np.testing.assert_array_equal(from_model_space(np.array([-1.0, 1.0])), [0, 255])


def test_ppm_and_pgm_codecs():
    rgb = np.arange(3 * 2 * 4, dtype=np.uint8).reshape(3, 2, 4)
    blob = encode_ppm(rgb)
    assert blob.startswith(b"P6\n4 2\n255\n")
    np.testing.assert_array_equal(decode(blob), rgb)
    gray = np.array([[0, 1], [2, 255]])
    np.testing.assert_array_equal(decode(encode_pgm(gray)), gray)


def test_decode_tolerates_header_comments():
    blob = b"P5\n# made by hand\n2 1\n255\n" + bytes([7, 9])
    np.testing.assert_array_equal(decode(blob), [[7, 9]])


@pytest.mark.parametrize(
    "blob",
    [
        pytest.param(b"P3\n1 1\n255\n0 0 0", id="ascii"),
        pytest.param(b"P5\n2 2\n65535\n" + bytes(8), id="maxval"),
        pytest.param(b"P5\n2 2\n255\n" + bytes(3), id="short"),
    ],
)
def test_decode_rejects_unsupported_images(blob):
    with pytest.raises(ImageFormatError):
        decode(blob)


def test_encoders_validate_input():
    with pytest.raises(ImageFormatError):
        encode_ppm(np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(ImageFormatError):
        encode_pgm(np.array([[300]]))


def test_image_grid_tiles_panels():
    panel = np.zeros((3, 2, 3), dtype=np.uint8)
    assert image_grid([[panel, panel], [panel, panel]]).shape == (3, 4, 6)
    with pytest.raises(ImageFormatError):
        image_grid([])


def test_sample_seed_is_stable():
    assert sample_seed(1, 0, 0) == sample_seed(1, 0, 0)
    assert sample_seed(1, 0, 0) != sample_seed(1, 1, 0)


def test_dataset_layout(dataset):
    specs = default_specs()
    assert dataset.specs == specs
    assert dataset.manifest.size == DATA_SIZE
    for index, spec in enumerate(specs):
        images = dataset.load_images(index)
        assert images.shape == (DATA_COUNT, 3, DATA_SIZE, DATA_SIZE)
        assert images.dtype == np.uint8
        masks = dataset.load_masks(index)
        assert all(mask.num_classes == spec.num_classes for mask in masks)
    assert dataset.index_of("bulge") == 2
    with pytest.raises(DatasetError):
        dataset.index_of("missing")


def test_sample_poses_follow_their_seed(dataset):
    for domain in dataset.manifest.domains:
        for sample in domain.samples:
            assert sample.params == sample_params(sample.seed)


@pytest.mark.asyncio
async def test_dataset_is_deterministic(tmp_path, dataset_dir):
    await write_dataset(tmp_path / "again", default_specs(), DATA_COUNT, DATA_SIZE, 7)
    for path in sorted(dataset_dir.rglob("*.p?m")):
        assert (tmp_path / "again" / path.relative_to(dataset_dir)).read_bytes() == path.read_bytes()


@pytest.mark.asyncio
async def test_write_dataset_refuses_non_empty_directory(dataset_dir):
    with pytest.raises(DatasetError):
        await write_dataset(dataset_dir, default_specs(), 1, DATA_SIZE, 0)
    manifest = await write_dataset(dataset_dir, default_specs(), 1, DATA_SIZE, 0, overwrite=True)
    assert all(len(domain.samples) == 1 for domain in manifest.domains)
    assert len(list((dataset_dir / "parent").iterdir())) == 2


@pytest.mark.asyncio
async def test_per_domain_count_overrides_default(tmp_path):
    parent, child = default_specs()[:2]
    specs = (parent, DomainSpec(child.name, child.palette, warp=child.warp, count=1))
    manifest = await write_dataset(tmp_path / "d", specs, 2, DATA_SIZE, 0)
    assert [len(domain.samples) for domain in manifest.domains] == [2, 1]


@pytest.mark.parametrize(
    "patch",
    [{"schema": "other"}, {"version": "2.0.0"}, {"version": "banana"}],
)
def test_read_dataset_checks_schema_and_version(dataset_dir, patch):
    path = dataset_dir / MANIFEST_NAME
    raw = json.loads(path.read_text())
    raw.update(patch)
    path.write_text(json.dumps(raw))
    with pytest.raises(DatasetError):
        read_dataset(dataset_dir)


def test_read_dataset_without_manifest(tmp_path):
    with pytest.raises(DatasetError):
        read_dataset(tmp_path)
