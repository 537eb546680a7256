from __future__ import annotations

import json

import numpy as np
import pytest

from pmgan.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, STAMP_NAME, main, read_stamp
from pmgan.cli.stamp import replace_flag, stamp_path
from pmgan.model import ModelConfig
from pmgan.shapeworld import read_image, write_pgm
from pmgan.train import CHECKPOINT_DIR, LOG_NAME, TrainConfig
from pmgan.utils.config import write_json
from pmgan.utils.convert import value_serialize

TINY_TRAINING = TrainConfig(
    model=ModelConfig(
        levels=3,
        latent_dim=8,
        mapping_depth=2,
        reducer_channels=4,
        trunk_channels=8,
        head_channels=8,
        channel_scale=1 / 32,
        num_domains=2,
    ),
    batch_size=2,
    r1_interval=1,
    freeze_g=0,
    freeze_d=0,
    disc_channels=4,
    disc_max_channels=8,
    log_every=1,
    checkpoint_every=0,
)


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data, run = root / "data", root / "run"
    assert main(["gen-data", "--out", str(data), "--count", "2", "--size", "16", "--seed", "3"]) == EXIT_OK
    config = root / "train.json"
    write_json(config, value_serialize(TINY_TRAINING))
    argv = ["train", "--config", str(config), "--data", str(data), "--out", str(run), "--steps", "1"]
    assert main(argv) == EXIT_OK
    return run


def test_replace_flag():
    argv = ("sample", "--out", "a", "--seed=1")
    assert replace_flag(argv, "--out", "b") == ("sample", "--out", "b", "--seed=1")
    assert replace_flag(argv, "--seed", "2") == ("sample", "--out", "a", "--seed=2")
    assert replace_flag(argv, "--count", "3") == (*argv, "--count", "3")


def test_stamp_path(tmp_path):
    assert stamp_path(tmp_path) == tmp_path / STAMP_NAME
    assert stamp_path(tmp_path / "grid.ppm") == tmp_path / STAMP_NAME
    assert stamp_path(tmp_path / "fresh") == tmp_path / "fresh" / STAMP_NAME


def test_usage_errors_exit_with_two(tmp_path):
    assert main(["train"]) == EXIT_USAGE
    assert main(["no-such-command"]) == EXIT_USAGE
    assert main(["gen-data", "--out", str(tmp_path), "--count", "0", "--size", "16"]) == EXIT_USAGE
    bad_offset = ["seg-transfer", "--ckpt", "x", "--mask", "m", "--target", "1", "--offset", "1,2", "--out", "o"]
    assert main(bad_offset) == EXIT_USAGE


def test_version_exits_cleanly(capsys):
    assert main(["--version"]) == EXIT_OK
    assert "pmgan" in capsys.readouterr().out


def test_missing_checkpoint_is_a_data_error(tmp_path):
    assert main(["sample", "--ckpt", str(tmp_path / "absent"), "--out", str(tmp_path / "out")]) == EXIT_DATA


def test_gen_data_rejects_small_images(tmp_path):
    assert main(["gen-data", "--out", str(tmp_path / "d"), "--count", "1", "--size", "8"]) == EXIT_USAGE


def test_train_writes_checkpoint_log_and_stamp(run_dir):
    assert (run_dir / CHECKPOINT_DIR / "manifest.json").is_file()
    assert (run_dir / LOG_NAME).is_file()
    stamp = read_stamp(run_dir / STAMP_NAME)
    assert stamp.command == "train"
    assert stamp.checkpoint_hash is not None
    assert stamp.config["steps"] == 1
    assert stamp.argv[stamp.argv.index("--config") + 1] == str(run_dir / "train_config.json")


def test_train_refuses_to_overwrite_a_checkpoint(run_dir):
    stamp = read_stamp(run_dir / STAMP_NAME)
    argv = [arg for arg in stamp.argv if arg != "--resume"]
    assert main(argv) == EXIT_USAGE


def test_sample_grid_and_replay(tmp_path, run_dir):
    out = tmp_path / "samples"
    assert main(["sample", "--ckpt", str(run_dir), "--count", "2", "--seed", "4", "--out", str(out)]) == EXIT_OK
    grid = read_image(out / "samples.ppm")
    assert grid.shape == (3, 2 * 16, 3 * 16)

    stamp = read_stamp(out / STAMP_NAME)
    assert stamp.seed == 4
    again = tmp_path / "again"
    assert main(["replay", "--stamp", str(out / STAMP_NAME), "--out", str(again)]) == EXIT_OK
    assert (again / "samples.ppm").read_bytes() == (out / "samples.ppm").read_bytes()


def test_replay_without_out_flag_cannot_redirect(tmp_path):
    assert main(["grad-check", "--case", "tanh", "--json", str(tmp_path / "report.json")]) == EXIT_OK
    assert main(["replay", "--stamp", str(tmp_path / STAMP_NAME), "--out", str(tmp_path / "x")]) == EXIT_USAGE


def test_seg_transfer_warps_parent_masks(tmp_path, run_dir):
    mask = tmp_path / "mask.pgm"
    stripes = np.tile(np.array([0, 0, 1, 1, 2, 2, 3, 3] * 2), (16, 1))
    write_pgm(mask, stripes)
    plain, shifted = tmp_path / "plain.pgm", tmp_path / "shifted.pgm"
    base = ["seg-transfer", "--ckpt", str(run_dir), "--mask", str(mask), "--target", "squash"]
    assert main([*base, "--out", str(plain)]) == EXIT_OK
    assert main([*base, "--offset", "0,0,0.5,0,10", "--out", str(shifted)]) == EXIT_OK

    warped = read_image(plain)
    assert warped.shape == stripes.shape
    assert set(np.unique(warped)) <= set(np.unique(stripes))
    assert not np.array_equal(read_image(shifted), warped)


def test_seg_transfer_only_from_the_parent(tmp_path, run_dir):
    mask = tmp_path / "mask.pgm"
    write_pgm(mask, np.zeros((16, 16), dtype=np.uint8))
    argv = ["seg-transfer", "--ckpt", str(run_dir), "--mask", str(mask), "--source", "1", "--target", "2"]
    assert main([*argv, "--out", str(tmp_path / "o.pgm")]) == EXIT_USAGE


def test_unknown_domain_name(tmp_path, run_dir):
    argv = ["swap-morph", "--ckpt", str(run_dir), "--source", "squash", "--target", "nowhere"]
    assert main([*argv, "--out", str(tmp_path / "swap.ppm")]) == EXIT_USAGE


def test_swap_morph_and_interpolate(tmp_path, run_dir):
    swap = tmp_path / "swap.ppm"
    argv = ["swap-morph", "--ckpt", str(run_dir), "--source", "squash", "--target", "bulge", "--count", "2"]
    assert main([*argv, "--out", str(swap)]) == EXIT_OK
    assert read_image(swap).shape == (3, 32, 48)

    strip = tmp_path / "strip.ppm"
    argv = ["interpolate", "--ckpt", str(run_dir), "--za", "1", "--zb", "2", "--da", "1", "--db", "2", "--steps", "3"]
    assert main([*argv, "--out", str(strip)]) == EXIT_OK
    assert read_image(strip).shape == (3, 16, 48)


def test_edit_dirs_then_edit(tmp_path, run_dir):
    dirs = tmp_path / "dirs"
    assert main(["edit-dirs", "--ckpt", str(run_dir), "--k", "2", "--out", str(dirs)]) == EXIT_OK
    info = json.loads((dirs / "directions.json").read_text())
    assert len(info["eigenvalues"]) == 2

    grid = tmp_path / "edit.ppm"
    argv = ["edit", "--ckpt", str(run_dir), "--dirs", str(dirs), "--dir", "0", "--scale", "2.0"]
    assert main([*argv, "--out", str(grid)]) == EXIT_OK
    assert read_image(grid).shape == (3, 3 * 16, 3 * 16)
    assert main([*argv[:-4], "--dir", "5", "--scale", "2.0", "--out", str(grid)]) == EXIT_USAGE


def test_invert_then_translate(tmp_path, run_dir, dataset_dir):
    image = dataset_dir / "parent" / "00000.ppm"
    inverted = tmp_path / "inverted"
    argv = ["invert", "--ckpt", str(run_dir), "--image", str(image), "--domain", "parent", "--steps", "2"]
    assert main([*argv, "--out", str(inverted)]) == EXIT_OK
    report = json.loads((inverted / "inversion.json").read_text())
    assert report["steps"] == 3
    assert report["loss"] <= report["initial_loss"]

    translated = tmp_path / "translated"
    argv = ["translate", "--ckpt", str(run_dir), "--latent", str(inverted / "latent.pmt")]
    assert main([*argv, "--out", str(translated)]) == EXIT_OK
    assert read_image(translated / "translated.ppm").shape == (3, 16, 48)
    argv = ["translate", "--ckpt", str(run_dir), "--image", str(image)]
    assert main([*argv, "--out", str(translated)]) == EXIT_USAGE


def test_grad_check_writes_report(tmp_path, capsys):
    report = tmp_path / "grad.json"
    assert main(["grad-check", "--case", "tanh", "--case", "add", "--json", str(report)]) == EXIT_OK
    payload = json.loads(report.read_text())
    assert payload["passed"] is True
    assert [entry["name"] for entry in payload["results"]] == ["tanh", "add"]
    assert "tanh" in capsys.readouterr().out
    assert read_stamp(tmp_path / STAMP_NAME).command == "grad-check"


def test_grad_check_unknown_case(tmp_path):
    assert main(["grad-check", "--case", "nope"]) == EXIT_DATA
    assert not (tmp_path / STAMP_NAME).exists()


def test_evaluations(tmp_path, run_dir):
    data = run_dir.parent / "data"
    seg = tmp_path / "seg.json"
    assert main(["eval-seg", "--ckpt", str(run_dir), "--data", str(data), "--json", str(seg)]) == EXIT_OK
    assert [row["domain"] for row in json.loads(seg.read_text())["rows"]] == ["squash", "bulge"]

    align = tmp_path / "align.json"
    assert main(["eval-align", "--ckpt", str(run_dir), "--count", "2", "--json", str(align)]) == EXIT_OK
    assert json.loads(align.read_text())["latents"] == 2
