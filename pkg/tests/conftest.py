from __future__ import annotations

from functools import partial

import anyio
import pytest

from pmgan.bench import TINY_MODEL
from pmgan.model import ModelConfig, PMGANModel
from pmgan.shapeworld import default_specs, read_dataset, write_dataset
from pmgan.train import TrainConfig

DATA_SIZE = 16
DATA_COUNT = 3


@pytest.fixture(autouse=True)
def quiet_progress(monkeypatch):
    monkeypatch.setenv("PMGAN_DISABLE_PROGRESS", "1")
    monkeypatch.setenv("PMGAN_WORKERS", "2")


@pytest.fixture
def tiny_model():
    return PMGANModel.create(TINY_MODEL)


@pytest.fixture
def data_model_config():
    """Smallest architecture that renders at the dataset size (16px)."""
    return ModelConfig(
        levels=3,
        latent_dim=8,
        mapping_depth=2,
        reducer_channels=4,
        trunk_channels=8,
        head_channels=8,
        channel_scale=1 / 32,
        num_domains=2,
    )


@pytest.fixture
def train_config(data_model_config):
    return TrainConfig(
        model=data_model_config,
        steps=2,
        batch_size=2,
        r1_interval=1,
        freeze_g=0,
        freeze_d=0,
        disc_channels=4,
        disc_max_channels=8,
        log_every=1,
        checkpoint_every=0,
    )


@pytest.fixture
def dataset_dir(tmp_path):
    root = tmp_path / "data"
    anyio.run(partial(write_dataset, root, default_specs(), DATA_COUNT, DATA_SIZE, 7))
    return root


@pytest.fixture
def dataset(dataset_dir):
    return read_dataset(dataset_dir)
