import numpy as np
import pytest

from airpad.dataset import SynthConfig, build_dataset, synth_trajectory
from airpad.nn import TrainConfig, train


@pytest.fixture(scope="session")
def shared_mini_data():
    """Small full-pipeline dataset shared across test modules."""
    return build_dataset(SynthConfig(per_class=30, seed=11))


@pytest.fixture(scope="session")
def shared_bundle(shared_mini_data):
    tr, te = shared_mini_data
    bundle, _ = train("mlp", tr, te, TrainConfig(epochs=4, batch_size=32, seed=3))
    return bundle


def stream_samples(digit: int, seed: int = 0, rate_hz: float = 50.0):
    """A scripted digit trajectory downsampled to a UI-like message rate."""
    cfg = SynthConfig(per_class=1)
    traj = synth_trajectory(digit, cfg, np.random.default_rng(seed))
    step = max(int(round(cfg.sample_rate_hz / rate_hz)), 1)
    return traj[::step]
