"""Shared fixtures and the --runslow switch."""

import numpy as np
import pytest

from src.environment import Environment
from src.experiment_config import ExperimentConfig, with_overrides
from src.geometry import Pose
from src.signal_model import NoiseSpec, SignalField, sense


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope="session")
def reference():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def params(reference):
    return reference.robot_params()


@pytest.fixture(scope="session")
def orbits(reference):
    return reference.orbit_set()


@pytest.fixture(scope="session")
def small_config(reference):
    """Reference setup cut down for quick end-to-end runs."""
    return with_overrides(reference, {"robots.count": 4, "simulation.t_max": 30})


@pytest.fixture(scope="session")
def open_field():
    """An arena large enough that a robot at its center senses no boundary."""
    return Environment.rectangle(200.0, 200.0)


@pytest.fixture(scope="session")
def read_scene(reference, open_field):
    """
    Noiseless readings of a robot at the center of the open field.

    Call with robot heading, neighbor offsets and target offsets (relative to the robot).
    """
    origin = np.array([100.0, 100.0])

    def read(heading=0.0, neighbors=(), targets=()):
        neighbors = np.asarray(neighbors, dtype=float).reshape(-1, 2) + origin
        targets = np.asarray(targets, dtype=float).reshape(-1, 2) + origin
        field = SignalField(
            target_profile=reference.target_profile,
            robot_profile=reference.robot_profile,
            environment_profile=reference.environment_profile,
            target_sources=targets,
            robot_sources=np.vstack([origin[None, :], neighbors]),
            environment=open_field,
        )
        pose = Pose(origin[0], origin[1], heading)
        return sense(pose, reference.sensor_array, field, NoiseSpec(), self_index=0)

    return read
