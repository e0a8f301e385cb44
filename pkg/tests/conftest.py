import os
import sys
from pathlib import Path

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ballplate.geometry import mirrored_pair_geometry

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"

hypothesis.settings.register_profile("fast", max_examples=25)
hypothesis.settings.register_profile("full", max_examples=200)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "full"))


@pytest.fixture(scope="session")
def default_geometry():
    return mirrored_pair_geometry(
        base_radius=130.0,
        platform_radius=100.0,
        anchor_offset=np.deg2rad(20.0),
        joint_offset=np.deg2rad(8.0),
        horn_length=40.0,
        rod_length=125.0,
    )


@pytest.fixture(scope="session")
def config_dir():
    return CONFIG_DIR
