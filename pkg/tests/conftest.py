import numpy as np
import pytest

from cogload.core import CameraIntrinsics, SessionConfig, default_layout
from cogload.headpose import load_face_model


@pytest.fixture(scope="session")
def config():
    return SessionConfig()


@pytest.fixture(scope="session")
def layout():
    return default_layout()


@pytest.fixture(scope="session")
def face_model():
    return load_face_model()


@pytest.fixture(scope="session")
def intrinsics():
    return CameraIntrinsics()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
