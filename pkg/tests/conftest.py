import pytest

from memtlg import (
    DEFAULT_READ_CONTEXT,
    MemristorParams,
    SwitchParams,
    calibrate,
)


@pytest.fixture(scope="session")
def device_params():
    return MemristorParams()


@pytest.fixture(scope="session")
def switch_params():
    return SwitchParams()


@pytest.fixture(scope="session")
def read_context():
    return DEFAULT_READ_CONTEXT


@pytest.fixture(scope="session")
def cal():
    """Default calibration, shared across the suite (deterministic)."""
    return calibrate()
