import pytest

from radiuslab import default_config, gulliver_surface


@pytest.fixture(scope="session")
def gulliver():
    cfg = default_config()
    return gulliver_surface(cfg), cfg
