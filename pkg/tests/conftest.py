import os

import pytest
from hypothesis import HealthCheck, settings

from beliaev.dispersion import ModelParams

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=400, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def contact():
    return ModelParams(1.0, 1.0)
