import pytest
from hypothesis import settings

from spikesoc.kernels import BACKEND_NAMES, get_backend

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


@pytest.fixture(params=BACKEND_NAMES)
def backend(request):
    """Kernel backend module; parametrizes over compiled and python when
    the extension is built."""
    return get_backend(request.param)
