import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from chaingraph import corpus


@pytest.fixture(scope="session")
def models():
    """All bundled example models, resolved, keyed by name."""
    return {name: corpus.load(name) for name in corpus.MODEL_NAMES}


@pytest.fixture(scope="session")
def graphs(models):
    """The plain graphs of the unplated bundled models."""
    return {name: m.graph for name, m in models.items() if not m.plates}
