import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from rbmprop.core import ModelShape, ThetaVector  # noqa: E402

ALL_SHAPES = [(a, b) for a in range(1, 5) for b in range(1, 5)]


def random_theta(shape: ModelShape, rng: np.random.Generator) -> ThetaVector:
    """Gaussian theta with a random overall magnitude up to about 3."""
    scale = rng.uniform(0.0, 3.0)
    return ThetaVector.from_flat(shape, scale * rng.standard_normal(shape.dim))


def pytest_collection_modifyitems(config, items):
    if os.environ.get("RBMPROP_SKIP_LONG") != "1":
        return
    skip = pytest.mark.skip(reason="long run skipped by RBMPROP_SKIP_LONG=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
