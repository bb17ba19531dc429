import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from histotex import generate_synthetic


def path960_root():
    """Real-dataset directory, when the environment provides one."""
    root = os.environ.get("KIMIA_PATH960_ROOT")
    if root and Path(root).is_dir():
        return Path(root)
    return None


@pytest.fixture(scope="session")
def tiny_dataset():
    """3 classes x 4 images, 32x32: enough for protocol plumbing tests."""
    return generate_synthetic(n_classes=3, per_class=4, size=(32, 32), seed=11)


@pytest.fixture(scope="session")
def five_class_dataset():
    """5 texture classes for trend checks (margins verified for seed 7)."""
    return generate_synthetic(n_classes=5, per_class=20, size=(48, 48), seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
