import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import flowbench as fb


@pytest.fixture
def tiny_dataset():
    """Small separable dataset for fast model checks."""
    return fb.synthesize_dataset(60, 60, 3.0, seed=11)


@pytest.fixture
def split_pair(tiny_dataset):
    return fb.stratified_split(tiny_dataset, fb.SplitSpec(0.7, seed=5))


def random_dataset(rng: np.random.Generator, n: int, n_informative_labels=True):
    """Arbitrary positive features with labels, not family-consistent."""
    features = rng.uniform(0.0, 10.0, size=(n, 24))
    labels = rng.integers(0, 2, size=n).astype(np.int64)
    if n_informative_labels:
        labels[0] = 0
        labels[1] = 1
    return fb.FlowDataset(features, labels, provenance="random")
