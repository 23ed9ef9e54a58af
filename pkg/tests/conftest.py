import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))  # for `oracles`

from mdrnn import sample_data  # noqa: E402


@pytest.fixture(scope="session")
def digit_idx_dir(tmp_path_factory):
    """Session-cached IDX files of the bundled digit sample data."""
    out = tmp_path_factory.mktemp("digit_idx")
    sample_data.write_digit_idx(str(out))
    return str(out)


@pytest.fixture(scope="session")
def digit_stack(digit_idx_dir):
    """(images float64 [0,1] (N,28,28), digits int64 (N,)) from the fixture."""
    from mdrnn import data

    images = data.load_images(os.path.join(digit_idx_dir, sample_data.IMAGES_NAME))
    labels = data.load_labels(os.path.join(digit_idx_dir, sample_data.LABELS_NAME))
    return images, labels


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
