import numpy as np
import pytest

from gukform.scenario import load_scenario

# Printed reference augmented Laplacian of the bundled benchmark topology.
PAPER_LBAR = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [-0.8, 1.3, 0.0, 0.0, -0.5],
        [0.0, -0.6, 0.9, -0.3, 0.0],
        [0.0, 0.0, -0.3, 0.3, 0.0],
        [0.0, -0.5, 0.0, -0.3, 0.8],
    ]
)


@pytest.fixture
def paper_config():
    return load_scenario("paper-sec5")


@pytest.fixture
def paper_topology(paper_config):
    return paper_config.topology
