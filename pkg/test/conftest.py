'''
Common tools & resources for test cases
'''
# ruff: noqa: E501

import numpy as np
import pytest

from stqlearn.excitation import NoiseConfig
from stqlearn.lti_core import SystemModel
from stqlearn.topology import Graph, TopologySpec


@pytest.fixture
def REF_A():
    # Four coupled scalar agents; every pair interacts
    return np.array([
        [0.2, 0.4, 0.1, 0.01],
        [0.4, 0.2, 0.3, 0.1],
        [0.1, 0.3, 0.3, 0.4],
        [0.2, 0.1, 0.5, 0.3],
    ])


@pytest.fixture
def REF_MODEL(REF_A):
    return SystemModel(REF_A, [np.eye(1)] * 4, [np.eye(1)] * 4, [np.eye(1)] * 4)


@pytest.fixture
def REF_KSTAR():
    # Reference optimal gain, four decimals
    return np.array([
        [0.1223, 0.2279, 0.0779, 0.0251],
        [0.2267, 0.1279, 0.1823, 0.0714],
        [0.0796, 0.1869, 0.1944, 0.2341],
        [0.1212, 0.0742, 0.2838, 0.1756],
    ])


@pytest.fixture
def REF_K1_RAW():
    # Unscaled reference initial gain; its closed loop spectral radius is just above 1
    return np.array([
        [1.0, 1.0, 0.0004, 2.0],
        [1.0, 0.2, 1.0, 0.1],
        [4.0, 0.1, 1.0, 3.0],
        [0.2, 0.1, 0.3, 0.2],
    ])


@pytest.fixture
def REF_K1(REF_K1_RAW):
    # Scaled copy shipped in resources/configs/four_agent.cfg; spectral radius ≈ 0.498
    return 0.2 * REF_K1_RAW


@pytest.fixture
def REF_W():
    # Chain 1-2-3-4
    return np.array([
        [0.5, 0.5, 0.0, 0.0],
        [0.5, 0.3, 0.2, 0.0],
        [0.0, 0.2, 0.2, 0.6],
        [0.0, 0.0, 0.6, 0.4],
    ])


@pytest.fixture
def REF_TOPOLOGY(REF_W):
    return TopologySpec(Graph.complete(4), Graph.chain(4), REF_W)


@pytest.fixture
def REF_X0():
    return np.full(4, 0.01)


@pytest.fixture
def SCALAR_MODEL():
    # x(t+1) = 0.5·x(t) + u(t), P = R = 1
    return SystemModel(np.array([[0.5]]), [np.eye(1)], [np.eye(1)], [np.eye(1)])


@pytest.fixture
def SCALAR_TOPOLOGY():
    return TopologySpec(Graph(1), Graph(1), np.array([[1.0]]))


@pytest.fixture
def QUIET_NOISE():
    return NoiseConfig.uniform(4, a=0.0, b=0.0)


@pytest.fixture
def REF_NOISE():
    return NoiseConfig.uniform(4, a=0.4, b=0.8)
