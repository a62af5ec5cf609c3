import numpy as np
import pytest

from starjam import ChannelParams, Geometry, SystemParams, gen_channels


def reference_geometry(l_ris=8, m_tx=4, n_rx=2, ris_x=0.2):
    return Geometry(
        pos_alice=[10.0, -17.0, 1.5],
        pos_eve=[20.0, 0.0, 1.5],
        pos_bob_tx_first=[0.0, 0.0, 5.0],
        pos_bob_rx_first=[0.0, 0.1, 5.0],
        pos_ris_first=[ris_x, 0.0, 5.0],
        element_spacing=0.025,
        m_tx=m_tx, n_rx=n_rx, l_ris=l_ris,
    )


def reference_system(p_bob=0.01):
    return SystemParams(p_alice=0.01, p_bob=p_bob, noise_rx=1e-11,
                        noise_eve=1e-11, p_si_max=1e-9)


def make_channels(seed, l_ris=8, m_tx=4, n_rx=2):
    geom = reference_geometry(l_ris=l_ris, m_tx=m_tx, n_rx=n_rx)
    return gen_channels(geom, ChannelParams(), np.random.default_rng(seed))


@pytest.fixture
def geometry():
    return reference_geometry()


@pytest.fixture
def channel_params():
    return ChannelParams()


@pytest.fixture
def system_params():
    return reference_system()


@pytest.fixture
def channels(geometry, channel_params):
    return gen_channels(geometry, channel_params, np.random.default_rng(42))
