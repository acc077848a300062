import random

import pytest

from pnfv.crypto import (generate_bgn_keypair, generate_mockfhe_keypair, generate_peks_keypair,
                         generate_pke_keypair)


@pytest.fixture(scope="session")
def bgn_keys():
    return generate_bgn_keypair(rng=random.Random(2024))


@pytest.fixture(scope="session")
def peks_keys():
    return generate_peks_keypair(rng=random.Random(7))


@pytest.fixture(scope="session")
def pke_keys():
    return generate_pke_keypair(rng=random.Random(8))


@pytest.fixture(scope="session")
def fhe_keys():
    return generate_mockfhe_keypair()


@pytest.fixture(scope="session")
def client_keys(bgn_keys, peks_keys, pke_keys, fhe_keys):
    from pnfv.sim.roles import ClientKeys
    return ClientKeys(bgn_keys, peks_keys, pke_keys, fhe_keys)
