import pytest

from purposeguard.config import Config
from purposeguard.engine import DecisionEngine
from purposeguard.generator import load_library_facts
from purposeguard.simulator import VirtualClock
from purposeguard.store import PolicyStore


@pytest.fixture
def clock():
    return VirtualClock(1_000.0)


@pytest.fixture
def store(clock):
    return PolicyStore(clock=clock.now, admin_token="secret-admin")


@pytest.fixture
def engine(store, clock):
    return DecisionEngine(
        store,
        Config(prompt_timeout=60.0, suppression_window=300.0),
        clock=clock.now,
        facts=load_library_facts(),
    )
