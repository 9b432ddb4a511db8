import pytest

from btw.bridge.mock import MockBridge
from btw.decompose import resolve_layout
from btw.layouts import LayoutStore
from btw.session import Session


@pytest.fixture
def bridge():
    return MockBridge(clock=lambda: 0.0)


@pytest.fixture
def handle(bridge):
    return bridge.navigate("mock://grid")


@pytest.fixture
def store():
    return LayoutStore()


@pytest.fixture
def youtube_session(bridge, handle, store):
    layout = resolve_layout(store.get("youtube"), bridge, handle)
    return Session(bridge, handle, layout)
