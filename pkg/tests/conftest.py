"""Shared fixtures: identities, nodes, and a live HTTP server."""

import threading
import time

import pytest
import uvicorn

from trialcustody import keys
from trialcustody.config import NodeConfig
from trialcustody.node import Node
from trialcustody.service import create_app


@pytest.fixture
def owner_identity():
    return keys.generate_identity()


@pytest.fixture
def submitter_identity():
    return keys.generate_identity()


@pytest.fixture
def outsider_identity():
    return keys.generate_identity()


def make_node(owner_identity, **overrides) -> Node:
    defaults = dict(clock="logical")
    defaults.update(overrides)
    return Node(NodeConfig(**defaults), owner_public_key=owner_identity.public_key)


@pytest.fixture
def node(owner_identity):
    n = make_node(owner_identity)
    yield n
    n.close()


class LiveServer:
    """uvicorn on an ephemeral port, in a daemon thread."""

    def __init__(self, node: Node):
        self.node = node
        self.app = create_app(node)
        self._config = uvicorn.Config(
            self.app, host="127.0.0.1", port=0, log_level="warning", lifespan="on"
        )
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)

    def start(self) -> "LiveServer":
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        return self

    @property
    def url(self) -> str:
        sock = self._server.servers[0].sockets[0]
        host, port = sock.getsockname()[:2]
        return f"http://{host}:{port}"

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)


@pytest.fixture
def live_server(node):
    server = LiveServer(node).start()
    yield server
    server.stop()
