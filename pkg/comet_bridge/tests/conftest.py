import contextlib
import socket
import threading
import time

import pytest


@pytest.fixture
def serve_app():
    """Serve an ASGI app on an ephemeral local port for one test."""

    @contextlib.contextmanager
    def _serve(app):
        import uvicorn

        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
        probe.close()

        server = uvicorn.Server(
            uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
        )
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        deadline = time.time() + 10
        while not server.started:
            if time.time() > deadline:
                raise RuntimeError("test server failed to start")
            time.sleep(0.01)
        try:
            yield f"http://127.0.0.1:{port}"
        finally:
            server.should_exit = True
            thread.join(timeout=5)

    return _serve
