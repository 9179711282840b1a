"""Thin client for the solver service.

The CLI talks to the service exclusively through this interface; by default
the app is mounted in-process (no network), while ``remote()`` points the
same surface at a running server.
"""

from __future__ import annotations

import warnings

import httpx


class SolverClient:
    """Uniform POST/GET wrapper over an in-process app or a remote base URL."""

    def __init__(self, transport):
        self._transport = transport

    @classmethod
    def local(cls) -> "SolverClient":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            from fastapi.testclient import TestClient
        from .service import app

        return cls(TestClient(app, raise_server_exceptions=False))

    @classmethod
    def remote(cls, base_url: str) -> "SolverClient":
        return cls(httpx.Client(base_url=base_url, timeout=None))

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        resp = self._transport.post(path, json=payload)
        return resp.status_code, _json_or_text(resp)

    def get(self, path: str) -> tuple[int, dict]:
        resp = self._transport.get(path)
        return resp.status_code, _json_or_text(resp)

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _json_or_text(resp) -> dict:
    try:
        return resp.json()
    except Exception:
        return {"code": "numerical_error", "message": resp.text}
