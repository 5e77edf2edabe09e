"""Thin synchronous client for the service.

With no base URL the client mounts the app in-process (no network, same
endpoints); with a base URL it talks to a running server. All payloads and
results are plain JSON-shaped dicts.
"""

from __future__ import annotations

import httpx

from .core import EvaluationRecord, Heatmap


class ServiceError(RuntimeError):
    """Non-2xx service response, carrying the HTTP status and detail."""

    def __init__(self, status_code: int, detail):
        self.status_code = status_code
        self.detail = detail
        super().__init__(f"service returned {status_code}: {detail}")


def heatmap_to_wire(h: Heatmap) -> dict:
    return {
        "width": h.width,
        "height": h.height,
        "values": [float(v) for v in h.flat],
    }


def record_to_wire(r: EvaluationRecord) -> dict:
    return {
        "id": r.id,
        "scores": r.scores.as_dict(),
        "artifact_heatmap": heatmap_to_wire(r.artifact_heatmap) if r.artifact_heatmap else None,
        "misalignment_heatmap": (
            heatmap_to_wire(r.misalignment_heatmap) if r.misalignment_heatmap else None
        ),
        "artifact_boxes": [b.as_list() for b in r.artifact_boxes],
        "misalignment_boxes": [b.as_list() for b in r.misalignment_boxes],
    }


class ServiceClient:
    def __init__(self, base_url: str | None = None, timeout: float = 600.0):
        if base_url:
            self._client = httpx.Client(base_url=base_url, timeout=timeout)
        else:
            import warnings

            with warnings.catch_warnings():
                # starlette 1.3 deprecates its httpx-backed TestClient in
                # favor of httpx2, which is not yet installable here.
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _check(self, resp: httpx.Response):
        if resp.status_code >= 400:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            raise ServiceError(resp.status_code, detail)
        return resp.json()

    def get(self, path: str):
        return self._check(self._client.get(path))

    def post(self, path: str, payload: dict):
        return self._check(self._client.post(path, json=payload))
