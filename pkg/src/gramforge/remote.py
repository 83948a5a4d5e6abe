"""HTTP client for the masked-LM oracle service.

Speaks the JSON protocol of the companion service: POST /v1/masked_predict
with tokens (literal "[MASK]" sentinels), a target position, and candidate
strings; the response maps candidates to probabilities. The client plugs
into the same scoring chains as any other :class:`SequenceOracle`.
"""

from __future__ import annotations

import math

import httpx

from .errors import OracleUnavailableError
from .oracle import MaskedQuery, SequenceOracle

WIRE_MASK = "[MASK]"


class RemoteOracle(SequenceOracle):
    """Client for the remote masked-LM service.

    The underlying httpx client is thread-safe, so one RemoteOracle can be
    shared by concurrent matrix-fill workers; the caller bounds in-flight
    requests by bounding its worker pool.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        super().__init__()
        self.endpoint = endpoint.rstrip("/")
        self._client = httpx.Client(
            base_url=self.endpoint, timeout=timeout, transport=transport
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def healthy(self) -> bool:
        try:
            response = self._client.get("/healthz")
            return response.status_code == 200
        except httpx.HTTPError:
            return False

    def _masked_token_logprob(self, query: MaskedQuery, token: str) -> float:
        # The internal mask sentinel is already the wire sentinel "[MASK]".
        payload = {
            "tokens": list(query.tokens),
            "target_position": query.target_position,
            "candidates": [token],
        }
        try:
            response = self._client.post("/v1/masked_predict", json=payload)
            response.raise_for_status()
            body = response.json()
        except httpx.HTTPError as exc:
            raise OracleUnavailableError(f"masked-LM service failure: {exc}") from exc
        try:
            probability = float(body["probabilities"][token])
        except (KeyError, TypeError, ValueError) as exc:
            raise OracleUnavailableError(
                f"malformed service response for {token!r}: {body!r}"
            ) from exc
        if probability <= 0.0:
            return -math.inf
        return math.log(probability)
