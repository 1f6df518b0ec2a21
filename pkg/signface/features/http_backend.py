"""
Client for a local inference endpoint serving sentence embeddings.

Protocol: POST ``{endpoint}/semantic`` and ``{endpoint}/sentiment`` with
``{"text": ...}``; responses carry ``{"embedding": [...]}`` and, for
sentiment, ``"label"``. ``{endpoint}/prototype`` with ``{"label": ...}``
returns the label's representative embedding.
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np
import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from signface.core.errors import BackendError, TransportError
from signface.features.base import EmbeddingBackend

logger = logging.getLogger(__name__)

RETRY_STATUSES = (429, 500, 502, 503, 504)


def _session(retries: int, backoff: float) -> requests.Session:
    retry = Retry(
        total=retries,
        connect=retries,
        read=retries,
        status=retries,
        backoff_factor=backoff,
        status_forcelist=RETRY_STATUSES,
        allowed_methods=frozenset({"POST"}),
        raise_on_status=False,
    )
    session = requests.Session()
    adapter = HTTPAdapter(max_retries=retry)
    session.mount("http://", adapter)
    session.mount("https://", adapter)
    return session


class HttpBackend(EmbeddingBackend):
    """Embedding backend behind an HTTP endpoint."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        retries: int = 3,
        backoff: float = 0.5,
        session: Optional[requests.Session] = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.session = session or _session(retries, backoff)

    @property
    def backend_id(self) -> str:
        return f"http:{self.endpoint}"

    def _post(self, route: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        url = f"{self.endpoint}/{route}"
        try:
            response = self.session.post(url, json=payload, timeout=self.timeout)
            response.raise_for_status()
        except (requests.exceptions.ConnectionError, requests.exceptions.Timeout) as e:
            logger.error(f"Backend unreachable at {url}: {str(e)}")
            raise TransportError(f"Backend unreachable at {url}: {str(e)}") from e
        except requests.exceptions.RequestException as e:
            raise BackendError(f"Backend request to {url} failed: {str(e)}") from e

        try:
            body = response.json()
        except ValueError as e:
            raise BackendError(f"Backend at {url} returned invalid JSON") from e
        if not isinstance(body, dict) or "embedding" not in body:
            raise BackendError(f"Backend at {url} returned no embedding")
        return body

    def semantic(self, text: str) -> np.ndarray:
        body = self._post("semantic", {"text": text})
        return np.asarray(body["embedding"], dtype=np.float32)

    def sentiment(self, text: str) -> Tuple[np.ndarray, Optional[str]]:
        body = self._post("sentiment", {"text": text})
        return np.asarray(body["embedding"], dtype=np.float32), body.get("label")

    def sentiment_prototype(self, label: str) -> np.ndarray:
        body = self._post("prototype", {"label": label})
        return np.asarray(body["embedding"], dtype=np.float32)
