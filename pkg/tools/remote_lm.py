"""
Remote scoring client for the Quintain limerick engine.
This module talks to an HTTP language-model service that returns top-k
next-word log-probabilities.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import httpx
import numpy as np

from config.settings import REMOTE_MAX_RETRIES, REMOTE_TIMEOUT_MS, REMOTE_TOP_K
from core.errors import ScoringBackendError
from core.langmodel import TokenDistribution
from utils.api_utils import get_http_client, retry_with_exponential_backoff

logger = logging.getLogger(__name__)

DISTRIBUTION_PATH = "/v1/distribution"


@dataclass(frozen=True)
class RemoteEndpointConfig:
    base_url: str
    timeout: int = REMOTE_TIMEOUT_MS
    top_k: int = REMOTE_TOP_K
    max_retries: int = REMOTE_MAX_RETRIES

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


class RemoteLanguageModel:
    """
    Language model backed by a remote ``/v1/distribution`` endpoint.

    Each call issues one independent request, so concurrent callers never share
    request state. Returned distributions are truncated to the top-k tokens and
    renormalized over that support.
    """

    def __init__(self, cfg: RemoteEndpointConfig, transport: Optional[httpx.BaseTransport] = None):
        self.cfg = cfg
        self.client = get_http_client(cfg.base_url, cfg.timeout, transport)
        self._post = retry_with_exponential_backoff(self.client.post, max_retries=cfg.max_retries)

    def close(self) -> None:
        self.client.close()

    def next_distribution(self, context: Sequence[str]) -> TokenDistribution:
        return remote_next_distribution(self.cfg, context, self._post)

    def ping(self) -> TokenDistribution:
        return self.next_distribution(["the"])


def remote_next_distribution(cfg: RemoteEndpointConfig,
                             context: Sequence[str],
                             post=None) -> TokenDistribution:
    """
    Request the top-k next-word distribution for a context.

    Args:
        cfg: Endpoint configuration
        context: Preceding words
        post: Optional callable with ``httpx.Client.post``'s signature

    Returns:
        A truncated, renormalized TokenDistribution

    Raises:
        ScoringBackendError: on timeout, transport failure, non-2xx status or schema violation
    """
    if post is None:
        with get_http_client(cfg.base_url, cfg.timeout) as client:
            return remote_next_distribution(cfg, context, client.post)
    payload = {"context": list(context), "top_k": cfg.top_k}
    try:
        response = post(DISTRIBUTION_PATH, json=payload)
    except httpx.TimeoutException as e:
        raise ScoringBackendError(f"scoring request timed out after {cfg.timeout} ms") from e
    except httpx.HTTPError as e:
        raise ScoringBackendError(f"scoring request failed: {e}") from e
    if not 200 <= response.status_code < 300:
        raise ScoringBackendError(f"scoring backend returned HTTP {response.status_code}")
    try:
        body = response.json()
    except ValueError as e:
        raise ScoringBackendError("scoring backend returned invalid JSON") from e
    return _parse_tokens(body, len(context))


def _parse_tokens(body: Dict[str, Any], context_len: int) -> TokenDistribution:
    tokens = body.get("tokens") if isinstance(body, dict) else None
    if not isinstance(tokens, list) or not tokens:
        raise ScoringBackendError("scoring response has no tokens")
    words: List[str] = []
    logprobs: List[float] = []
    for item in tokens:
        if not isinstance(item, dict):
            raise ScoringBackendError("scoring response token is not an object")
        token, logprob = item.get("token"), item.get("logprob")
        if not isinstance(token, str) or not isinstance(logprob, (int, float)) or math.isnan(logprob) or logprob == float("inf"):
            raise ScoringBackendError(f"malformed token entry {item!r}")
        words.append(token)
        logprobs.append(float(logprob))
    values = np.array(logprobs)
    if not np.isfinite(values).any():
        raise ScoringBackendError("scoring response assigns zero probability to every token")
    shifted = np.exp(values - values.max())
    probs = shifted / shifted.sum()
    support: Dict[str, float] = {}
    for word, p in zip(words, probs.tolist()):
        support[word] = support.get(word, 0.0) + p
    return TokenDistribution(support, context_len, truncated=True)
