"""
Utilities for API interactions.
This module handles HTTP client initialization and retry logic for the remote
scoring backend.
"""
import logging
import random
import time
from typing import Callable, Optional, Tuple, Type

import httpx

logger = logging.getLogger(__name__)


def get_http_client(base_url: str, timeout_ms: int, transport: Optional[httpx.BaseTransport] = None) -> httpx.Client:
    """
    Get an initialized HTTP client for a scoring endpoint.

    Args:
        base_url: Endpoint root, e.g. ``http://localhost:8080``
        timeout_ms: Per-request timeout in milliseconds
        transport: Optional transport override (tests use ``httpx.MockTransport``)

    Returns:
        Initialized httpx client
    """
    return httpx.Client(base_url=base_url, timeout=timeout_ms / 1000.0, transport=transport)


def retry_with_exponential_backoff(
    func: Callable,
    initial_delay: float = 0.5,
    exponential_base: float = 2,
    jitter: bool = True,
    max_retries: int = 0,
    errors: Tuple[Type[BaseException], ...] = (httpx.TransportError,),
    seed: Optional[int] = None,
):
    """
    Retry a function with exponential backoff.

    Retries are off by default so that a failing backend surfaces immediately and
    runs stay reproducible.

    Args:
        func: The function to execute
        initial_delay: Initial delay between retries in seconds
        exponential_base: Base for exponential backoff
        jitter: Whether to add random jitter to delay
        max_retries: Maximum number of retries
        errors: Tuple of exceptions to catch and retry on
        seed: Seed for the jitter generator

    Returns:
        Wrapped function
    """
    rng = random.Random(seed)

    def wrapper(*args, **kwargs):
        num_retries = 0
        delay = initial_delay
        while True:
            try:
                return func(*args, **kwargs)
            except errors as e:
                num_retries += 1
                if num_retries > max_retries:
                    raise
                delay *= exponential_base * (1 + jitter * rng.random())
                logger.warning("Request failed with error: %s. Retrying in %.2f seconds...", e, delay)
                time.sleep(delay)

    return wrapper
