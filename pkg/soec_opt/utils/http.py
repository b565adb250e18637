"""HTTP client with retry and timeout support, used to fetch published datasets."""

from __future__ import annotations

import logging
from pathlib import Path

import httpx
from tenacity import RetryError, Retrying, stop_after_attempt, wait_exponential

from soec_opt.config.settings import RetryConfig
from soec_opt.errors import DownloadError

LOGGER = logging.getLogger(__name__)


class HttpClient:
    """Thin wrapper around httpx with retries."""

    def __init__(self, timeout_seconds: float, retry_config: RetryConfig, transport: httpx.BaseTransport | None = None) -> None:
        self._timeout_seconds = timeout_seconds
        self._retry_config = retry_config
        self._client = httpx.Client(timeout=timeout_seconds, transport=transport, follow_redirects=True)

    def get_bytes(self, url: str) -> bytes:
        """Return the response body or raise ``DownloadError``."""

        try:
            for attempt in Retrying(
                stop=stop_after_attempt(self._retry_config.attempts),
                wait=wait_exponential(
                    min=self._retry_config.min_seconds,
                    max=self._retry_config.max_seconds,
                ),
                reraise=True,
            ):
                with attempt:
                    response = self._client.get(url)
                    response.raise_for_status()
                    return response.content
        except RetryError as error:
            raise DownloadError(f"HTTP retries exhausted for URL: {url}", url=url) from error
        except httpx.HTTPError as error:
            raise DownloadError(f"HTTP request failed for URL: {url}", url=url, reason=str(error)) from error
        raise DownloadError(f"HTTP request produced no response for URL: {url}", url=url)

    def download_file(self, url: str, dest: Path) -> int:
        """Write the body of ``url`` to ``dest`` via a temporary sibling; returns the byte count."""

        payload = self.get_bytes(url)
        dest.parent.mkdir(parents=True, exist_ok=True)
        partial = dest.with_name(dest.name + ".part")
        partial.write_bytes(payload)
        partial.replace(dest)
        LOGGER.info("Downloaded file", extra={"url": url, "path": str(dest), "bytes": len(payload)})
        return len(payload)

    def close(self) -> None:
        """Close underlying transport."""

        self._client.close()

    def __enter__(self) -> "HttpClient":
        return self

    def __exit__(self, *_: object) -> None:
        self.close()
