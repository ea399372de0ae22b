"""Runtime settings read from the environment."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

DEFAULT_SERVER_ENV = "ZETASUM_SERVER"


def threads() -> int:
    """Worker count from ``ZETASUM_THREADS`` (defaults to the CPU count)."""
    raw = os.environ.get("ZETASUM_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise ValueError(f"ZETASUM_THREADS must be an integer, got {raw!r}") from exc
        if n < 1:
            raise ValueError("ZETASUM_THREADS must be at least 1")
        return n
    return max(1, os.cpu_count() or 1)


def cache_dir() -> Path | None:
    """Directory of the result cache, or None when caching is disabled."""
    raw = os.environ.get("ZETASUM_CACHE", "").strip()
    if raw.lower() in ("0", "off", "none"):
        return None
    if raw:
        return Path(raw).expanduser()
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "zetasum"


def server_url() -> str | None:
    url = os.environ.get(DEFAULT_SERVER_ENV, "").strip()
    return url or None


def parallel_map(fn, items):
    """Ordered map over *items*; threads only pay off for nogil kernels."""
    items = list(items)
    n = min(threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
