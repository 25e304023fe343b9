"""Shared plumbing: stable seed derivation and worker-thread budget."""

from __future__ import annotations

import hashlib
import os


def stable_seed(*parts) -> int:
    """Derive a 64-bit seed from arbitrary labeled parts.

    Uses blake2b rather than hash() so derived streams are identical
    across processes and interpreter runs.
    """
    text = ":".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def worker_count() -> int:
    """Thread budget: SSLAB_THREADS env var, defaulting to all cores."""
    raw = os.environ.get("SSLAB_THREADS", "")
    if raw.strip():
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"SSLAB_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"SSLAB_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1
