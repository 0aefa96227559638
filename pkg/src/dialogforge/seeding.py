"""Deterministic seed derivation helpers.

Derivation uses SHA-256 rather than hash() so derived seeds are stable
across processes and platforms (hash() of str is salted per process).
"""

from __future__ import annotations

import hashlib
import secrets


def derive_seed(base: int, index: int) -> int:
    """Mix a base seed with an index into an independent 64-bit seed."""
    digest = hashlib.sha256(f"{base}:{index}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def entropy_seed() -> int:
    """Draw a fresh 32-bit seed from OS entropy."""
    return secrets.randbits(32)
