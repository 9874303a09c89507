"""Canonical secret encoding and slow-hash verifier derivation."""

from __future__ import annotations

import hashlib
import hmac
import os
import time

from .config import KdfParams
from .errors import SeparatorInKeyword, WeakParams

#: Reserved separator joining the m keywords before hashing.  Pack
#: validation rejects keywords containing it, so the encoding is
#: injective over valid keyword sequences.
SEPARATOR = "\x1f"

VERIFIER_LEN = 32
SALT_LEN = 16


def canonicalize(keywords) -> bytes:
    """Join the ordered keywords into the byte string that gets hashed."""
    for word in keywords:
        if SEPARATOR in word:
            raise SeparatorInKeyword(f"keyword {word!r} contains the separator")
    return SEPARATOR.join(keywords).encode("utf-8")


def new_salt() -> bytes:
    return os.urandom(SALT_LEN)


def derive_verifier(keywords, salt: bytes, params: KdfParams, floor: int = 0) -> bytes:
    """Derive the stored verifier for an ordered keyword sequence."""
    if params.cost < max(floor, 1):
        raise WeakParams(f"cost {params.cost} below floor {floor}")
    secret = canonicalize(keywords)
    if params.algorithm == "pbkdf2-sha256":
        return hashlib.pbkdf2_hmac("sha256", secret, salt, params.cost, dklen=VERIFIER_LEN)
    if params.algorithm == "scrypt":
        return hashlib.scrypt(
            secret,
            salt=salt,
            n=1 << params.cost,
            r=params.block_size,
            p=params.parallelism,
            maxmem=512 * 1024 * 1024,
            dklen=VERIFIER_LEN,
        )
    raise WeakParams(f"unknown KDF algorithm {params.algorithm!r}")


def verify_keywords(keywords, salt: bytes, params: KdfParams, verifier: bytes) -> bool:
    """Constant-time comparison of a derived verifier against the stored one."""
    candidate = derive_verifier(keywords, salt, params)
    return hmac.compare_digest(candidate, verifier)


def bench_derive(params: KdfParams, rounds: int = 5) -> dict:
    """Measure wall-clock derive times for the given parameters."""
    salt = new_salt()
    keywords = ["benchmark"]
    times = []
    for _ in range(rounds):
        start = time.perf_counter()
        derive_verifier(keywords, salt, params)
        times.append((time.perf_counter() - start) * 1000.0)
    times.sort()
    return {
        "algorithm": params.algorithm,
        "cost": params.cost,
        "rounds": rounds,
        "min_ms": times[0],
        "median_ms": times[len(times) // 2],
        "max_ms": times[-1],
    }
