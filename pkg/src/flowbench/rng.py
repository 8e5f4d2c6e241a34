"""Deterministic random-stream derivation.

Every stochastic component draws from a generator derived from the master
seed plus a structural path (purpose tags and indices), e.g.
``stream(seed, "tree", 17)``.  Streams depend only on their path, never on
execution order, so any evaluation schedule reproduces the same results.
"""
from __future__ import annotations

import hashlib

import numpy as np


def _digest(path: tuple) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    for part in path:
        if isinstance(part, (bool, np.bool_)):
            part = int(part)
        if isinstance(part, (int, np.integer)):
            h.update(b"i")
            h.update(int(part).to_bytes(9, "little", signed=True))
        elif isinstance(part, str):
            h.update(b"s")
            h.update(part.encode("utf-8"))
            h.update(b"\x00")
        else:
            raise TypeError(f"stream path parts must be int or str, got {type(part).__name__}")
    return h.digest()


def stream(*path: int | str) -> np.random.Generator:
    """Derive an independent counter-based generator from a structural path."""
    key = np.frombuffer(_digest(path), dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def child_seed(*path: int | str) -> int:
    """Derive a 63-bit sub-seed for components that take a plain integer seed."""
    return int.from_bytes(_digest(path)[:8], "little") >> 1
