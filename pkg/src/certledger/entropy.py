"""Randomness sources.

Live deployments draw from the OS; fixtures use a seeded source so golden
files (chain, vectors, certificates) reproduce bit-exactly anywhere.
"""

from __future__ import annotations

import hashlib
import secrets

from . import codec


class Entropy:
    """OS-backed randomness for keys, salts, token ids, and secrets."""

    def keypair(self) -> codec.KeyPair:
        return codec.generate_keypair()

    def salt(self) -> codec.Salt:
        return codec.Salt.generate()

    def token_id(self) -> bytes:
        return secrets.token_bytes(16)

    def secret(self) -> bytes:
        return secrets.token_bytes(32)


class SeededEntropy(Entropy):
    """Counter-mode SHA-256 stream over a seed label; deterministic."""

    def __init__(self, seed: str):
        self._seed = seed.encode("utf-8")
        self._counter = 0

    def _next(self, n: int) -> bytes:
        out = b""
        while len(out) < n:
            block = hashlib.sha256(
                self._seed + b":" + self._counter.to_bytes(8, "big")
            ).digest()
            self._counter += 1
            out += block
        return out[:n]

    def keypair(self) -> codec.KeyPair:
        return codec.generate_keypair(self._next(32))

    def salt(self) -> codec.Salt:
        return codec.Salt(self._next(32))

    def token_id(self) -> bytes:
        return self._next(16)

    def secret(self) -> bytes:
        return self._next(32)
