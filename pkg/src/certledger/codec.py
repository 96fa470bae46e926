"""Canonical bytes, salted hashing, and Ed25519 signatures.

Every hash and signature in the system is computed over the output of
:func:`canonical_serialize`, so two independent implementations agree on
digests as long as they agree on this byte form:

* maps emit keys in ascending lexicographic byte order,
* no insignificant whitespace,
* byte blobs emit as lowercase hexadecimal strings,
* floats are rejected outright (cross-platform nondeterminism).

The salted digest layout is ``SHA-256(salt || 0x00 || payload)``; the
separator byte removes any salt/payload boundary ambiguity.
"""

from __future__ import annotations

import hashlib
import json
import secrets
from dataclasses import dataclass
from typing import Any

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .errors import (
    BadSeedLength,
    MalformedKey,
    MalformedSignature,
    NotCanonical,
    UnsupportedValue,
)

SALT_LEN = 32
DIGEST_LEN = 32
KEY_LEN = 32
SIGNATURE_LEN = 64
HASH_ALGORITHM = "SHA-256"

_SALT_SEPARATOR = b"\x00"


@dataclass(frozen=True)
class Salt:
    """Single-use random element mixed into every stored-data digest.

    Generated fresh per record and held only beside the off-chain
    ciphertext; it never appears on the ledger.
    """

    value: bytes

    def __post_init__(self) -> None:
        if len(self.value) != SALT_LEN:
            raise UnsupportedValue(f"salt must be {SALT_LEN} bytes, got {len(self.value)}")

    @classmethod
    def generate(cls) -> "Salt":
        return cls(secrets.token_bytes(SALT_LEN))


@dataclass(frozen=True)
class SaltedDigest:
    algorithm: str
    digest: bytes

    def __post_init__(self) -> None:
        if self.algorithm != HASH_ALGORITHM:
            raise UnsupportedValue(f"unsupported digest algorithm {self.algorithm!r}")
        if len(self.digest) != DIGEST_LEN:
            raise UnsupportedValue(f"digest must be {DIGEST_LEN} bytes")

    def to_value(self) -> dict:
        return {"algorithm": self.algorithm, "digest": self.digest}

    @classmethod
    def from_value(cls, value: Any) -> "SaltedDigest":
        if not isinstance(value, dict) or set(value) != {"algorithm", "digest"}:
            raise UnsupportedValue("malformed digest value")
        return cls(algorithm=value["algorithm"], digest=_as_bytes(value["digest"]))


@dataclass(frozen=True)
class KeyPair:
    """Ed25519 key pair; the verification key doubles as an identity."""

    verification_key: bytes
    signing_key: bytes


def _emit(value: Any, out: list) -> None:
    if isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=True))
    elif isinstance(value, (bytes, bytearray)):
        out.append('"' + bytes(value).hex() + '"')
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif isinstance(value, dict):
        keys = list(value.keys())
        for key in keys:
            if not isinstance(key, str):
                raise UnsupportedValue(f"map keys must be strings, got {type(key).__name__}")
        out.append("{")
        for i, key in enumerate(sorted(keys, key=lambda k: k.encode("utf-8"))):
            if i:
                out.append(",")
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _emit(value[key], out)
        out.append("}")
    elif isinstance(value, float):
        raise UnsupportedValue("floats are banned from canonical values")
    else:
        raise UnsupportedValue(f"cannot canonicalize {type(value).__name__}")


def canonical_serialize(value: Any) -> bytes:
    """Serialize maps/sequences/strings/ints/bools/bytes to canonical bytes.

    Equal structured values always map to identical byte sequences;
    raises UnsupportedValue on floats or non-string map keys.
    """
    out: list = []
    _emit(value, out)
    return "".join(out).encode("utf-8")


def canonical_parse(data: bytes) -> Any:
    """Parse canonical bytes back into a structured value.

    Byte blobs come back as their lowercase-hex strings (the canonical
    text cannot distinguish them from ordinary strings). Rejects any
    input that does not re-serialize to the identical byte sequence.
    """
    try:
        value = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise NotCanonical(f"not parseable: {exc}") from exc
    try:
        again = canonical_serialize(value)
    except UnsupportedValue as exc:
        raise NotCanonical(str(exc)) from exc
    if again != data:
        raise NotCanonical("input is not in canonical form")
    return value


def salted_hash(salt: Salt, payload: bytes) -> SaltedDigest:
    """SHA-256 over ``salt || 0x00 || payload``."""
    h = hashlib.sha256()
    h.update(salt.value)
    h.update(_SALT_SEPARATOR)
    h.update(payload)
    return SaltedDigest(algorithm=HASH_ALGORITHM, digest=h.digest())


def sha256(payload: bytes) -> bytes:
    """Unsalted SHA-256, used for transaction and block identifiers."""
    return hashlib.sha256(payload).digest()


def generate_keypair(seed: bytes | None = None) -> KeyPair:
    """Fresh Ed25519 pair; a 32-byte seed makes the output deterministic."""
    if seed is not None:
        if len(seed) != KEY_LEN:
            raise BadSeedLength(f"seed must be {KEY_LEN} bytes, got {len(seed)}")
        private = Ed25519PrivateKey.from_private_bytes(seed)
        raw_seed = seed
    else:
        private = Ed25519PrivateKey.generate()
        raw_seed = private.private_bytes_raw()
    return KeyPair(
        verification_key=private.public_key().public_bytes_raw(),
        signing_key=raw_seed,
    )


def sign(key: KeyPair, payload: bytes) -> bytes:
    private = Ed25519PrivateKey.from_private_bytes(key.signing_key)
    return private.sign(payload)


def verify_signature(vk: bytes, payload: bytes, sig: bytes) -> bool:
    if len(vk) != KEY_LEN:
        raise MalformedKey(f"verification key must be {KEY_LEN} bytes")
    if len(sig) != SIGNATURE_LEN:
        raise MalformedSignature(f"signature must be {SIGNATURE_LEN} bytes")
    try:
        Ed25519PublicKey.from_public_bytes(vk).verify(sig, payload)
    except InvalidSignature:
        return False
    return True


def _as_bytes(value: Any) -> bytes:
    """Decode a canonical lowercase-hex blob field."""
    if isinstance(value, (bytes, bytearray)):
        return bytes(value)
    if not isinstance(value, str) or value != value.lower():
        raise UnsupportedValue("expected lowercase hex string")
    try:
        return bytes.fromhex(value)
    except ValueError as exc:
        raise UnsupportedValue("expected hex string") from exc
