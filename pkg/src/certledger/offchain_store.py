"""Centralized off-chain store for encrypted personal data.

Every record is encrypted at rest with a store-level AES-GCM key; the
single-use salt lives *inside* the ciphertext, next to the plaintext, so
the only copy of the salt dies with the record. Erasure truncates the
record file to zero bytes (the tombstone marker) and keeps one metadata
line — after that the on-chain digest is computationally anonymous.

Every fetch/update/erase/challenge is gated by exactly one capability
token validation, delegated to the access-control network so the result
lands in the audit log.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Protocol

from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import codec
from .chain_apps import CapabilityToken, valid_id
from .entropy import Entropy
from .errors import (
    AlreadyErased,
    DuplicateDataId,
    Erased,
    NotCanonical,
    NotFound,
    TokenRejected,
    UnsupportedValue,
)
from .tracing import Tracer

_NONCE_LEN = 12


class TokenValidator(Protocol):
    """Access-control hook: validates a token against current on-chain
    policy and records the attempt in the audit log."""

    def validate(self, token: CapabilityToken, data_id: str,
                 permission: str) -> tuple[bool, Optional[str]]:
        ...


@dataclass(frozen=True)
class DataLink:
    locator: str


@dataclass(frozen=True)
class ErasureReceipt:
    data_id: str
    erased_at: int


@dataclass
class StoredRecord:
    """Metadata view; ciphertext and salt live only in the record file."""

    data_id: str
    owner: str
    created_at: int
    updated_at: int
    erased: bool

    def to_value(self) -> dict:
        return {
            "created_at": self.created_at,
            "data_id": self.data_id,
            "erased": self.erased,
            "owner": self.owner,
            "updated_at": self.updated_at,
        }

    @classmethod
    def from_value(cls, value: dict) -> "StoredRecord":
        return cls(
            data_id=value["data_id"],
            owner=value["owner"],
            created_at=value["created_at"],
            updated_at=value["updated_at"],
            erased=value["erased"],
        )


class OffchainStore:
    def __init__(self, store_id: str, data_dir: Path | str, key: bytes,
                 access: Optional[TokenValidator] = None,
                 entropy: Optional[Entropy] = None,
                 clock: Optional[Callable[[], int]] = None,
                 tracer: Optional[Tracer] = None):
        if len(key) != 32:
            raise UnsupportedValue("store key must be 32 bytes")
        if not valid_id(store_id):
            raise UnsupportedValue("store id must be a short safe identifier")
        self.store_id = store_id
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._aead = AESGCM(key)
        self._access = access
        self._entropy = entropy or Entropy()
        self._clock = clock or (lambda: int(time.time()))
        self._tracer = tracer or Tracer()
        self._records: dict[str, StoredRecord] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._load_index()

    # -- wiring ---------------------------------------------------------

    def bind_access(self, access: TokenValidator) -> None:
        self._access = access

    def set_tracer(self, tracer: Tracer) -> None:
        self._tracer = tracer

    # -- persistence ------------------------------------------------------

    def _record_path(self, data_id: str) -> Path:
        return self.data_dir / data_id

    def _meta_path(self, data_id: str) -> Path:
        return self.data_dir / f"{data_id}.meta"

    def _load_index(self) -> None:
        for meta_path in sorted(self.data_dir.glob("*.meta")):
            try:
                value = codec.canonical_parse(meta_path.read_bytes().rstrip(b"\n"))
                record = StoredRecord.from_value(value)
            except (NotCanonical, KeyError, TypeError):
                continue
            self._records[record.data_id] = record

    def _write_meta(self, record: StoredRecord) -> None:
        self._meta_path(record.data_id).write_bytes(
            codec.canonical_serialize(record.to_value()) + b"\n")
        self._records[record.data_id] = record

    def _lock_for(self, data_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(data_id, threading.Lock())

    # -- crypto ----------------------------------------------------------

    def _seal(self, data_id: str, salt: codec.Salt, plaintext: bytes) -> bytes:
        import os
        nonce = os.urandom(_NONCE_LEN)
        box = self._aead.encrypt(nonce, salt.value + plaintext, data_id.encode())
        self._record_path(data_id).write_bytes(
            codec.canonical_serialize({"box": box, "nonce": nonce}) + b"\n")
        return box

    def _open(self, data_id: str) -> tuple[codec.Salt, bytes]:
        raw = self._record_path(data_id).read_bytes().rstrip(b"\n")
        value = codec.canonical_parse(raw)
        nonce = codec._as_bytes(value["nonce"])
        box = codec._as_bytes(value["box"])
        payload = self._aead.decrypt(nonce, box, data_id.encode())
        return codec.Salt(payload[:codec.SALT_LEN]), payload[codec.SALT_LEN:]

    # -- token gate --------------------------------------------------------

    def _gate(self, token: CapabilityToken, data_id: str, permission: str) -> None:
        if self._access is None:
            raise TokenRejected("no_access_control")
        ok, reason = self._access.validate(token, data_id, permission)
        if not ok:
            raise TokenRejected(reason or "rejected")

    def _live_record(self, data_id: str) -> StoredRecord:
        record = self._records.get(data_id)
        if record is None:
            raise NotFound(data_id)
        if record.erased:
            raise Erased(data_id)
        return record

    # -- operations ----------------------------------------------------------

    def store_record(self, data_id: str, plaintext: bytes,
                     owner: str) -> tuple[DataLink, codec.SaltedDigest]:
        """Encrypt and persist a fresh record under a fresh single-use
        salt; returns the locator plus the salted digest for anchoring."""
        if not valid_id(data_id):
            raise UnsupportedValue("data id must be a short safe identifier")
        with self._lock_for(data_id):
            if data_id in self._records:
                raise DuplicateDataId(data_id)
            salt = self._entropy.salt()
            digest = codec.salted_hash(salt, plaintext)
            self._seal(data_id, salt, plaintext)
            now = self._clock()
            self._write_meta(StoredRecord(
                data_id=data_id, owner=owner,
                created_at=now, updated_at=now, erased=False,
            ))
        self._tracer.record("store.store", data_id=data_id)
        return DataLink(f"offchain://{self.store_id}/{data_id}"), digest

    def fetch_record(self, token: CapabilityToken, data_id: str) -> bytes:
        self._tracer.record("store.fetch", data_id=data_id)
        self._gate(token, data_id, "READ")
        self._live_record(data_id)
        _, plaintext = self._open(data_id)
        return plaintext

    def update_record(self, token: CapabilityToken, data_id: str,
                      new_plaintext: bytes) -> codec.SaltedDigest:
        """Replace content under a new salt; the caller pushes the
        returned digest as a versioned integrity update."""
        self._tracer.record("store.update", data_id=data_id)
        self._gate(token, data_id, "MODIFY")
        with self._lock_for(data_id):
            record = self._live_record(data_id)
            salt = self._entropy.salt()
            digest = codec.salted_hash(salt, new_plaintext)
            self._seal(data_id, salt, new_plaintext)
            self._write_meta(StoredRecord(
                data_id=data_id, owner=record.owner,
                created_at=record.created_at, updated_at=self._clock(),
                erased=False,
            ))
        return digest

    def erase_record(self, token: CapabilityToken, data_id: str) -> ErasureReceipt:
        """Destroy ciphertext and salt irrecoverably; keep the tombstone
        (zero-length record file plus one metadata line)."""
        self._tracer.record("store.erase", data_id=data_id)
        self._gate(token, data_id, "DELETE")
        with self._lock_for(data_id):
            record = self._records.get(data_id)
            if record is None:
                raise NotFound(data_id)
            if record.erased:
                raise AlreadyErased(data_id)
            self._record_path(data_id).write_bytes(b"")
            erased_at = self._clock()
            self._write_meta(StoredRecord(
                data_id=data_id, owner=record.owner,
                created_at=record.created_at, updated_at=erased_at, erased=True,
            ))
        return ErasureReceipt(data_id=data_id, erased_at=erased_at)

    def challenge_digest(self, token: CapabilityToken, data_id: str,
                         candidate: bytes) -> codec.SaltedDigest:
        """Salt-scoped verification challenge: hash the caller's candidate
        bytes under the record's salt without releasing salt or stored
        plaintext."""
        self._tracer.record("store.challenge", data_id=data_id)
        self._gate(token, data_id, "VERIFY")
        self._live_record(data_id)
        salt, _ = self._open(data_id)
        return codec.salted_hash(salt, candidate)

    # -- inspection -------------------------------------------------------------

    def record_meta(self, data_id: str) -> Optional[StoredRecord]:
        return self._records.get(data_id)

    def link_for(self, data_id: str) -> DataLink:
        return DataLink(f"offchain://{self.store_id}/{data_id}")
