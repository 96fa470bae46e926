"""Client-side keystore.

Two modes: STATIC_KEY uses one fixed pair; KEY_PER_TRANSACTION mints a
fresh pair per request so no verification key ever recurs on the chain.
Rotation is anchored by attestations: each new key is signed by its
predecessor, which the chain applies to keep actor identity continuous.

The file is encrypted at rest: scrypt over a passphrase, AES-GCM over
the canonical keystore payload.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.scrypt import Scrypt

from . import chain_apps, codec
from .errors import CertLedgerError

STATIC_KEY = "STATIC_KEY"
KEY_PER_TRANSACTION = "KEY_PER_TRANSACTION"
_SCRYPT_N, _SCRYPT_R, _SCRYPT_P = 2 ** 14, 8, 1


class KeystoreError(CertLedgerError):
    pass


@dataclass
class KeyEntry:
    created_at: int
    pair: codec.KeyPair


@dataclass
class Keystore:
    actor_id: str
    role: str
    mode: str
    keys: list[KeyEntry] = field(default_factory=list)
    clock: Callable[[], int] = field(default=lambda: int(time.time()), repr=False)

    @classmethod
    def create(cls, actor_id: str, role: str, mode: str = STATIC_KEY,
               seed: Optional[bytes] = None,
               clock: Optional[Callable[[], int]] = None) -> "Keystore":
        if mode not in (STATIC_KEY, KEY_PER_TRANSACTION):
            raise KeystoreError(f"unknown keystore mode {mode!r}")
        store = cls(actor_id=actor_id, role=role, mode=mode,
                    clock=clock or (lambda: int(time.time())))
        store.keys.append(KeyEntry(store.clock(), codec.generate_keypair(seed)))
        return store

    @property
    def current(self) -> codec.KeyPair:
        return self.keys[-1].pair

    @property
    def verification_key(self) -> bytes:
        return self.keys[0].pair.verification_key

    def to_value(self) -> dict:
        return {
            "actor_id": self.actor_id,
            "keys": [
                {
                    "created_at": entry.created_at,
                    "signing_key": entry.pair.signing_key,
                    "verification_key": entry.pair.verification_key,
                }
                for entry in self.keys
            ],
            "mode": self.mode,
            "role": self.role,
        }


def keystore_next_key(store: Keystore) -> codec.KeyPair:
    """STATIC_KEY: the fixed pair. KEY_PER_TRANSACTION: mint and record a
    fresh pair; pair it with `rotation_attestation` on the wire."""
    if store.mode == STATIC_KEY:
        return store.current
    entry = KeyEntry(store.clock(), codec.generate_keypair())
    store.keys.append(entry)
    return entry.pair


def rotation_attestation(store: Keystore) -> Optional[dict]:
    """Attestation binding the latest minted key to the actor, signed by
    the key before it. None in static mode or before any rotation."""
    if store.mode == STATIC_KEY or len(store.keys) < 2:
        return None
    previous = store.keys[-2].pair
    return chain_apps.make_attestation(
        store.actor_id, store.current.verification_key, previous)


# --- encrypted persistence ------------------------------------------------------


def _derive_key(passphrase: str, salt: bytes) -> bytes:
    kdf = Scrypt(salt=salt, length=32, n=_SCRYPT_N, r=_SCRYPT_R, p=_SCRYPT_P)
    return kdf.derive(passphrase.encode("utf-8"))


def save_keystore(store: Keystore, path: Path | str, passphrase: str) -> None:
    salt = os.urandom(16)
    nonce = os.urandom(12)
    key = _derive_key(passphrase, salt)
    box = AESGCM(key).encrypt(
        nonce, codec.canonical_serialize(store.to_value()), b"certledger-keystore")
    envelope = {
        "box": box.hex(),
        "kdf": {"n": _SCRYPT_N, "p": _SCRYPT_P, "r": _SCRYPT_R, "salt": salt.hex()},
        "nonce": nonce.hex(),
        "version": 1,
    }
    Path(path).write_text(json.dumps(envelope, indent=2, sort_keys=True) + "\n")


def load_keystore(path: Path | str, passphrase: str,
                  clock: Optional[Callable[[], int]] = None) -> Keystore:
    try:
        envelope = json.loads(Path(path).read_text())
        salt = bytes.fromhex(envelope["kdf"]["salt"])
        nonce = bytes.fromhex(envelope["nonce"])
        box = bytes.fromhex(envelope["box"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise KeystoreError(f"unreadable keystore: {exc}") from exc
    key = _derive_key(passphrase, salt)
    try:
        payload = AESGCM(key).decrypt(nonce, box, b"certledger-keystore")
    except InvalidTag:
        raise KeystoreError("wrong passphrase or corrupted keystore") from None
    value = codec.canonical_parse(payload)
    store = Keystore(
        actor_id=value["actor_id"], role=value["role"], mode=value["mode"],
        clock=clock or (lambda: int(time.time())),
    )
    for entry in value["keys"]:
        pair = codec.KeyPair(
            verification_key=bytes.fromhex(entry["verification_key"]),
            signing_key=bytes.fromhex(entry["signing_key"]),
        )
        store.keys.append(KeyEntry(entry["created_at"], pair))
    if not store.keys:
        raise KeystoreError("keystore holds no keys")
    return store
