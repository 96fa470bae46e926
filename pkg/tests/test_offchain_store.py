"""Encrypted store: token gating, salt lifecycle, erasure tombstones."""

from __future__ import annotations

import hashlib

import pytest

from certledger import codec
from certledger.chain_apps import CapabilityToken
from certledger.entropy import SeededEntropy
from certledger.errors import (
    AlreadyErased,
    DuplicateDataId,
    Erased,
    NotFound,
    TokenRejected,
    UnsupportedValue,
)
from certledger.offchain_store import OffchainStore

STORE_KEY = hashlib.sha256(b"store-key").digest()


class ScriptedValidator:
    """Stands in for the access-control network: accepts iff the token
    names exactly the requested (data_id, permission)."""

    def __init__(self):
        self.calls = []

    def validate(self, token, data_id, permission):
        self.calls.append((token.token_id, data_id, permission))
        if token.data_id != data_id or token.permission != permission:
            return False, "mismatch"
        return True, None


def make_token(data_id: str, permission: str) -> CapabilityToken:
    return CapabilityToken(
        token_id=b"\x01" * 16, subject="alice", data_id=data_id,
        permission=permission, issued_at=0, ttl_seconds=300, mac=b"\x00" * 32,
    )


@pytest.fixture
def store(tmp_path):
    validator = ScriptedValidator()
    s = OffchainStore(
        store_id="store-1", data_dir=tmp_path / "data", key=STORE_KEY,
        access=validator, entropy=SeededEntropy("store-tests"),
        clock=lambda: 1_700_000_000,
    )
    s.validator = validator  # test-only backref
    return s


PLAINTEXT = codec.canonical_serialize({"degree": "engineering", "name": "Alice Smith"})


def test_store_returns_link_and_salted_digest(store):
    link, digest = store.store_record("cert-001", PLAINTEXT, "alice")
    assert link.locator == "offchain://store-1/cert-001"
    salt, stored_plaintext = store._open("cert-001")
    assert stored_plaintext == PLAINTEXT
    assert codec.salted_hash(salt, PLAINTEXT) == digest


def test_duplicate_data_id_rejected(store):
    store.store_record("cert-001", PLAINTEXT, "alice")
    with pytest.raises(DuplicateDataId):
        store.store_record("cert-001", b"other", "alice")


def test_identical_plaintexts_get_distinct_digests(store):
    _, d1 = store.store_record("cert-001", PLAINTEXT, "alice")
    _, d2 = store.store_record("cert-002", PLAINTEXT, "bob")
    assert d1 != d2  # single-use salt per record


def test_unsafe_data_id_rejected(store):
    with pytest.raises(UnsupportedValue):
        store.store_record("../escape", PLAINTEXT, "alice")


def test_fetch_round_trip(store):
    store.store_record("cert-001", PLAINTEXT, "alice")
    assert store.fetch_record(make_token("cert-001", "READ"), "cert-001") == PLAINTEXT


def test_fetch_with_mismatched_token_rejected(store):
    store.store_record("cert-001", PLAINTEXT, "alice")
    with pytest.raises(TokenRejected) as err:
        store.fetch_record(make_token("cert-999", "READ"), "cert-001")
    assert err.value.reason == "mismatch"


def test_update_replaces_content_and_digest(store):
    _, d1 = store.store_record("cert-001", PLAINTEXT, "alice")
    new_plaintext = codec.canonical_serialize({"degree": "law", "name": "Alice Smith"})
    d2 = store.update_record(make_token("cert-001", "MODIFY"), "cert-001", new_plaintext)
    assert d2 != d1
    assert store.fetch_record(make_token("cert-001", "READ"), "cert-001") == new_plaintext


def test_update_with_read_token_rejected(store):
    store.store_record("cert-001", PLAINTEXT, "alice")
    with pytest.raises(TokenRejected):
        store.update_record(make_token("cert-001", "READ"), "cert-001", b"x")


def test_update_same_plaintext_changes_digest(store):
    _, d1 = store.store_record("cert-001", PLAINTEXT, "alice")
    d2 = store.update_record(make_token("cert-001", "MODIFY"), "cert-001", PLAINTEXT)
    assert d2 != d1  # fresh salt forced


def test_erase_then_fetch_is_erased(store):
    store.store_record("cert-001", PLAINTEXT, "alice")
    receipt = store.erase_record(make_token("cert-001", "DELETE"), "cert-001")
    assert receipt.erased_at == 1_700_000_000
    with pytest.raises(Erased):
        store.fetch_record(make_token("cert-001", "READ"), "cert-001")
    with pytest.raises(Erased):
        store.challenge_digest(make_token("cert-001", "VERIFY"), "cert-001", PLAINTEXT)


def test_erase_twice_already_erased(store):
    store.store_record("cert-001", PLAINTEXT, "alice")
    store.erase_record(make_token("cert-001", "DELETE"), "cert-001")
    with pytest.raises(AlreadyErased):
        store.erase_record(make_token("cert-001", "DELETE"), "cert-001")


def test_erase_leaves_zero_length_tombstone_plus_meta(store):
    store.store_record("cert-001", PLAINTEXT, "alice")
    store.erase_record(make_token("cert-001", "DELETE"), "cert-001")
    record_file = store.data_dir / "cert-001"
    meta_file = store.data_dir / "cert-001.meta"
    assert record_file.read_bytes() == b""
    assert meta_file.read_bytes().count(b"\n") == 1
    meta = store.record_meta("cert-001")
    assert meta.erased and meta.owner == "alice"


def test_fetch_missing_record_not_found(store):
    with pytest.raises(NotFound):
        store.fetch_record(make_token("ghost", "READ"), "ghost")


def test_challenge_digest_matches_anchor_without_releasing_salt(store):
    _, anchor = store.store_record("cert-001", PLAINTEXT, "alice")
    got = store.challenge_digest(make_token("cert-001", "VERIFY"), "cert-001", PLAINTEXT)
    assert got == anchor
    tampered = PLAINTEXT.replace(b"engineering", b"necromancy!")
    got2 = store.challenge_digest(make_token("cert-001", "VERIFY"), "cert-001", tampered)
    assert got2 != anchor


def test_persisted_files_contain_no_plaintext_or_salt(store):
    store.store_record("cert-001", PLAINTEXT, "alice")
    salt, _ = store._open("cert-001")
    blob = b"".join(p.read_bytes() for p in store.data_dir.iterdir())
    assert PLAINTEXT not in blob
    assert b"Alice Smith" not in blob
    assert salt.value not in blob
    assert salt.value.hex().encode() not in blob


def test_every_gated_op_validates_exactly_once(store):
    store.store_record("cert-001", PLAINTEXT, "alice")
    n0 = len(store.validator.calls)
    store.fetch_record(make_token("cert-001", "READ"), "cert-001")
    store.update_record(make_token("cert-001", "MODIFY"), "cert-001", b"v2")
    store.challenge_digest(make_token("cert-001", "VERIFY"), "cert-001", b"v2")
    store.erase_record(make_token("cert-001", "DELETE"), "cert-001")
    assert len(store.validator.calls) - n0 == 4
    assert [c[2] for c in store.validator.calls[n0:]] == [
        "READ", "MODIFY", "VERIFY", "DELETE"]


def test_restart_recovers_records(store, tmp_path):
    store.store_record("cert-001", PLAINTEXT, "alice")
    store.store_record("cert-002", b"other", "bob")
    store.erase_record(make_token("cert-002", "DELETE"), "cert-002")
    reopened = OffchainStore(
        store_id="store-1", data_dir=store.data_dir, key=STORE_KEY,
        access=store.validator, clock=lambda: 1_700_000_001,
    )
    assert reopened.fetch_record(make_token("cert-001", "READ"), "cert-001") == PLAINTEXT
    assert reopened.record_meta("cert-002").erased
    with pytest.raises(DuplicateDataId):
        reopened.store_record("cert-002", b"zombie", "bob")
