"""State machines over the chain: policy, tokens, integrity, audit."""

from __future__ import annotations

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from certledger import chain_apps, codec, ledger
from certledger.errors import DuplicateActiveRecord, NotAuthorized, UnknownDataId

from conftest import ACTOR_KEYS, VALIDATORS, fresh_chain, seeded_keypair

NOW = 1_700_000_100
DIGEST = codec.salted_hash(codec.Salt(b"\x21" * 32), b"payload-bytes")
DIGEST2 = codec.salted_hash(codec.Salt(b"\x22" * 32), b"payload-bytes-v2")


def submit_and_apply(state, payload, key=None, nonce=1):
    tx = ledger.make_transaction(key or seeded_keypair(f"eph-{len(state.audit)}-{nonce}"), nonce, payload)
    return chain_apps.apply_transaction(state, tx), tx


def register_consent(data_id, owner, registrar):
    return chain_apps.make_approval(
        owner, "consent",
        {"action": "register", "data_id": data_id, "owner": owner, "registrar": registrar},
        ACTOR_KEYS[owner],
    )


def grant_consent(data_id, owner, grantee, permission):
    return chain_apps.make_approval(
        owner, "consent",
        {"action": "grant", "data_id": data_id, "grantee": grantee, "permission": permission},
        ACTOR_KEYS[owner],
    )


def registered_state(genesis_state, data_id="cert-001", owner="alice", registrar="office-1"):
    state, _ = submit_and_apply(
        genesis_state,
        chain_apps.register_data_payload(
            data_id, owner, registrar, register_consent(data_id, owner, registrar)),
    )
    state, _ = submit_and_apply(
        state,
        chain_apps.integrity_record_payload(data_id, f"offchain://store-1/{data_id}", DIGEST),
    )
    return state


def granted_state(genesis_state, permission="READ", grantee="acme-corp", data_id="cert-001"):
    state = registered_state(genesis_state, data_id=data_id)
    state, tx = submit_and_apply(
        state,
        chain_apps.grant_payload(
            data_id, grantee, permission, "alice",
            consent=grant_consent(data_id, "alice", grantee, permission)),
    )
    return state, tx


# --- genesis -------------------------------------------------------------------

def test_genesis_initializes_registry(genesis_state):
    assert genesis_state.initialized
    assert genesis_state.actors["uni-it"].role == "DC"
    assert genesis_state.actors["dpa"].authority
    assert len(genesis_state.validators) == 3


def test_second_genesis_rejected(genesis_state):
    payload = chain_apps.genesis_payload(
        [VALIDATORS[0].verification_key], b"\x01" * 32, [])
    state, _ = submit_and_apply(genesis_state, payload)
    assert state.token_secret == genesis_state.token_secret
    assert state.audit[-1].outcome == "DENIED"
    assert state.audit[-1].operation == "REJECTED"
    assert state.audit[-1].detail == "already_initialized"


# --- register / grant / revoke ---------------------------------------------------

def test_register_data_sets_owner(genesis_state):
    state = registered_state(genesis_state)
    assert state.owners["cert-001"] == "alice"
    assert state.integrity["cert-001"].version == 1


def test_grant_with_owner_consent_creates_active_entry(genesis_state):
    state, tx = granted_state(genesis_state, "VERIFY")
    entry = state.policies["cert-001"][0]
    assert entry.status == "ACTIVE"
    assert entry.permission == "VERIFY"
    assert entry.consent_ref == tx.tx_id.hex()


def test_grant_without_consent_rejected_and_audited(genesis_state):
    state = registered_state(genesis_state)
    before = state.policies.get("cert-001", [])
    state2, _ = submit_and_apply(
        state, chain_apps.grant_payload("cert-001", "acme-corp", "READ", "alice"))
    assert state2.policies.get("cert-001", []) == before
    assert state2.audit[-1].outcome == "DENIED"
    assert state2.audit[-1].detail == "consent_missing"


def test_grant_with_wrong_signer_consent_rejected(genesis_state):
    state = registered_state(genesis_state)
    forged = chain_apps.make_approval(
        "alice", "consent",
        {"action": "grant", "data_id": "cert-001", "grantee": "acme-corp",
         "permission": "READ"},
        ACTOR_KEYS["bob"],  # signed by the wrong actor
    )
    state2, _ = submit_and_apply(
        state, chain_apps.grant_payload(
            "cert-001", "acme-corp", "READ", "alice", consent=forged))
    assert state2.policies.get("cert-001", []) == []
    assert state2.audit[-1].detail == "bad_consent"


def test_grant_unknown_grantee_rejected(genesis_state):
    state = registered_state(genesis_state)
    state2, _ = submit_and_apply(
        state, chain_apps.grant_payload(
            "cert-001", "nobody", "READ", "alice",
            consent=grant_consent("cert-001", "alice", "nobody", "READ")))
    assert state2.audit[-1].detail == "unknown_grantee"


def test_revoke_flips_entry_and_never_returns(genesis_state):
    state, _ = granted_state(genesis_state, "READ")
    state, _ = submit_and_apply(
        state, chain_apps.revoke_payload("cert-001", "acme-corp", "alice"))
    assert state.policies["cert-001"][0].status == "REVOKED"
    state2, _ = submit_and_apply(
        state, chain_apps.revoke_payload("cert-001", "acme-corp", "alice"))
    assert state2.audit[-1].detail == "no_active_grant"


def test_regrant_after_revoke_creates_new_entry(genesis_state):
    state, _ = granted_state(genesis_state, "READ")
    state, _ = submit_and_apply(
        state, chain_apps.revoke_payload("cert-001", "acme-corp", "alice"))
    state, _ = submit_and_apply(
        state, chain_apps.grant_payload(
            "cert-001", "acme-corp", "READ", "alice",
            consent=grant_consent("cert-001", "alice", "acme-corp", "READ")))
    entries = state.policies["cert-001"]
    assert [e.status for e in entries] == ["REVOKED", "ACTIVE"]


def test_revoke_by_unrelated_actor_rejected(genesis_state):
    state, _ = granted_state(genesis_state, "READ")
    state2, _ = submit_and_apply(
        state, chain_apps.revoke_payload("cert-001", "acme-corp", "bob"))
    assert state2.policies["cert-001"][0].status == "ACTIVE"
    assert state2.audit[-1].detail == "role"


# --- evaluate_access ---------------------------------------------------------------

def test_owner_gets_any_permission(genesis_state):
    state = registered_state(genesis_state)
    for permission in chain_apps.PERMISSIONS:
        decision = chain_apps.evaluate_access(state, "alice", "cert-001", permission, NOW)
        assert decision.granted
        assert decision.link == "offchain://store-1/cert-001"


def test_unknown_data_id_raises(genesis_state):
    with pytest.raises(UnknownDataId):
        chain_apps.evaluate_access(genesis_state, "alice", "nope", "READ", NOW)


def test_revoked_entry_denies_with_reason(genesis_state):
    state, _ = granted_state(genesis_state, "READ")
    state, _ = submit_and_apply(
        state, chain_apps.revoke_payload("cert-001", "acme-corp", "alice"))
    decision = chain_apps.evaluate_access(state, "acme-corp", "cert-001", "READ", NOW)
    assert (decision.granted, decision.reason) == (False, "revoked")


def test_wrong_permission_denied(genesis_state):
    state, _ = granted_state(genesis_state, "VERIFY")
    decision = chain_apps.evaluate_access(state, "acme-corp", "cert-001", "READ", NOW)
    assert (decision.granted, decision.reason) == (False, "wrong_permission")


def test_expired_grant_denied(genesis_state):
    state = registered_state(genesis_state)
    state, _ = submit_and_apply(
        state, chain_apps.grant_payload(
            "cert-001", "acme-corp", "READ", "alice",
            consent=grant_consent("cert-001", "alice", "acme-corp", "READ"),
            expiry=NOW - 1))
    decision = chain_apps.evaluate_access(state, "acme-corp", "cert-001", "READ", NOW)
    assert (decision.granted, decision.reason) == (False, "expired")


# --- tokens -----------------------------------------------------------------------

def test_token_round_trip(genesis_state, entropy):
    state, _ = granted_state(genesis_state, "READ")
    token = chain_apps.issue_token(
        state, "acme-corp", "cert-001", "READ", NOW, token_id=entropy.token_id())
    ok, reason = chain_apps.validate_token(state, token, "cert-001", "READ", NOW)
    assert (ok, reason) == (True, None)


def test_token_after_deny_not_authorized(genesis_state):
    state = registered_state(genesis_state)
    with pytest.raises(NotAuthorized):
        chain_apps.issue_token(state, "acme-corp", "cert-001", "READ", NOW)


def test_two_tokens_have_distinct_ids(genesis_state):
    state, _ = granted_state(genesis_state, "READ")
    t1 = chain_apps.issue_token(state, "acme-corp", "cert-001", "READ", NOW)
    t2 = chain_apps.issue_token(state, "acme-corp", "cert-001", "READ", NOW)
    assert t1.token_id != t2.token_id


def test_token_expiry_boundary(genesis_state):
    state, _ = granted_state(genesis_state, "READ")
    token = chain_apps.issue_token(state, "acme-corp", "cert-001", "READ", NOW,
                                   ttl_seconds=300)
    ok, _ = chain_apps.validate_token(state, token, "cert-001", "READ", NOW + 299)
    assert ok
    ok, reason = chain_apps.validate_token(state, token, "cert-001", "READ", NOW + 300)
    assert (ok, reason) == (False, "expired")
    ok, reason = chain_apps.validate_token(state, token, "cert-001", "READ", NOW + 301)
    assert (ok, reason) == (False, "expired")


def test_token_wrong_data_id_and_permission(genesis_state):
    state, _ = granted_state(genesis_state, "READ")
    token = chain_apps.issue_token(state, "acme-corp", "cert-001", "READ", NOW)
    ok, reason = chain_apps.validate_token(state, token, "cert-999", "READ", NOW)
    assert (ok, reason) == (False, "mismatch")
    ok, reason = chain_apps.validate_token(state, token, "cert-001", "MODIFY", NOW)
    assert (ok, reason) == (False, "mismatch")


def test_token_dies_on_revocation(genesis_state):
    state, _ = granted_state(genesis_state, "READ")
    token = chain_apps.issue_token(state, "acme-corp", "cert-001", "READ", NOW)
    state, _ = submit_and_apply(
        state, chain_apps.revoke_payload("cert-001", "acme-corp", "alice"))
    ok, reason = chain_apps.validate_token(state, token, "cert-001", "READ", NOW + 1)
    assert (ok, reason) == (False, "revoked")


def test_forged_mac_rejected(genesis_state):
    state, _ = granted_state(genesis_state, "READ")
    token = chain_apps.issue_token(state, "acme-corp", "cert-001", "READ", NOW)
    forged = dataclasses.replace(token, mac=bytes(32))
    ok, reason = chain_apps.validate_token(state, forged, "cert-001", "READ", NOW)
    assert (ok, reason) == (False, "bad_mac")
    upgraded = dataclasses.replace(token, permission="MODIFY")
    ok, reason = chain_apps.validate_token(state, upgraded, "cert-001", "MODIFY", NOW)
    assert (ok, reason) == (False, "bad_mac")


# --- integrity ----------------------------------------------------------------------

def test_record_then_update_bumps_version(genesis_state):
    state = registered_state(genesis_state)
    state, _ = submit_and_apply(
        state, chain_apps.integrity_update_payload(
            "cert-001", "offchain://store-1/cert-001", DIGEST2))
    record = state.integrity["cert-001"]
    assert record.version == 2
    assert record.digest == DIGEST2


def test_second_create_rejected(genesis_state):
    state = registered_state(genesis_state)
    state2, _ = submit_and_apply(
        state, chain_apps.integrity_record_payload(
            "cert-001", "offchain://store-1/cert-001", DIGEST2))
    assert state2.integrity["cert-001"].digest == DIGEST
    assert state2.audit[-1].detail == "duplicate_record"
    with pytest.raises(DuplicateActiveRecord):
        chain_apps.record_integrity(state, "cert-001", "x", DIGEST2)


def test_verify_integrity_states(genesis_state):
    state = registered_state(genesis_state)
    assert chain_apps.verify_integrity(state, "cert-001", DIGEST) == "VALID"
    assert chain_apps.verify_integrity(state, "cert-001", DIGEST2) == "INVALID"
    assert chain_apps.verify_integrity(state, "cert-404", DIGEST) == "UNKNOWN"
    state, _ = submit_and_apply(
        state, chain_apps.integrity_erase_payload("cert-001", NOW))
    assert chain_apps.verify_integrity(state, "cert-001", DIGEST) == "ERASED"


def test_erase_keeps_digest_forever(genesis_state):
    state = registered_state(genesis_state)
    state, _ = submit_and_apply(
        state, chain_apps.integrity_erase_payload("cert-001", NOW))
    record = state.integrity["cert-001"]
    assert record.status == "ERASED"
    assert record.digest == DIGEST  # chain immutability: anchor never changes
    state2, _ = submit_and_apply(
        state, chain_apps.integrity_erase_payload("cert-001", NOW + 1))
    assert state2.audit[-1].detail == "already_erased"


# --- audit ---------------------------------------------------------------------------

def test_audit_seq_dense(genesis_state):
    state = genesis_state
    for i in range(5):
        state, _ = submit_and_apply(
            state, chain_apps.audit_payload("UC4", "alice", "GRANTED", f"d{i}", NOW + i,
                                            data_id="cert-001"))
    assert [e.seq for e in state.audit] == list(range(5))


def test_owner_queries_own_data(genesis_state):
    state = registered_state(genesis_state)
    state, _ = submit_and_apply(
        state, chain_apps.audit_payload("UC1", "office-1", "GRANTED", "ok", NOW,
                                        data_id="cert-001"))
    entries = chain_apps.query_audit_log(state, "alice", data_id="cert-001")
    assert [e.operation for e in entries] == ["UC1"]


def test_recipient_cannot_query_others_log(genesis_state):
    state = registered_state(genesis_state)
    with pytest.raises(NotAuthorized):
        chain_apps.query_audit_log(state, "acme-corp", data_id="cert-001")
    with pytest.raises(NotAuthorized):
        chain_apps.query_audit_log(state, "alice")  # no filter: full log denied


def test_authority_and_controller_see_everything(genesis_state):
    state = registered_state(genesis_state)
    assert chain_apps.query_audit_log(state, "dpa") == state.audit
    assert chain_apps.query_audit_log(state, "uni-it") == state.audit


# --- key attestation ------------------------------------------------------------------

def test_attestation_rotates_actor_key(genesis_state):
    new_key = seeded_keypair("alice-2")
    attestation = chain_apps.make_attestation(
        "alice", new_key.verification_key, ACTOR_KEYS["alice"])
    state, _ = submit_and_apply(
        genesis_state,
        chain_apps.audit_payload("UC4", "alice", "DENIED", "probe", NOW,
                                 attestation=attestation))
    assert state.actors["alice"].current_key == new_key.verification_key
    assert state.actors["alice"].keys[0] == ACTOR_KEYS["alice"].verification_key


def test_attestation_by_stale_key_rejected(genesis_state):
    k2 = seeded_keypair("alice-2")
    k3 = seeded_keypair("alice-3")
    att = chain_apps.make_attestation("alice", k2.verification_key, ACTOR_KEYS["alice"])
    state, _ = submit_and_apply(
        genesis_state,
        chain_apps.audit_payload("UC4", "alice", "DENIED", "p", NOW, attestation=att))
    stale = chain_apps.make_attestation("alice", k3.verification_key, ACTOR_KEYS["alice"])
    state2, _ = submit_and_apply(
        state, chain_apps.audit_payload("UC4", "alice", "DENIED", "p2", NOW,
                                        attestation=stale))
    assert state2.actors["alice"].current_key == k2.verification_key
    assert state2.audit[-1].detail == "bad_attestation"


def test_consent_with_attestation_rotates_then_verifies(genesis_state):
    state = registered_state(genesis_state)
    fresh = seeded_keypair("alice-fresh")
    att = chain_apps.make_attestation("alice", fresh.verification_key, ACTOR_KEYS["alice"])
    consent = chain_apps.make_approval(
        "alice", "consent",
        {"action": "grant", "data_id": "cert-001", "grantee": "acme-corp",
         "permission": "VERIFY"},
        fresh, attestation=att)
    state, _ = submit_and_apply(
        state, chain_apps.grant_payload(
            "cert-001", "acme-corp", "VERIFY", "alice", consent=consent))
    assert state.policies["cert-001"][0].status == "ACTIVE"
    assert state.actors["alice"].current_key == fresh.verification_key


payload_values = st.recursive(
    st.one_of(st.booleans(), st.integers(-2**40, 2**40), st.text(max_size=12),
              st.binary(max_size=12)),
    lambda kids: st.one_of(st.lists(kids, max_size=3),
                           st.dictionaries(st.text(max_size=8), kids, max_size=3)),
    max_leaves=8,
)
hostile_payloads = st.fixed_dictionaries(
    {"kind": st.sampled_from(sorted(chain_apps.PAYLOAD_KINDS))},
    optional={
        name: payload_values
        for name in ("data_id", "owner", "registrar", "grantee", "permission",
                     "granted_by", "requested_by", "consent", "expiry", "link",
                     "digest", "approvals", "erased_at", "operation", "actor",
                     "outcome", "detail", "timestamp", "attestation")
    },
)


_FUZZ_STATE: list = []


@settings(max_examples=300, deadline=None)
@given(hostile_payloads)
def test_apply_is_total_over_arbitrary_payloads(payload):
    # never raises: either the payload applies or the state gains exactly
    # one DENIED audit entry (apply is pure, so one base state serves all)
    if not _FUZZ_STATE:
        _FUZZ_STATE.append(ledger.replay_state(fresh_chain()))
    state = _FUZZ_STATE[0]
    tx = ledger.make_transaction(seeded_keypair("hostile"), 1, payload)
    result = chain_apps.apply_transaction(state, tx)
    assert isinstance(result, chain_apps.ChainState)
    grew = len(result.audit) - len(state.audit)
    assert grew in (0, 1)
    if grew == 1 and result.audit[-1].operation == "REJECTED":
        assert result.audit[-1].outcome == "DENIED"


def test_rejection_is_atomic_despite_attestation(genesis_state):
    # Consent carries a valid attestation but the grant still fails
    # (unknown grantee): the rotation must not survive.
    state = registered_state(genesis_state)
    fresh = seeded_keypair("alice-fresh")
    att = chain_apps.make_attestation("alice", fresh.verification_key, ACTOR_KEYS["alice"])
    consent = chain_apps.make_approval(
        "alice", "consent",
        {"action": "grant", "data_id": "cert-001", "grantee": "ghost",
         "permission": "READ"},
        fresh, attestation=att)
    state2, _ = submit_and_apply(
        state, chain_apps.grant_payload(
            "cert-001", "ghost", "READ", "alice", consent=consent))
    assert state2.actors["alice"].current_key == ACTOR_KEYS["alice"].verification_key
    assert state2.audit[-1].outcome == "DENIED"
