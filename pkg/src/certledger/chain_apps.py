"""On-chain state machines hosted by the ledger.

Three logical functions share one chain, separated by payload kind:

* ``policy.*``    — data-ownership registration, consent-backed grants,
                    revocations, and the actor/key registry (access control),
* ``integrity.*`` — salted-digest anchors for off-chain records,
* ``audit.entry`` — the append-only audit log.

``apply_transaction`` is a total, pure function: a payload that violates
a rule leaves the state unchanged except for a synthesized DENIED audit
entry, so rejected writes are themselves part of the permanent record.
All time used in transitions comes from transaction fields, never from
the wall clock, which keeps replay deterministic.
"""

from __future__ import annotations

import hmac as hmac_mod
import hashlib
import re
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from . import codec
from .errors import (
    DuplicateActiveRecord,
    MalformedKey,
    MalformedSignature,
    NotAuthorized,
    UnknownDataId,
    UnsupportedValue,
)
from .ledger import Transaction

PAYLOAD_KINDS = frozenset({
    "policy.genesis",
    "policy.register_data",
    "policy.grant",
    "policy.revoke",
    "integrity.record",
    "integrity.update",
    "integrity.erase",
    "audit.entry",
})

ROLES = ("DO", "DC", "DP", "RECIPIENT")
PERMISSIONS = ("READ", "VERIFY", "MODIFY", "DELETE")
UC_TAGS = tuple(f"UC{i}" for i in range(1, 9))
AUDIT_OPERATIONS = UC_TAGS + ("TOKEN_VALIDATE", "NOTIFY", "REJECTED")
OUTCOMES = ("GRANTED", "DENIED")
DEFAULT_TOKEN_TTL = 300

_ID_RE = re.compile(r"^[A-Za-z0-9._-]{1,128}$")


def valid_id(value: Any) -> bool:
    return isinstance(value, str) and bool(_ID_RE.match(value))


# --- state ---------------------------------------------------------------


@dataclass
class ActorRecord:
    actor_id: str
    role: str
    authority: bool
    keys: list[bytes]

    @property
    def current_key(self) -> bytes:
        return self.keys[-1]


@dataclass(frozen=True)
class AccessPolicyEntry:
    data_id: str
    grantee: str
    permission: str
    granted_by: str
    status: str  # ACTIVE | REVOKED
    consent_ref: str  # tx_id (hex) of the consent-carrying transaction
    expiry: Optional[int] = None

    def active_at(self, now: int) -> bool:
        if self.status != "ACTIVE":
            return False
        return self.expiry is None or now < self.expiry


@dataclass(frozen=True)
class IntegrityRecord:
    data_id: str
    link: str
    digest: codec.SaltedDigest
    version: int
    status: str  # ACTIVE | ERASED


@dataclass(frozen=True)
class AuditEntry:
    seq: int
    timestamp: int
    actor: str
    operation: str
    data_id: Optional[str]
    outcome: str
    detail: str

    def to_value(self) -> dict:
        value = {
            "actor": self.actor,
            "detail": self.detail,
            "operation": self.operation,
            "outcome": self.outcome,
            "seq": self.seq,
            "timestamp": self.timestamp,
        }
        if self.data_id is not None:
            value["data_id"] = self.data_id
        return value


@dataclass(frozen=True)
class CapabilityToken:
    """Short-lived credential proving a GRANT decision; the MAC is keyed
    by the chain-held token secret and re-checked against current policy
    at every use."""

    token_id: bytes
    subject: str
    data_id: str
    permission: str
    issued_at: int
    ttl_seconds: int
    mac: bytes

    def body_value(self) -> dict:
        return {
            "data_id": self.data_id,
            "issued_at": self.issued_at,
            "permission": self.permission,
            "subject": self.subject,
            "token_id": self.token_id,
            "ttl_seconds": self.ttl_seconds,
        }

    def to_value(self) -> dict:
        value = self.body_value()
        value["mac"] = self.mac
        return value


def _token_mac(secret: bytes, body: dict) -> bytes:
    return hmac_mod.new(secret, codec.canonical_serialize(body), hashlib.sha256).digest()


@dataclass
class ChainState:
    """Everything reproducible from the chain alone."""

    policies: dict[str, list[AccessPolicyEntry]] = field(default_factory=dict)
    integrity: dict[str, IntegrityRecord] = field(default_factory=dict)
    audit: list[AuditEntry] = field(default_factory=list)
    owners: dict[str, str] = field(default_factory=dict)
    nonces: dict[bytes, int] = field(default_factory=dict)
    token_secret: bytes = b""
    actors: dict[str, ActorRecord] = field(default_factory=dict)
    validators: tuple[bytes, ...] = ()

    @classmethod
    def empty(cls) -> "ChainState":
        return cls()

    @property
    def initialized(self) -> bool:
        return bool(self.token_secret)

    def clone(self) -> "ChainState":
        return ChainState(
            policies={k: list(v) for k, v in self.policies.items()},
            integrity=dict(self.integrity),
            audit=list(self.audit),
            owners=dict(self.owners),
            nonces=dict(self.nonces),
            token_secret=self.token_secret,
            actors={
                k: ActorRecord(a.actor_id, a.role, a.authority, list(a.keys))
                for k, a in self.actors.items()
            },
            validators=self.validators,
        )

    def actor_key(self, actor_id: str) -> bytes:
        return self.actors[actor_id].current_key

    def is_authority(self, actor_id: str) -> bool:
        record = self.actors.get(actor_id)
        return record is not None and record.authority


# --- signed sub-payloads ---------------------------------------------------


def attestation_message(actor: str, new_key: bytes) -> bytes:
    return codec.canonical_serialize(
        {"action": "attest_key", "actor": actor, "new_key": new_key}
    )


def make_attestation(actor: str, new_key: bytes, previous: codec.KeyPair) -> dict:
    """Bind a fresh verification key to an actor: the attestation is
    signed by the actor's previous (currently registered) key."""
    return {
        "actor": actor,
        "new_key": new_key,
        "signature": codec.sign(previous, attestation_message(actor, new_key)),
    }


def approval_message(actor: str, purpose: str, claims: dict) -> bytes:
    return codec.canonical_serialize(
        {"actor": actor, "claims": claims, "purpose": purpose}
    )


def make_approval(actor: str, purpose: str, claims: dict, key: codec.KeyPair,
                  attestation: Optional[dict] = None) -> dict:
    approval = {
        "actor": actor,
        "purpose": purpose,
        "claims": claims,
        "signature": codec.sign(key, approval_message(actor, purpose, claims)),
    }
    if attestation is not None:
        approval["attestation"] = attestation
    return approval


class _Reject(Exception):
    def __init__(self, reason: str, actor: str = "", data_id: Optional[str] = None):
        super().__init__(reason)
        self.reason = reason
        self.actor = actor
        self.data_id = data_id


def _verify(key: bytes, message: bytes, signature: Any) -> bool:
    try:
        return codec.verify_signature(key, message, codec._as_bytes(signature))
    except (MalformedKey, MalformedSignature, UnsupportedValue):
        return False


def _apply_attestation(state: ChainState, attestation: Any) -> None:
    if not isinstance(attestation, dict) or set(attestation) != {
        "actor", "new_key", "signature",
    }:
        raise _Reject("bad_attestation")
    actor_id = attestation["actor"]
    record = state.actors.get(actor_id) if isinstance(actor_id, str) else None
    if record is None:
        raise _Reject("bad_attestation", actor=str(actor_id))
    try:
        new_key = codec._as_bytes(attestation["new_key"])
    except UnsupportedValue:
        raise _Reject("bad_attestation", actor=actor_id) from None
    if len(new_key) != codec.KEY_LEN:
        raise _Reject("bad_attestation", actor=actor_id)
    message = attestation_message(actor_id, new_key)
    if not _verify(record.current_key, message, attestation["signature"]):
        raise _Reject("bad_attestation", actor=actor_id)
    record.keys.append(new_key)


def _verify_approval(state: ChainState, approval: Any, *, actor: str,
                     purpose: str, claims: Optional[dict] = None) -> None:
    """Check a signed approval against the registry, applying any key
    attestation it carries first. Mutates the working state's registry."""
    if not isinstance(approval, dict):
        raise _Reject(f"{purpose}_missing", actor=actor)
    expected_keys = {"actor", "purpose", "claims", "signature"}
    if set(approval) - {"attestation"} != expected_keys:
        raise _Reject(f"bad_{purpose}", actor=actor)
    if approval["actor"] != actor or approval["purpose"] != purpose:
        raise _Reject(f"bad_{purpose}", actor=actor)
    if claims is not None and approval["claims"] != claims:
        raise _Reject(f"bad_{purpose}", actor=actor)
    if "attestation" in approval:
        attestation = approval["attestation"]
        if not isinstance(attestation, dict) or attestation.get("actor") != actor:
            raise _Reject(f"bad_{purpose}", actor=actor)
        _apply_attestation(state, attestation)
    record = state.actors.get(actor)
    if record is None:
        raise _Reject(f"bad_{purpose}", actor=actor)
    message = approval_message(actor, purpose, approval["claims"])
    if not _verify(record.current_key, message, approval["signature"]):
        raise _Reject(f"bad_{purpose}", actor=actor)


# --- payload builders --------------------------------------------------------


def genesis_payload(validators: list[bytes], token_secret: bytes,
                    actors: list[dict]) -> dict:
    return {
        "kind": "policy.genesis",
        "validators": list(validators),
        "token_secret": token_secret,
        "actors": actors,
    }


def actor_entry(actor_id: str, role: str, key: bytes, authority: bool = False) -> dict:
    return {"actor_id": actor_id, "authority": authority, "key": key, "role": role}


def register_data_payload(data_id: str, owner: str, registrar: str, consent: dict,
                          attestation: Optional[dict] = None) -> dict:
    payload = {
        "kind": "policy.register_data",
        "data_id": data_id,
        "owner": owner,
        "registrar": registrar,
        "consent": consent,
    }
    if attestation is not None:
        payload["attestation"] = attestation
    return payload


def grant_payload(data_id: str, grantee: str, permission: str, granted_by: str,
                  consent: Optional[dict] = None, expiry: Optional[int] = None,
                  attestation: Optional[dict] = None) -> dict:
    payload = {
        "kind": "policy.grant",
        "data_id": data_id,
        "grantee": grantee,
        "permission": permission,
        "granted_by": granted_by,
    }
    if consent is not None:
        payload["consent"] = consent
    if expiry is not None:
        payload["expiry"] = expiry
    if attestation is not None:
        payload["attestation"] = attestation
    return payload


def revoke_payload(data_id: str, grantee: str, requested_by: str,
                   permission: Optional[str] = None,
                   attestation: Optional[dict] = None) -> dict:
    payload = {
        "kind": "policy.revoke",
        "data_id": data_id,
        "grantee": grantee,
        "requested_by": requested_by,
    }
    if permission is not None:
        payload["permission"] = permission
    if attestation is not None:
        payload["attestation"] = attestation
    return payload


def integrity_record_payload(data_id: str, link: str, digest: codec.SaltedDigest) -> dict:
    return {
        "kind": "integrity.record",
        "data_id": data_id,
        "link": link,
        "digest": digest.to_value(),
    }


def integrity_update_payload(data_id: str, link: str, digest: codec.SaltedDigest,
                             approvals: Optional[list[dict]] = None) -> dict:
    payload = {
        "kind": "integrity.update",
        "data_id": data_id,
        "link": link,
        "digest": digest.to_value(),
    }
    if approvals:
        payload["approvals"] = approvals
    return payload


def integrity_erase_payload(data_id: str, erased_at: int,
                            approvals: Optional[list[dict]] = None) -> dict:
    payload = {
        "kind": "integrity.erase",
        "data_id": data_id,
        "erased_at": erased_at,
    }
    if approvals:
        payload["approvals"] = approvals
    return payload


def audit_payload(operation: str, actor: str, outcome: str, detail: str,
                  timestamp: int, data_id: Optional[str] = None,
                  attestation: Optional[dict] = None) -> dict:
    payload = {
        "kind": "audit.entry",
        "operation": operation,
        "actor": actor,
        "outcome": outcome,
        "detail": detail,
        "timestamp": timestamp,
    }
    if data_id is not None:
        payload["data_id"] = data_id
    if attestation is not None:
        payload["attestation"] = attestation
    return payload


# --- transition function -------------------------------------------------


def apply_transaction(state: ChainState, tx: Transaction) -> ChainState:
    """Pure, total state transition. Invalid payloads leave the state
    unchanged apart from a synthesized DENIED audit entry."""
    work = state.clone()
    work.nonces[tx.submitter] = tx.nonce
    payload = tx.payload
    try:
        kind = payload.get("kind")
        if kind not in PAYLOAD_KINDS:
            raise _Reject("unknown_payload_kind")
        if kind != "policy.genesis" and not work.initialized:
            raise _Reject("uninitialized_chain")
        if "attestation" in payload and kind != "audit.entry":
            _apply_attestation(work, payload["attestation"])
        handler = _HANDLERS[kind]
        try:
            handler(work, tx)
        except _Reject:
            raise
        except (TypeError, KeyError, AttributeError, ValueError):
            # payloads are untrusted input; shape surprises must reject,
            # never escape (totality)
            raise _Reject("malformed_payload") from None
        return work
    except _Reject as rej:
        rejected = state.clone()
        rejected.nonces[tx.submitter] = tx.nonce
        rejected.audit.append(AuditEntry(
            seq=len(rejected.audit),
            timestamp=0,  # rejected writes carry no attested time
            actor=rej.actor,
            operation="REJECTED",
            data_id=rej.data_id,
            outcome="DENIED",
            detail=rej.reason,
        ))
        return rejected


def _require(condition: bool, reason: str, actor: str = "",
             data_id: Optional[str] = None) -> None:
    if not condition:
        raise _Reject(reason, actor=actor, data_id=data_id)


def _apply_genesis(state: ChainState, tx: Transaction) -> None:
    payload = tx.payload
    _require(not state.initialized, "already_initialized")
    expected = {"kind", "validators", "token_secret", "actors"}
    _require(set(payload) == expected, "malformed_genesis")
    try:
        validators = tuple(codec._as_bytes(v) for v in payload["validators"])
        secret = codec._as_bytes(payload["token_secret"])
    except (UnsupportedValue, TypeError):
        raise _Reject("malformed_genesis") from None
    _require(bool(validators), "malformed_genesis")
    _require(len(secret) == 32, "malformed_genesis")
    actors: dict[str, ActorRecord] = {}
    entries = payload["actors"]
    _require(isinstance(entries, list), "malformed_genesis")
    for entry in entries:
        _require(
            isinstance(entry, dict)
            and set(entry) == {"actor_id", "authority", "key", "role"},
            "malformed_genesis",
        )
        actor_id = entry["actor_id"]
        _require(valid_id(actor_id), "malformed_genesis")
        _require(actor_id not in actors, "malformed_genesis")
        _require(entry["role"] in ROLES, "malformed_genesis")
        _require(isinstance(entry["authority"], bool), "malformed_genesis")
        try:
            key = codec._as_bytes(entry["key"])
        except UnsupportedValue:
            raise _Reject("malformed_genesis") from None
        _require(len(key) == codec.KEY_LEN, "malformed_genesis")
        actors[actor_id] = ActorRecord(actor_id, entry["role"], entry["authority"], [key])
    state.validators = validators
    state.token_secret = secret
    state.actors = actors


def _apply_register_data(state: ChainState, tx: Transaction) -> None:
    payload = tx.payload
    expected = {"kind", "data_id", "owner", "registrar", "consent"}
    _require(set(payload) - {"attestation"} == expected, "malformed_payload")
    data_id, owner, registrar = payload["data_id"], payload["owner"], payload["registrar"]
    _require(valid_id(data_id), "bad_data_id")
    _require(data_id not in state.owners, "duplicate_data_id",
             actor=str(registrar), data_id=data_id)
    _require(owner in state.actors, "unknown_owner", actor=str(registrar), data_id=data_id)
    registrar_record = state.actors.get(registrar)
    _require(registrar_record is not None, "unknown_registrar", data_id=data_id)
    _require(registrar_record.role in ("DC", "DP"), "role",
             actor=registrar, data_id=data_id)
    _verify_approval(
        state, payload["consent"], actor=owner, purpose="consent",
        claims={"action": "register", "data_id": data_id,
                "owner": owner, "registrar": registrar},
    )
    state.owners[data_id] = owner


def _apply_grant(state: ChainState, tx: Transaction) -> None:
    payload = tx.payload
    expected = {"kind", "data_id", "grantee", "permission", "granted_by"}
    _require(set(payload) - {"attestation", "consent", "expiry"} == expected,
             "malformed_payload")
    data_id, grantee = payload["data_id"], payload["grantee"]
    permission, granted_by = payload["permission"], payload["granted_by"]
    _require(data_id in state.owners, "unknown_data",
             actor=str(granted_by), data_id=str(data_id))
    owner = state.owners[data_id]
    _require(grantee in state.actors, "unknown_grantee",
             actor=str(granted_by), data_id=data_id)
    _require(permission in PERMISSIONS, "bad_permission",
             actor=str(granted_by), data_id=data_id)
    _require(granted_by in state.actors, "unknown_actor", data_id=data_id)
    expiry = payload.get("expiry")
    if expiry is not None:
        _require(isinstance(expiry, int) and not isinstance(expiry, bool),
                 "malformed_payload", actor=granted_by, data_id=data_id)
    consent = payload.get("consent")
    needs_consent = permission in ("READ", "VERIFY") and grantee != owner
    if needs_consent:
        _require(consent is not None, "consent_missing",
                 actor=granted_by, data_id=data_id)
    if consent is not None:
        _verify_approval(
            state, consent, actor=owner, purpose="consent",
            claims={"action": "grant", "data_id": data_id,
                    "grantee": grantee, "permission": permission},
        )
    state.policies.setdefault(data_id, []).append(AccessPolicyEntry(
        data_id=data_id,
        grantee=grantee,
        permission=permission,
        granted_by=granted_by,
        status="ACTIVE",
        consent_ref=tx.tx_id.hex() if consent is not None else "",
        expiry=expiry,
    ))


def _apply_revoke(state: ChainState, tx: Transaction) -> None:
    payload = tx.payload
    expected = {"kind", "data_id", "grantee", "requested_by"}
    _require(set(payload) - {"attestation", "permission"} == expected,
             "malformed_payload")
    data_id, grantee = payload["data_id"], payload["grantee"]
    requested_by, permission = payload["requested_by"], payload.get("permission")
    _require(data_id in state.owners, "unknown_data",
             actor=str(requested_by), data_id=str(data_id))
    requester = state.actors.get(requested_by)
    _require(requester is not None, "unknown_actor", data_id=data_id)
    _require(
        requested_by == state.owners[data_id] or requester.role in ("DC", "DP"),
        "role", actor=requested_by, data_id=data_id,
    )
    if permission is not None:
        _require(permission in PERMISSIONS, "bad_permission",
                 actor=requested_by, data_id=data_id)
    entries = state.policies.get(data_id, [])
    revoked = False
    for i, entry in enumerate(entries):
        if entry.grantee != grantee or entry.status != "ACTIVE":
            continue
        if permission is not None and entry.permission != permission:
            continue
        entries[i] = replace(entry, status="REVOKED")
        revoked = True
    _require(revoked, "no_active_grant", actor=requested_by, data_id=data_id)


def _decode_digest(value: Any) -> codec.SaltedDigest:
    try:
        return codec.SaltedDigest.from_value(value)
    except UnsupportedValue:
        raise _Reject("malformed_digest") from None


def _apply_integrity_record(state: ChainState, tx: Transaction) -> None:
    payload = tx.payload
    expected = {"kind", "data_id", "link", "digest"}
    _require(set(payload) - {"attestation"} == expected, "malformed_payload")
    data_id, link = payload["data_id"], payload["link"]
    _require(valid_id(data_id), "bad_data_id")
    _require(isinstance(link, str) and bool(link), "malformed_payload", data_id=data_id)
    _require(data_id in state.owners, "unregistered_data", data_id=data_id)
    _require(data_id not in state.integrity, "duplicate_record", data_id=data_id)
    state.integrity[data_id] = IntegrityRecord(
        data_id=data_id, link=link, digest=_decode_digest(payload["digest"]),
        version=1, status="ACTIVE",
    )


def _verify_payload_approvals(state: ChainState, payload: dict) -> None:
    approvals = payload.get("approvals", [])
    _require(isinstance(approvals, list), "malformed_payload")
    for approval in approvals:
        _require(isinstance(approval, dict), "malformed_payload")
        actor = approval.get("actor")
        purpose = approval.get("purpose")
        _require(isinstance(actor, str) and isinstance(purpose, str),
                 "malformed_payload")
        _verify_approval(state, approval, actor=actor, purpose=purpose)


def _apply_integrity_update(state: ChainState, tx: Transaction) -> None:
    payload = tx.payload
    expected = {"kind", "data_id", "link", "digest"}
    _require(set(payload) - {"attestation", "approvals"} == expected,
             "malformed_payload")
    data_id = payload["data_id"]
    record = state.integrity.get(data_id)
    _require(record is not None, "unknown_data", data_id=str(data_id))
    _require(record.status == "ACTIVE", "erased", data_id=data_id)
    _verify_payload_approvals(state, payload)
    state.integrity[data_id] = replace(
        record,
        link=payload["link"],
        digest=_decode_digest(payload["digest"]),
        version=record.version + 1,
    )


def _apply_integrity_erase(state: ChainState, tx: Transaction) -> None:
    payload = tx.payload
    expected = {"kind", "data_id", "erased_at"}
    _require(set(payload) - {"attestation", "approvals"} == expected,
             "malformed_payload")
    data_id, erased_at = payload["data_id"], payload["erased_at"]
    record = state.integrity.get(data_id)
    _require(record is not None, "unknown_data", data_id=str(data_id))
    _require(record.status == "ACTIVE", "already_erased", data_id=data_id)
    _require(isinstance(erased_at, int) and not isinstance(erased_at, bool),
             "malformed_payload", data_id=data_id)
    _verify_payload_approvals(state, payload)
    # The digest stays on-chain forever; only its verification power ends.
    state.integrity[data_id] = replace(record, status="ERASED")


def _apply_audit_entry(state: ChainState, tx: Transaction) -> None:
    payload = tx.payload
    expected = {"kind", "operation", "actor", "outcome", "detail", "timestamp"}
    _require(set(payload) - {"attestation", "data_id"} == expected,
             "malformed_payload")
    operation, outcome = payload["operation"], payload["outcome"]
    actor, detail = payload["actor"], payload["detail"]
    timestamp, data_id = payload["timestamp"], payload.get("data_id")
    _require(operation in AUDIT_OPERATIONS, "bad_operation")
    _require(outcome in OUTCOMES, "bad_outcome")
    _require(isinstance(actor, str) and len(actor) <= 128, "bad_actor")
    _require(isinstance(detail, str) and len(detail) <= 256, "bad_detail")
    _require(isinstance(timestamp, int) and not isinstance(timestamp, bool),
             "bad_timestamp")
    _require(data_id is None or isinstance(data_id, str), "bad_data_id")
    if "attestation" in payload:
        _apply_attestation(state, payload["attestation"])
    state.audit.append(AuditEntry(
        seq=len(state.audit),
        timestamp=timestamp,
        actor=actor,
        operation=operation,
        data_id=data_id,
        outcome=outcome,
        detail=detail,
    ))


_HANDLERS = {
    "policy.genesis": _apply_genesis,
    "policy.register_data": _apply_register_data,
    "policy.grant": _apply_grant,
    "policy.revoke": _apply_revoke,
    "integrity.record": _apply_integrity_record,
    "integrity.update": _apply_integrity_update,
    "integrity.erase": _apply_integrity_erase,
    "audit.entry": _apply_audit_entry,
}


# --- queries -----------------------------------------------------------------


@dataclass(frozen=True)
class Decision:
    granted: bool
    reason: Optional[str] = None
    link: Optional[str] = None


def evaluate_access(state: ChainState, actor: str, data_id: str,
                    permission: str, now: int) -> Decision:
    """GRANT iff the actor owns the data or holds an ACTIVE unexpired
    entry for exactly this permission. Flat permission model: no
    permission implies another."""
    if data_id not in state.owners:
        raise UnknownDataId(data_id)
    record = state.integrity.get(data_id)
    link = record.link if record is not None else None
    if state.owners[data_id] == actor:
        return Decision(True, None, link)
    entries = [e for e in state.policies.get(data_id, []) if e.grantee == actor]
    exact = [e for e in entries if e.permission == permission]
    if any(e.active_at(now) for e in exact):
        return Decision(True, None, link)
    if any(e.status == "ACTIVE" for e in exact):  # ACTIVE but expired
        return Decision(False, "expired")
    if any(e.status == "REVOKED" for e in exact):
        return Decision(False, "revoked")
    if any(e.status == "ACTIVE" for e in entries):
        return Decision(False, "wrong_permission")
    return Decision(False, "no_grant")


def issue_token(state: ChainState, actor: str, data_id: str, permission: str,
                now: int, ttl_seconds: int = DEFAULT_TOKEN_TTL,
                token_id: Optional[bytes] = None) -> CapabilityToken:
    decision = evaluate_access(state, actor, data_id, permission, now)
    if not decision.granted:
        raise NotAuthorized(decision.reason or "denied")
    if token_id is None:
        import secrets
        token_id = secrets.token_bytes(16)
    body = {
        "data_id": data_id,
        "issued_at": now,
        "permission": permission,
        "subject": actor,
        "token_id": token_id,
        "ttl_seconds": ttl_seconds,
    }
    return CapabilityToken(
        token_id=token_id, subject=actor, data_id=data_id, permission=permission,
        issued_at=now, ttl_seconds=ttl_seconds,
        mac=_token_mac(state.token_secret, body),
    )


def validate_token(state: ChainState, token: CapabilityToken, data_id: str,
                   permission: str, now: int) -> tuple[bool, Optional[str]]:
    """True iff the MAC is genuine, the token is fresh, it names exactly
    this (data_id, permission), and the underlying policy still grants
    access right now. Revocation wins over any outstanding token."""
    if _token_mac(state.token_secret, token.body_value()) != token.mac:
        return False, "bad_mac"
    if token.data_id != data_id or token.permission != permission:
        return False, "mismatch"
    if now >= token.issued_at + token.ttl_seconds:
        return False, "expired"
    if token.data_id not in state.owners:
        return False, "unknown_data"
    decision = evaluate_access(state, token.subject, data_id, permission, now)
    if not decision.granted:
        return False, decision.reason
    return True, None


def record_integrity(state: ChainState, data_id: str, link: str,
                     digest: codec.SaltedDigest) -> tuple[ChainState, IntegrityRecord]:
    """Anchor a fresh off-chain record; versioned updates go through the
    integrity.update payload instead."""
    if data_id in state.integrity:
        raise DuplicateActiveRecord(data_id)
    work = state.clone()
    record = IntegrityRecord(data_id=data_id, link=link, digest=digest,
                             version=1, status="ACTIVE")
    work.integrity[data_id] = record
    return work, record


def verify_integrity(state: ChainState, data_id: str,
                     candidate: codec.SaltedDigest) -> str:
    record = state.integrity.get(data_id)
    if record is None:
        return "UNKNOWN"
    if record.status == "ERASED":
        return "ERASED"
    return "VALID" if record.digest == candidate else "INVALID"


def append_audit(state: ChainState, *, timestamp: int, actor: str, operation: str,
                 outcome: str, detail: str,
                 data_id: Optional[str] = None) -> tuple[ChainState, AuditEntry]:
    work = state.clone()
    entry = AuditEntry(
        seq=len(work.audit), timestamp=timestamp, actor=actor,
        operation=operation, data_id=data_id, outcome=outcome, detail=detail,
    )
    work.audit.append(entry)
    return work, entry


def query_audit_log(state: ChainState, requester: str,
                    data_id: Optional[str] = None, actor: Optional[str] = None,
                    seq_from: Optional[int] = None,
                    seq_to: Optional[int] = None) -> list[AuditEntry]:
    """Owners see their own data's trail; controllers, processors, and
    the supervisory authority see everything. The query itself is
    audited by the caller."""
    record = state.actors.get(requester)
    if record is None:
        raise NotAuthorized("unknown_actor")
    privileged = record.role in ("DC", "DP") or record.authority
    if not privileged:
        if data_id is None or state.owners.get(data_id) != requester:
            raise NotAuthorized("role")
    result = []
    for entry in state.audit:
        if data_id is not None and entry.data_id != data_id:
            continue
        if actor is not None and entry.actor != actor:
            continue
        if seq_from is not None and entry.seq < seq_from:
            continue
        if seq_to is not None and entry.seq > seq_to:
            continue
        result.append(entry)
    return result
