"""Single external entry point orchestrating the eight use cases.

Every request is a signed envelope attributed to a registered actor.
The gateway verifies it, runs the use case across the chain applications
and the off-chain store in the documented order, records exactly one
use-case audit entry (GRANTED or DENIED), and seals exactly one block.
Authorization is always decided before any off-chain data is touched.

Transactions the gateway authors are submitted under fresh single-use
keys, so no gateway identity links transactions; accountability comes
from the audit log and the validators' seal signatures. Actor identity
travels inside payloads as consents, approvals, and key attestations.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from . import chain_apps, codec, ledger
from .chain_apps import CapabilityToken, ChainState
from .entropy import Entropy
from .errors import (
    AlreadyErased,
    DuplicateDataId,
    Erased,
    MalformedKey,
    MalformedSignature,
    NotAuthorized,
    NotFound,
    TokenRejected,
    UnknownDataId,
    UnsupportedValue,
)
from .offchain_store import OffchainStore
from .tracing import Tracer

OPERATIONS = {
    "UC1": "register_personal_data",
    "UC2": "grant_access",
    "UC3": "revoke_access",
    "UC4": "access_data",
    "UC5": "verify_data",
    "UC6": "modify_or_erase_by_owner",
    "UC7": "modify_or_erase_by_controller",
    "UC8": "request_access_log",
}


@dataclass(frozen=True)
class ActorSpec:
    actor_id: str
    role: str
    key: bytes
    authority: bool = False


@dataclass
class UseCaseRequest:
    actor: str
    role_claim: str
    operation: str
    parameters: dict
    attestation: Optional[dict] = None
    signature: bytes = b""

    def envelope_value(self) -> dict:
        value = {
            "actor": self.actor,
            "operation": self.operation,
            "parameters": self.parameters,
            "role_claim": self.role_claim,
        }
        if self.attestation is not None:
            value["attestation"] = self.attestation
        return value


def build_request(actor: str, role_claim: str, operation: str, parameters: dict,
                  key: codec.KeyPair, attestation: Optional[dict] = None) -> UseCaseRequest:
    request = UseCaseRequest(actor, role_claim, operation, parameters, attestation)
    request.signature = codec.sign(key, codec.canonical_serialize(request.envelope_value()))
    return request


@dataclass
class UseCaseResult:
    outcome: str  # GRANTED | DENIED | ERROR
    payload: dict = field(default_factory=dict)
    audit_seq: Optional[int] = None
    reason: Optional[str] = None

    def to_value(self) -> dict:
        value: dict = {"outcome": self.outcome, "payload": self.payload}
        if self.audit_seq is not None:
            value["audit_seq"] = self.audit_seq
        if self.reason is not None:
            value["reason"] = self.reason
        return value


class _Denied(Exception):
    def __init__(self, reason: str, data_id: Optional[str] = None):
        super().__init__(reason)
        self.reason = reason
        self.data_id = data_id


class _StoreAccessControl:
    """Token validator handed to the store: re-checks current policy and
    writes a TOKEN_VALIDATE audit entry for every attempt."""

    def __init__(self, gateway: "Gateway"):
        self._gateway = gateway

    def validate(self, token: CapabilityToken, data_id: str,
                 permission: str) -> tuple[bool, Optional[str]]:
        gw = self._gateway
        now = gw.clock()
        ok, reason = chain_apps.validate_token(gw.state, token, data_id, permission, now)
        gw.tracer.record("token.validate", data_id=data_id, permission=permission, ok=ok)
        gw._submit_audit(
            operation="TOKEN_VALIDATE",
            actor=token.subject,
            outcome="GRANTED" if ok else "DENIED",
            detail=reason or "ok",
            data_id=data_id,
        )
        return ok, reason


class Gateway:
    def __init__(self, chain: ledger.Chain, validators: list[codec.KeyPair],
                 store: OffchainStore,
                 clock: Optional[Callable[[], int]] = None,
                 entropy: Optional[Entropy] = None,
                 token_ttl: int = chain_apps.DEFAULT_TOKEN_TTL,
                 chain_file: Optional[Path] = None,
                 tracer: Optional[Tracer] = None):
        self.chain = chain
        self.validators = validators
        self.store = store
        self.clock = clock or (lambda: int(time.time()))
        self.entropy = entropy or Entropy()
        self.token_ttl = token_ttl
        self.chain_file = Path(chain_file) if chain_file else None
        self.tracer = tracer or Tracer()
        self.state: ChainState = ledger.replay_state(chain)
        self._writer_lock = threading.RLock()
        store.bind_access(_StoreAccessControl(self))
        store.set_tracer(self.tracer)

    # -- construction -------------------------------------------------------

    @classmethod
    def bootstrap(cls, validators: list[codec.KeyPair], actors: list[ActorSpec],
                  store: OffchainStore, token_secret: Optional[bytes] = None,
                  clock: Optional[Callable[[], int]] = None,
                  entropy: Optional[Entropy] = None,
                  token_ttl: int = chain_apps.DEFAULT_TOKEN_TTL,
                  chain_file: Optional[Path] = None,
                  tracer: Optional[Tracer] = None) -> "Gateway":
        """Create a fresh network: genesis block carries the validator
        set, the token secret, and the actor registry."""
        entropy = entropy or Entropy()
        clock = clock or (lambda: int(time.time()))
        payload = chain_apps.genesis_payload(
            validators=[k.verification_key for k in validators],
            token_secret=token_secret or entropy.secret(),
            actors=[
                chain_apps.actor_entry(a.actor_id, a.role, a.key, a.authority)
                for a in actors
            ],
        )
        chain = ledger.Chain()
        chain.submit_transaction(ledger.make_transaction(validators[0], 1, payload))
        block = chain.seal_block(validators[0], clock())
        gateway = cls(chain, validators, store, clock=clock, entropy=entropy,
                      token_ttl=token_ttl, chain_file=chain_file, tracer=tracer)
        if gateway.chain_file:
            ledger.write_chain_file(chain, gateway.chain_file)
        assert block.index == 0
        return gateway

    @classmethod
    def from_chain_file(cls, path: Path | str, validators: list[codec.KeyPair],
                        store: OffchainStore, **kwargs) -> "Gateway":
        chain = ledger.read_chain_file(path)
        return cls(chain, validators, store, chain_file=Path(path), **kwargs)

    # -- ledger plumbing ------------------------------------------------------

    def _submit(self, payload: dict) -> ledger.Transaction:
        """Author a transaction under a fresh single-use submitter key and
        fold it into the live state immediately (mempool-inclusive view)."""
        tx = ledger.make_transaction(self.entropy.keypair(), 1, payload)
        self.chain.submit_transaction(tx)
        self.state = chain_apps.apply_transaction(self.state, tx)
        self.tracer.record("tx.submit", kind=payload.get("kind"))
        return tx

    def _submit_audit(self, *, operation: str, actor: str, outcome: str,
                      detail: str, data_id: Optional[str] = None,
                      attestation: Optional[dict] = None) -> int:
        self._submit(chain_apps.audit_payload(
            operation=operation, actor=actor, outcome=outcome, detail=detail,
            timestamp=self.clock(), data_id=data_id, attestation=attestation,
        ))
        return self.state.audit[-1].seq

    def _seal(self) -> ledger.Block:
        height = self.chain.height
        key = self.validators[height % len(self.validators)]
        block = self.chain.seal_block(key, self.clock())
        self.tracer.record("block.seal", index=block.index, txs=len(block.transactions))
        if self.chain_file:
            ledger.append_block_file(block, self.chain_file)
        return block

    def _dry_run(self, payload: dict) -> tuple[bool, str]:
        """Apply the payload to a throwaway state; report the rejection
        reason without touching the chain."""
        tx = ledger.make_transaction(self.entropy.keypair(), 1, payload)
        probe = chain_apps.apply_transaction(self.state, tx)
        if len(probe.audit) == len(self.state.audit) + 1 and \
                probe.audit[-1].operation == "REJECTED":
            return False, probe.audit[-1].detail
        return True, ""

    def _preview_attestation(self, attestation: dict) -> tuple[bool, Optional[bytes]]:
        work = self.state.clone()
        try:
            chain_apps._apply_attestation(work, attestation)
        except chain_apps._Reject:
            return False, None
        return True, work.actors[attestation["actor"]].current_key

    def _preview_approval(self, approval: Any, *, actor: str, purpose: str,
                          claims: Optional[dict] = None) -> tuple[bool, str]:
        work = self.state.clone()
        try:
            chain_apps._verify_approval(work, approval, actor=actor,
                                        purpose=purpose, claims=claims)
        except chain_apps._Reject as rej:
            return False, rej.reason
        return True, ""

    # -- request handling ---------------------------------------------------------

    def handle(self, request: UseCaseRequest) -> UseCaseResult:
        """Verify, dispatch, audit, seal. Exactly one block per call."""
        with self._writer_lock:
            return self._handle_locked(request)

    def _handle_locked(self, request: UseCaseRequest) -> UseCaseResult:
        operation = request.operation
        if operation not in OPERATIONS:
            return UseCaseResult(outcome="ERROR", reason="unknown_operation")
        if not isinstance(request.parameters, dict):
            return UseCaseResult(outcome="ERROR", reason="bad_parameters")
        if not isinstance(request.actor, str) or not request.actor:
            return UseCaseResult(outcome="ERROR", reason="bad_actor")
        try:
            codec.canonical_serialize(request.envelope_value())
        except UnsupportedValue:
            return UseCaseResult(outcome="ERROR", reason="bad_parameters")
        self.tracer.record("request.received", operation=operation, actor=request.actor)

        data_id = request.parameters.get("data_id")
        data_id = data_id if isinstance(data_id, str) else None
        try:
            self._authenticate(request)
            handler = getattr(self, f"_{OPERATIONS[operation]}")
            outcome_payload = handler(request)
        except _Denied as denied:
            seq = self._submit_audit(
                operation=operation, actor=request.actor, outcome="DENIED",
                detail=denied.reason, data_id=denied.data_id or data_id,
                attestation=self._pending_attestation(request),
            )
            self._seal()
            return UseCaseResult(outcome="DENIED", audit_seq=seq, reason=denied.reason)
        except Exception as exc:
            # Defensive: live state already folded any submitted txs, so
            # sealing them keeps replay == live even on an internal fault.
            if self.chain.mempool:
                self._seal()
            return UseCaseResult(outcome="ERROR",
                                 reason=f"internal:{type(exc).__name__}")
        payload, detail, audited_data_id = outcome_payload
        seq = self._submit_audit(
            operation=operation, actor=request.actor, outcome="GRANTED",
            detail=detail, data_id=audited_data_id,
            attestation=self._pending_attestation(request),
        )
        if operation == "UC7" and "owner_notice" in payload:
            notice = payload["owner_notice"]
            self._submit_audit(
                operation="NOTIFY", actor=notice["owner"], outcome="GRANTED",
                detail=notice["detail"], data_id=audited_data_id,
            )
        self._seal()
        return UseCaseResult(outcome="GRANTED", payload=payload, audit_seq=seq)

    def _pending_attestation(self, request: UseCaseRequest) -> Optional[dict]:
        """The requester's key rotation rides the first transaction of the
        use case. Returns the attestation only while it would still apply
        cleanly: once an earlier transaction carried it (or if it is
        invalid), attaching it would get the whole payload rejected."""
        attestation = request.attestation
        if not isinstance(attestation, dict):
            return None
        ok, _ = self._preview_attestation(attestation)
        return attestation if ok else None

    def _authenticate(self, request: UseCaseRequest) -> None:
        record = self.state.actors.get(request.actor)
        if record is None:
            raise _Denied("unknown_actor")
        if request.role_claim != record.role:
            raise _Denied("role")
        key = record.current_key
        if request.attestation is not None:
            if not isinstance(request.attestation, dict):
                raise _Denied("attestation")
            ok, attested_key = self._preview_attestation(request.attestation)
            if not ok or request.attestation.get("actor") != request.actor:
                raise _Denied("attestation")
            key = attested_key
        message = codec.canonical_serialize(request.envelope_value())
        try:
            verified = codec.verify_signature(key, message, request.signature)
        except (MalformedKey, MalformedSignature):
            verified = False
        if not verified:
            raise _Denied("signature")
        self.tracer.record("request.verified", actor=request.actor)

    # -- parameter helpers ----------------------------------------------------------

    @staticmethod
    def _param_str(params: dict, name: str) -> str:
        value = params.get(name)
        if not isinstance(value, str) or not value:
            raise _Denied(f"missing_{name}")
        return value

    @staticmethod
    def _param_bytes(params: dict, name: str) -> bytes:
        value = params.get(name)
        try:
            return codec._as_bytes(value)
        except Exception:
            raise _Denied(f"missing_{name}") from None

    def _known_data_id(self, params: dict) -> str:
        data_id = self._param_str(params, "data_id")
        if data_id not in self.state.owners:
            raise _Denied("unknown_data", data_id=data_id)
        return data_id

    def _issue_token(self, actor: str, data_id: str, permission: str) -> CapabilityToken:
        try:
            token = chain_apps.issue_token(
                self.state, actor, data_id, permission, self.clock(),
                ttl_seconds=self.token_ttl, token_id=self.entropy.token_id(),
            )
        except NotAuthorized as err:
            raise _Denied(str(err), data_id=data_id) from None
        self.tracer.record("token.issue", data_id=data_id, permission=permission)
        return token

    def _evaluate(self, actor: str, data_id: str, permission: str) -> chain_apps.Decision:
        try:
            decision = chain_apps.evaluate_access(
                self.state, actor, data_id, permission, self.clock())
        except UnknownDataId:
            raise _Denied("unknown_data", data_id=data_id) from None
        self.tracer.record("access.evaluate", actor=actor, data_id=data_id,
                           permission=permission, granted=decision.granted)
        if not decision.granted:
            raise _Denied(decision.reason or "denied", data_id=data_id)
        return decision

    # -- use cases ----------------------------------------------------------------

    def _register_personal_data(self, request: UseCaseRequest):
        params = request.parameters
        if self.state.actors[request.actor].role not in ("DC", "DP"):
            raise _Denied("role")
        data_id = self._param_str(params, "data_id")
        owner = self._param_str(params, "owner")
        plaintext = self._param_bytes(params, "plaintext")
        consent = params.get("consent")
        if not isinstance(consent, dict):
            raise _Denied("consent_missing", data_id=data_id)
        if data_id in self.state.owners or self.store.record_meta(data_id) is not None:
            raise _Denied("duplicate_data_id", data_id=data_id)
        if owner not in self.state.actors:
            raise _Denied("unknown_owner", data_id=data_id)
        register = chain_apps.register_data_payload(
            data_id, owner, request.actor, consent,
            attestation=self._pending_attestation(request))
        ok, reason = self._dry_run(register)
        if not ok:
            raise _Denied(reason, data_id=data_id)
        self._submit(register)
        try:
            link, digest = self.store.store_record(data_id, plaintext, owner)
        except DuplicateDataId:
            raise _Denied("duplicate_data_id", data_id=data_id) from None
        self._submit(chain_apps.integrity_record_payload(data_id, link.locator, digest))
        payload = {"data_id": data_id, "link": link.locator,
                   "digest": digest.digest.hex()}
        return payload, "registered", data_id

    def _grant_access(self, request: UseCaseRequest):
        params = request.parameters
        data_id = self._known_data_id(params)
        grantee = self._param_str(params, "grantee")
        permission = self._param_str(params, "permission")
        requester_role = self.state.actors[request.actor].role
        if request.actor != self.state.owners[data_id] and requester_role not in ("DC", "DP"):
            raise _Denied("role", data_id=data_id)
        if grantee not in self.state.actors:
            raise _Denied("unknown_grantee", data_id=data_id)
        consent = params.get("consent")
        if not isinstance(consent, dict):
            raise _Denied("consent_missing", data_id=data_id)
        expiry = params.get("expiry")
        grant = chain_apps.grant_payload(
            data_id, grantee, permission, request.actor, consent=consent,
            expiry=expiry if isinstance(expiry, int) else None,
            attestation=self._pending_attestation(request))
        ok, reason = self._dry_run(grant)
        if not ok:
            raise _Denied(reason, data_id=data_id)
        tx = self._submit(grant)
        return ({"consent_ref": tx.tx_id.hex(), "grantee": grantee,
                 "permission": permission}, "granted", data_id)

    def _revoke_access(self, request: UseCaseRequest):
        params = request.parameters
        data_id = self._known_data_id(params)
        grantee = self._param_str(params, "grantee")
        permission = params.get("permission")
        requester_role = self.state.actors[request.actor].role
        if request.actor != self.state.owners[data_id] and requester_role not in ("DC", "DP"):
            raise _Denied("role", data_id=data_id)
        revoke = chain_apps.revoke_payload(
            data_id, grantee, request.actor,
            permission=permission if isinstance(permission, str) else None,
            attestation=self._pending_attestation(request))
        ok, reason = self._dry_run(revoke)
        if not ok:
            raise _Denied(reason, data_id=data_id)
        self._submit(revoke)
        return ({"grantee": grantee}, "revoked", data_id)

    def _access_data(self, request: UseCaseRequest):
        params = request.parameters
        data_id = self._known_data_id(params)
        decision = self._evaluate(request.actor, data_id, "READ")
        token = self._issue_token(request.actor, data_id, "READ")
        try:
            plaintext = self.store.fetch_record(token, data_id)
        except TokenRejected as err:
            raise _Denied(f"token_{err.reason}", data_id=data_id) from None
        except Erased:
            raise _Denied("erased", data_id=data_id) from None
        except NotFound:
            raise _Denied("not_found", data_id=data_id) from None
        payload = {"plaintext": plaintext.hex(), "link": decision.link or ""}
        return payload, "released", data_id

    def _verify_data(self, request: UseCaseRequest):
        params = request.parameters
        data_id = self._known_data_id(params)
        self._evaluate(request.actor, data_id, "VERIFY")
        candidate_digest = params.get("candidate_digest")
        candidate_plaintext = params.get("candidate_plaintext")
        if candidate_digest is not None:
            digest_bytes = self._param_bytes(params, "candidate_digest")
            if len(digest_bytes) != codec.DIGEST_LEN:
                raise _Denied("bad_digest", data_id=data_id)
            candidate = codec.SaltedDigest("SHA-256", digest_bytes)
            result = chain_apps.verify_integrity(self.state, data_id, candidate)
        elif candidate_plaintext is not None:
            plaintext = self._param_bytes(params, "candidate_plaintext")
            token = self._issue_token(request.actor, data_id, "VERIFY")
            try:
                candidate = self.store.challenge_digest(token, data_id, plaintext)
            except TokenRejected as err:
                raise _Denied(f"token_{err.reason}", data_id=data_id) from None
            except Erased:
                self.tracer.record("verify.integrity", data_id=data_id, result="ERASED")
                return {"result": "ERASED"}, "result=ERASED", data_id
            except NotFound:
                raise _Denied("not_found", data_id=data_id) from None
            result = chain_apps.verify_integrity(self.state, data_id, candidate)
        else:
            raise _Denied("missing_candidate", data_id=data_id)
        self.tracer.record("verify.integrity", data_id=data_id, result=result)
        return {"result": result}, f"result={result}", data_id

    def _modify_or_erase_by_owner(self, request: UseCaseRequest):
        params = request.parameters
        data_id = self._known_data_id(params)
        if request.actor != self.state.owners[data_id]:
            raise _Denied("role", data_id=data_id)
        change = self._param_str(params, "change")
        if change not in ("modify", "erase"):
            raise _Denied("bad_change", data_id=data_id)
        countersignature = params.get("countersignature")
        if not isinstance(countersignature, dict):
            raise _Denied("countersignature_missing", data_id=data_id)
        signer = countersignature.get("actor")
        signer_record = self.state.actors.get(signer) if isinstance(signer, str) else None
        if signer_record is None or signer_record.role not in ("DC", "DP"):
            raise _Denied("bad_countersign", data_id=data_id)
        ok, reason = self._preview_approval(
            countersignature, actor=signer, purpose="countersign",
            claims={"action": "countersign", "change": change,
                    "data_id": data_id, "owner": request.actor})
        if not ok:
            raise _Denied(reason, data_id=data_id)
        self.tracer.record("countersign.verified", data_id=data_id, signer=signer)
        if change == "modify":
            new_plaintext = self._param_bytes(params, "new_plaintext")
            self._evaluate(request.actor, data_id, "MODIFY")
            token = self._issue_token(request.actor, data_id, "MODIFY")
            digest = self._store_update(token, data_id, new_plaintext)
            record = self.state.integrity[data_id]
            self._submit(chain_apps.integrity_update_payload(
                data_id, record.link, digest, approvals=[countersignature]))
            version = self.state.integrity[data_id].version
            return ({"digest": digest.digest.hex(), "version": version},
                    "modified", data_id)
        self._evaluate(request.actor, data_id, "DELETE")
        token = self._issue_token(request.actor, data_id, "DELETE")
        receipt = self._store_erase(token, data_id)
        self._submit(chain_apps.integrity_erase_payload(
            data_id, receipt.erased_at, approvals=[countersignature]))
        return ({"erased_at": receipt.erased_at}, "erased", data_id)

    def _modify_or_erase_by_controller(self, request: UseCaseRequest):
        params = request.parameters
        if self.state.actors[request.actor].role not in ("DC", "DP"):
            raise _Denied("role")
        data_id = self._known_data_id(params)
        owner = self.state.owners[data_id]
        change = self._param_str(params, "change")
        if change not in ("modify", "erase"):
            raise _Denied("bad_change", data_id=data_id)
        permission = "MODIFY" if change == "modify" else "DELETE"
        authorization = params.get("owner_authorization")
        if change == "modify":
            # Prior owner authorization is mandatory for content changes;
            # it doubles as the consent of the transient on-chain grant.
            if not isinstance(authorization, dict):
                raise _Denied("owner_authorization_missing", data_id=data_id)
            ok, reason = self._preview_approval(
                authorization, actor=owner, purpose="consent",
                claims={"action": "grant", "data_id": data_id,
                        "grantee": request.actor, "permission": permission})
            if not ok:
                raise _Denied(reason, data_id=data_id)
            self.tracer.record("owner_authorization.verified", data_id=data_id)
        grant = chain_apps.grant_payload(
            data_id, request.actor, permission, owner,
            consent=authorization if change == "modify" else None,
            attestation=self._pending_attestation(request))
        ok, reason = self._dry_run(grant)
        if not ok:
            raise _Denied(reason, data_id=data_id)
        self._submit(grant)
        try:
            if change == "modify":
                new_plaintext = self._param_bytes(params, "new_plaintext")
                token = self._issue_token(request.actor, data_id, permission)
                digest = self._store_update(token, data_id, new_plaintext)
                record = self.state.integrity[data_id]
                self._submit(chain_apps.integrity_update_payload(
                    data_id, record.link, digest))
                payload: dict = {"digest": digest.digest.hex(),
                                 "version": self.state.integrity[data_id].version}
            else:
                token = self._issue_token(request.actor, data_id, permission)
                receipt = self._store_erase(token, data_id)
                self._submit(chain_apps.integrity_erase_payload(
                    data_id, receipt.erased_at))
                payload = {"erased_at": receipt.erased_at}
        finally:
            # The transient grant never outlives the use case.
            self._submit(chain_apps.revoke_payload(
                data_id, request.actor, request.actor, permission=permission))
        notice_detail = f"{change} by {request.actor}"
        payload["owner_notice"] = {
            "owner": owner, "data_id": data_id, "change": change,
            "by": request.actor, "detail": notice_detail,
        }
        done = "modified" if change == "modify" else "erased"
        return payload, f"{done} with notice", data_id

    def _request_access_log(self, request: UseCaseRequest):
        params = request.parameters
        data_id = params.get("data_id")
        actor_filter = params.get("actor_filter")
        seq_from = params.get("seq_from")
        seq_to = params.get("seq_to")
        try:
            entries = chain_apps.query_audit_log(
                self.state, request.actor,
                data_id=data_id if isinstance(data_id, str) else None,
                actor=actor_filter if isinstance(actor_filter, str) else None,
                seq_from=seq_from if isinstance(seq_from, int) else None,
                seq_to=seq_to if isinstance(seq_to, int) else None,
            )
        except NotAuthorized as err:
            raise _Denied(str(err), data_id=data_id if isinstance(data_id, str) else None) from None
        self.tracer.record("audit.query", requester=request.actor, matches=len(entries))
        payload = {"entries": [e.to_value() for e in entries]}
        return payload, f"entries={len(entries)}", data_id if isinstance(data_id, str) else None

    # -- store interaction with uniform denial mapping ----------------------------

    def _store_update(self, token: CapabilityToken, data_id: str,
                      new_plaintext: bytes) -> codec.SaltedDigest:
        try:
            return self.store.update_record(token, data_id, new_plaintext)
        except TokenRejected as err:
            raise _Denied(f"token_{err.reason}", data_id=data_id) from None
        except Erased:
            raise _Denied("erased", data_id=data_id) from None
        except NotFound:
            raise _Denied("not_found", data_id=data_id) from None

    def _store_erase(self, token: CapabilityToken, data_id: str):
        try:
            return self.store.erase_record(token, data_id)
        except TokenRejected as err:
            raise _Denied(f"token_{err.reason}", data_id=data_id) from None
        except AlreadyErased:
            raise _Denied("already_erased", data_id=data_id) from None
        except NotFound:
            raise _Denied("not_found", data_id=data_id) from None
