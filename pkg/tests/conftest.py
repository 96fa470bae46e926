"""Shared fixtures: seeded actors, genesis chains, and payload helpers."""

from __future__ import annotations

import hashlib

import pytest

from certledger import chain_apps, codec, ledger
from certledger.entropy import SeededEntropy


def seeded_keypair(label: str) -> codec.KeyPair:
    return codec.generate_keypair(hashlib.sha256(label.encode()).digest())


VALIDATORS = [seeded_keypair(f"validator-{i}") for i in range(3)]
TOKEN_SECRET = hashlib.sha256(b"token-secret").digest()

ACTOR_SPECS = [
    ("uni-it", "DC", False),
    ("office-1", "DP", False),
    ("office-2", "DP", False),
    ("alice", "DO", False),
    ("bob", "DO", False),
    ("acme-corp", "RECIPIENT", False),
    ("dpa", "RECIPIENT", True),
]
ACTOR_KEYS = {actor_id: seeded_keypair(actor_id) for actor_id, _, _ in ACTOR_SPECS}


def genesis_tx(submit_key: codec.KeyPair | None = None) -> ledger.Transaction:
    payload = chain_apps.genesis_payload(
        validators=[k.verification_key for k in VALIDATORS],
        token_secret=TOKEN_SECRET,
        actors=[
            chain_apps.actor_entry(actor_id, role, ACTOR_KEYS[actor_id].verification_key, flag)
            for actor_id, role, flag in ACTOR_SPECS
        ],
    )
    return ledger.make_transaction(submit_key or VALIDATORS[0], 1, payload)


def fresh_chain(now: int = 1_700_000_000) -> ledger.Chain:
    chain = ledger.Chain()
    chain.submit_transaction(genesis_tx())
    chain.seal_block(VALIDATORS[0], now)
    return chain


def audit_tx(key: codec.KeyPair, nonce: int, detail: str,
             operation: str = "UC8", timestamp: int = 1_700_000_001) -> ledger.Transaction:
    payload = chain_apps.audit_payload(
        operation=operation, actor="uni-it", outcome="GRANTED",
        detail=detail, timestamp=timestamp,
    )
    return ledger.make_transaction(key, nonce, payload)


ACTOR_ROLES = {actor_id: role for actor_id, role, _ in ACTOR_SPECS}
STORE_KEY = hashlib.sha256(b"gateway-store-key").digest()


class ManualClock:
    """Deterministic clock; each call advances by `step` seconds."""

    def __init__(self, start: int = 1_700_000_000, step: int = 0):
        self.now = start
        self.step = step

    def __call__(self) -> int:
        value = self.now
        self.now += self.step
        return value

    def tick(self, seconds: int) -> None:
        self.now += seconds


def make_gateway(tmp_path, clock=None, tracer=None, entropy_label="gw",
                 token_ttl=300):
    from certledger.gateway import ActorSpec, Gateway
    from certledger.offchain_store import OffchainStore

    clock = clock or ManualClock()
    store = OffchainStore(
        store_id="store-1", data_dir=tmp_path / "store-data", key=STORE_KEY,
        entropy=SeededEntropy(f"{entropy_label}-store"), clock=clock,
    )
    return Gateway.bootstrap(
        validators=VALIDATORS,
        actors=[
            ActorSpec(actor_id, role, ACTOR_KEYS[actor_id].verification_key, flag)
            for actor_id, role, flag in ACTOR_SPECS
        ],
        store=store,
        token_secret=TOKEN_SECRET,
        clock=clock,
        entropy=SeededEntropy(f"{entropy_label}-gateway"),
        token_ttl=token_ttl,
        chain_file=tmp_path / "ledger.chain",
        tracer=tracer,
    )


def signed_request(actor, operation, parameters, key=None, role=None,
                   attestation=None):
    from certledger.gateway import build_request

    return build_request(
        actor, role or ACTOR_ROLES[actor], operation, parameters,
        key or ACTOR_KEYS[actor], attestation=attestation,
    )


def register_consent_approval(data_id, owner, registrar, key=None):
    return chain_apps.make_approval(
        owner, "consent",
        {"action": "register", "data_id": data_id, "owner": owner,
         "registrar": registrar},
        key or ACTOR_KEYS[owner],
    )


def grant_consent_approval(data_id, owner, grantee, permission, key=None):
    return chain_apps.make_approval(
        owner, "consent",
        {"action": "grant", "data_id": data_id, "grantee": grantee,
         "permission": permission},
        key or ACTOR_KEYS[owner],
    )


def countersign_approval(data_id, owner, change, signer, key=None):
    return chain_apps.make_approval(
        signer, "countersign",
        {"action": "countersign", "change": change, "data_id": data_id,
         "owner": owner},
        key or ACTOR_KEYS[signer],
    )


def uc1(gateway, data_id="cert-001", owner="alice", registrar="office-1",
        plaintext=b'{"degree":"engineering","name":"Alice Smith"}'):
    request = signed_request(registrar, "UC1", {
        "data_id": data_id,
        "owner": owner,
        "plaintext": plaintext,
        "consent": register_consent_approval(data_id, owner, registrar),
    })
    return gateway.handle(request)


def uc2(gateway, data_id="cert-001", owner="alice", grantee="acme-corp",
        permission="VERIFY", expiry=None):
    params = {
        "data_id": data_id,
        "grantee": grantee,
        "permission": permission,
        "consent": grant_consent_approval(data_id, owner, grantee, permission),
    }
    if expiry is not None:
        params["expiry"] = expiry
    return gateway.handle(signed_request(owner, "UC2", params))


@pytest.fixture
def chain() -> ledger.Chain:
    return fresh_chain()


@pytest.fixture
def genesis_state() -> chain_apps.ChainState:
    return ledger.replay_state(fresh_chain())


@pytest.fixture
def entropy() -> SeededEntropy:
    return SeededEntropy("test-entropy")
