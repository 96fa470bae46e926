"""Permissioned hash-chained ledger.

One physical chain hosts the access-control, audit, and integrity
functions as typed transaction payloads. Sealing is deterministic
round-robin over a validator set fixed in the genesis block, so there
are no forks and the chain is totally ordered.

Persistence is an append-only text file, one canonical-serialized block
per line; reloading re-derives every hash and signature, so any byte
mutation of the file is detected at or below the mutated height.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

from . import codec
from .errors import (
    BadSignature,
    EmptyMempool,
    InvalidChain,
    MalformedKey,
    MalformedSignature,
    NotCanonical,
    StaleNonce,
    UnknownPayloadKind,
    UnsupportedValue,
    WrongSealer,
)

GENESIS_PREV_HASH = bytes(32)


@dataclass(frozen=True)
class Transaction:
    submitter: bytes
    nonce: int
    payload: dict
    tx_id: bytes
    signature: bytes

    def body_value(self) -> dict:
        return {"nonce": self.nonce, "payload": self.payload, "submitter": self.submitter}

    def body_bytes(self) -> bytes:
        return codec.canonical_serialize(self.body_value())

    def to_value(self) -> dict:
        return {
            "nonce": self.nonce,
            "payload": self.payload,
            "signature": self.signature,
            "submitter": self.submitter,
            "tx_id": self.tx_id,
        }

    @classmethod
    def from_value(cls, value: Any) -> "Transaction":
        if not isinstance(value, dict) or set(value) != {
            "nonce", "payload", "signature", "submitter", "tx_id",
        }:
            raise NotCanonical("malformed transaction value")
        if not isinstance(value["nonce"], int) or isinstance(value["nonce"], bool):
            raise NotCanonical("transaction nonce must be an integer")
        if not isinstance(value["payload"], dict):
            raise NotCanonical("transaction payload must be a map")
        return cls(
            submitter=codec._as_bytes(value["submitter"]),
            nonce=value["nonce"],
            payload=value["payload"],
            tx_id=codec._as_bytes(value["tx_id"]),
            signature=codec._as_bytes(value["signature"]),
        )


def make_transaction(key: codec.KeyPair, nonce: int, payload: dict) -> Transaction:
    """Build and sign a transaction.

    The payload is normalized through a canonical round-trip so that a
    live transaction and one reloaded from disk are field-for-field
    identical (byte blobs always appear as lowercase hex strings).
    """
    normalized = codec.canonical_parse(codec.canonical_serialize(payload))
    body = codec.canonical_serialize(
        {"nonce": nonce, "payload": normalized, "submitter": key.verification_key}
    )
    return Transaction(
        submitter=key.verification_key,
        nonce=nonce,
        payload=normalized,
        tx_id=codec.sha256(body),
        signature=codec.sign(key, body),
    )


@dataclass(frozen=True)
class Block:
    index: int
    prev_hash: bytes
    timestamp: int
    transactions: tuple[Transaction, ...]
    sealer: bytes
    block_hash: bytes
    seal_signature: bytes

    def header_value(self) -> dict:
        return {
            "index": self.index,
            "prev_hash": self.prev_hash,
            "sealer": self.sealer,
            "timestamp": self.timestamp,
            "tx_ids": [tx.tx_id for tx in self.transactions],
        }

    def to_value(self) -> dict:
        return {
            "block_hash": self.block_hash,
            "index": self.index,
            "prev_hash": self.prev_hash,
            "seal_signature": self.seal_signature,
            "sealer": self.sealer,
            "timestamp": self.timestamp,
            "transactions": [tx.to_value() for tx in self.transactions],
        }

    @classmethod
    def from_value(cls, value: Any) -> "Block":
        if not isinstance(value, dict) or set(value) != {
            "block_hash", "index", "prev_hash", "seal_signature",
            "sealer", "timestamp", "transactions",
        }:
            raise NotCanonical("malformed block value")
        for name in ("index", "timestamp"):
            if not isinstance(value[name], int) or isinstance(value[name], bool):
                raise NotCanonical(f"block {name} must be an integer")
        if not isinstance(value["transactions"], list):
            raise NotCanonical("block transactions must be a sequence")
        return cls(
            index=value["index"],
            prev_hash=codec._as_bytes(value["prev_hash"]),
            timestamp=value["timestamp"],
            transactions=tuple(Transaction.from_value(tv) for tv in value["transactions"]),
            sealer=codec._as_bytes(value["sealer"]),
            block_hash=codec._as_bytes(value["block_hash"]),
            seal_signature=codec._as_bytes(value["seal_signature"]),
        )


def compute_block_hash(index: int, prev_hash: bytes, timestamp: int,
                       tx_ids: Iterable[bytes], sealer: bytes) -> bytes:
    header = {
        "index": index,
        "prev_hash": prev_hash,
        "sealer": sealer,
        "timestamp": timestamp,
        "tx_ids": list(tx_ids),
    }
    return codec.sha256(codec.canonical_serialize(header))


@dataclass(frozen=True)
class ValidatorSet:
    members: tuple[bytes, ...]

    def __post_init__(self) -> None:
        if not self.members:
            raise UnsupportedValue("validator set needs at least one member")

    def sealer_for(self, height: int) -> bytes:
        return self.members[height % len(self.members)]


@dataclass
class ValidationReport:
    ok: bool
    first_bad_height: Optional[int] = None
    reason: Optional[str] = None


@dataclass
class Chain:
    """Append-only block list plus a FIFO mempool.

    One logical writer: submit_transaction/seal_block must be called from
    a single ordered command stream. Validation and replay work on the
    immutable block tuple and may run concurrently.
    """

    blocks: list[Block] = field(default_factory=list)
    mempool: list[Transaction] = field(default_factory=list)
    _nonces: dict[bytes, int] = field(default_factory=dict)

    @property
    def height(self) -> int:
        return len(self.blocks)

    def last_nonce(self, submitter: bytes) -> int:
        return self._nonces.get(submitter, 0)

    def submit_transaction(self, tx: Transaction) -> bytes:
        body = tx.body_bytes()
        if tx.tx_id != codec.sha256(body):
            raise BadSignature("tx_id does not match the transaction body")
        if not codec.verify_signature(tx.submitter, body, tx.signature):
            raise BadSignature("transaction signature invalid")
        kind = tx.payload.get("kind")
        from . import chain_apps
        if kind not in chain_apps.PAYLOAD_KINDS:
            raise UnknownPayloadKind(f"unknown payload kind {kind!r}")
        if tx.nonce <= self.last_nonce(tx.submitter):
            raise StaleNonce(
                f"nonce {tx.nonce} not above last accepted {self.last_nonce(tx.submitter)}"
            )
        self._nonces[tx.submitter] = tx.nonce
        self.mempool.append(tx)
        return tx.tx_id

    def seal_block(self, sealer_key: codec.KeyPair, now: int,
                   force_empty: bool = False) -> Block:
        if not self.mempool and not force_empty:
            raise EmptyMempool("no pending transactions and no heartbeat forced")
        height = self.height
        validators = self._validator_set_for_seal()
        expected = validators.sealer_for(height)
        if sealer_key.verification_key != expected:
            raise WrongSealer(f"height {height} expects validator {expected.hex()[:16]}")
        prev_hash = self.blocks[-1].block_hash if self.blocks else GENESIS_PREV_HASH
        # Timestamps are non-decreasing with height; clamp a lagging clock.
        timestamp = max(now, self.blocks[-1].timestamp) if self.blocks else now
        txs = tuple(self.mempool)
        block_hash = compute_block_hash(
            height, prev_hash, timestamp, (tx.tx_id for tx in txs), expected
        )
        block = Block(
            index=height,
            prev_hash=prev_hash,
            timestamp=timestamp,
            transactions=txs,
            sealer=expected,
            block_hash=block_hash,
            seal_signature=codec.sign(sealer_key, block_hash),
        )
        self.blocks.append(block)
        self.mempool.clear()
        return block

    def _validator_set_for_seal(self) -> ValidatorSet:
        if self.blocks:
            members = _genesis_validators(self.blocks[0])
            if members is None:
                raise InvalidChain("block 0 carries no readable genesis payload")
            return ValidatorSet(members)
        for tx in self.mempool:
            if tx.payload.get("kind") == "policy.genesis":
                return ValidatorSet(_decode_keys(tx.payload.get("validators")))
        raise InvalidChain("genesis block must carry a policy.genesis transaction")


def _decode_keys(value: Any) -> tuple[bytes, ...]:
    if not isinstance(value, list) or not value:
        raise InvalidChain("genesis validators must be a non-empty list")
    return tuple(codec._as_bytes(v) for v in value)


def _genesis_validators(block0: Block) -> Optional[tuple[bytes, ...]]:
    for tx in block0.transactions:
        if tx.payload.get("kind") == "policy.genesis":
            try:
                return _decode_keys(tx.payload.get("validators"))
            except (InvalidChain, UnsupportedValue):
                return None
    return None


def validate_chain(chain: Chain) -> ValidationReport:
    """Re-derive every hash link, block invariant, and transaction
    signature; reports the lowest offending height instead of raising."""
    from . import chain_apps

    if not chain.blocks:
        return ValidationReport(ok=True)
    members = _genesis_validators(chain.blocks[0])
    if members is None:
        return ValidationReport(False, 0, "missing or malformed genesis payload")
    validators = ValidatorSet(members)
    nonces: dict[bytes, int] = {}
    prev_hash = GENESIS_PREV_HASH
    prev_time = None
    for k, block in enumerate(chain.blocks):
        def bad(reason: str, height: int = k) -> ValidationReport:
            return ValidationReport(False, height, reason)

        if block.index != k:
            return bad(f"index {block.index} at height {k}")
        if block.prev_hash != prev_hash:
            return bad("broken prev_hash link")
        if prev_time is not None and block.timestamp < prev_time:
            return bad("timestamp regression")
        recomputed = compute_block_hash(
            block.index, block.prev_hash, block.timestamp,
            (tx.tx_id for tx in block.transactions), block.sealer,
        )
        if block.block_hash != recomputed:
            return bad("block hash mismatch")
        if block.sealer != validators.sealer_for(k):
            return bad("wrong sealer for round-robin schedule")
        try:
            seal_ok = codec.verify_signature(block.sealer, block.block_hash, block.seal_signature)
        except (MalformedKey, MalformedSignature):
            seal_ok = False
        if not seal_ok:
            return bad("seal signature invalid")
        for tx in block.transactions:
            body = tx.body_bytes()
            if tx.tx_id != codec.sha256(body):
                return bad("tx_id mismatch")
            try:
                sig_ok = codec.verify_signature(tx.submitter, body, tx.signature)
            except (MalformedKey, MalformedSignature):
                sig_ok = False
            if not sig_ok:
                return bad("transaction signature invalid")
            if tx.payload.get("kind") not in chain_apps.PAYLOAD_KINDS:
                return bad("unknown payload kind")
            if tx.nonce <= nonces.get(tx.submitter, 0):
                return bad("stale nonce replay")
            nonces[tx.submitter] = tx.nonce
        prev_hash = block.block_hash
        prev_time = block.timestamp
    return ValidationReport(ok=True)


def replay_state(chain: Chain):
    """Fold every transaction in block order through the chain
    applications, starting from the empty state."""
    from . import chain_apps

    report = validate_chain(chain)
    if not report.ok:
        raise InvalidChain(f"height {report.first_bad_height}: {report.reason}")
    state = chain_apps.ChainState.empty()
    for block in chain.blocks:
        for tx in block.transactions:
            state = chain_apps.apply_transaction(state, tx)
    return state


# --- persistence -------------------------------------------------------------

def block_line(block: Block) -> bytes:
    return codec.canonical_serialize(block.to_value())


def write_chain_file(chain: Chain, path: Path | str) -> None:
    with open(path, "wb") as fh:
        for block in chain.blocks:
            fh.write(block_line(block))
            fh.write(b"\n")


def append_block_file(block: Block, path: Path | str) -> None:
    with open(path, "ab") as fh:
        fh.write(block_line(block))
        fh.write(b"\n")


def read_chain_file(path: Path | str) -> Chain:
    """Strict loader: every line must reconstruct and re-serialize to the
    identical bytes. Raises InvalidChain at the first corrupt line."""
    blocks: list[Block] = []
    raw = Path(path).read_bytes()
    lines = raw.split(b"\n")
    if lines and lines[-1] == b"":
        lines.pop()
    for i, line in enumerate(lines):
        try:
            value = codec.canonical_parse(line)
            block = Block.from_value(value)
        except (NotCanonical, UnsupportedValue) as exc:
            raise InvalidChain(f"height {i}: corrupt block line ({exc})") from exc
        if block_line(block) != line:
            raise InvalidChain(f"height {i}: non-canonical block line")
        blocks.append(block)
    chain = Chain(blocks=blocks)
    for block in blocks:
        for tx in block.transactions:
            if tx.nonce > chain._nonces.get(tx.submitter, 0):
                chain._nonces[tx.submitter] = tx.nonce
    return chain


def validate_chain_file(path: Path | str) -> ValidationReport:
    """Parse + validate a persisted chain, reporting corrupt lines as the
    offending height rather than raising."""
    try:
        chain = read_chain_file(path)
    except InvalidChain as exc:
        text = str(exc)
        height = int(text.split(":", 1)[0].split()[-1]) if text.startswith("height") else 0
        return ValidationReport(False, height, text)
    return validate_chain(chain)
