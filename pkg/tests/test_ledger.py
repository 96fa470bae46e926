"""Hash-chained ledger: submission, sealing, validation, replay,
persistence, and tamper evidence.

The 5-block tamper case is cross-checked by a hand oracle that
recomputes the hash cascade with hashlib + json directly, independent of
the package's own codec.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json

import pytest

from certledger import chain_apps, codec, ledger
from certledger.errors import (
    BadSignature,
    EmptyMempool,
    InvalidChain,
    StaleNonce,
    UnknownPayloadKind,
    WrongSealer,
)

from conftest import VALIDATORS, audit_tx, fresh_chain, genesis_tx, seeded_keypair


def five_block_chain() -> ledger.Chain:
    chain = fresh_chain()
    key = seeded_keypair("submitter")
    nonce = 0
    for height in range(1, 5):
        for i in range(2):
            nonce += 1
            chain.submit_transaction(audit_tx(key, nonce, f"entry-{height}-{i}"))
        chain.seal_block(VALIDATORS[height % 3], 1_700_000_000 + height)
    return chain


# --- submit_transaction -------------------------------------------------------

def test_submit_well_signed_policy_tx(chain):
    key = seeded_keypair("submitter")
    tx = audit_tx(key, 1, "hello")
    assert chain.submit_transaction(tx) == tx.tx_id
    assert chain.mempool == [tx]


def test_replay_same_tx_rejected_stale_nonce(chain):
    key = seeded_keypair("submitter")
    tx = audit_tx(key, 1, "hello")
    chain.submit_transaction(tx)
    with pytest.raises(StaleNonce):
        chain.submit_transaction(tx)


def test_tampered_payload_rejected(chain):
    key = seeded_keypair("submitter")
    tx = audit_tx(key, 1, "hello")
    tampered = dataclasses.replace(
        tx, payload=dict(tx.payload, detail="hellp"))
    with pytest.raises(BadSignature):
        chain.submit_transaction(tampered)


def test_unknown_payload_kind_rejected(chain):
    key = seeded_keypair("submitter")
    tx = ledger.make_transaction(key, 1, {"kind": "mystery.op"})
    with pytest.raises(UnknownPayloadKind):
        chain.submit_transaction(tx)


# --- seal_block ----------------------------------------------------------------

def test_genesis_block_shape():
    chain = fresh_chain()
    assert chain.blocks[0].index == 0
    assert chain.blocks[0].prev_hash == bytes(32)
    assert chain.blocks[0].sealer == VALIDATORS[0].verification_key


def test_wrong_sealer_rejected():
    chain = ledger.Chain()
    chain.submit_transaction(genesis_tx())
    with pytest.raises(WrongSealer):
        chain.seal_block(VALIDATORS[1], 1_700_000_000)


def test_round_robin_rotation(chain):
    key = seeded_keypair("submitter")
    for height in range(1, 4):
        chain.submit_transaction(audit_tx(key, height, f"e{height}"))
        with pytest.raises(WrongSealer):
            chain.seal_block(VALIDATORS[(height + 1) % 3], 1_700_000_001)
        chain.seal_block(VALIDATORS[height % 3], 1_700_000_001)


def test_empty_mempool_needs_forced_heartbeat(chain):
    with pytest.raises(EmptyMempool):
        chain.seal_block(VALIDATORS[1], 1_700_000_001)
    block = chain.seal_block(VALIDATORS[1], 1_700_000_001, force_empty=True)
    assert block.transactions == ()


def test_fifo_order_preserved(chain):
    key = seeded_keypair("submitter")
    txs = [audit_tx(key, n, f"e{n}") for n in (1, 2, 3)]
    for tx in txs:
        chain.submit_transaction(tx)
    block = chain.seal_block(VALIDATORS[1], 1_700_000_001)
    assert [t.tx_id for t in block.transactions] == [t.tx_id for t in txs]
    assert chain.mempool == []


def test_timestamps_clamped_non_decreasing(chain):
    key = seeded_keypair("submitter")
    chain.submit_transaction(audit_tx(key, 1, "e"))
    block = chain.seal_block(VALIDATORS[1], 1_600_000_000)  # clock lagging
    assert block.timestamp == chain.blocks[0].timestamp


# --- validate_chain ------------------------------------------------------------

def test_untampered_five_block_chain_validates():
    report = ledger.validate_chain(five_block_chain())
    assert report.ok and report.first_bad_height is None


def oracle_tx_id(tx: ledger.Transaction) -> bytes:
    """Independent hash oracle: stdlib json over the documented body."""
    body = {"nonce": tx.nonce, "payload": tx.payload, "submitter": tx.submitter.hex()}
    text = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode()).digest()


def test_flipped_byte_in_block3_second_tx_reported_at_height_3():
    chain = five_block_chain()
    target = chain.blocks[3]
    victim = target.transactions[1]
    assert oracle_tx_id(victim) == victim.tx_id  # oracle agrees pre-tamper
    mutated_tx = dataclasses.replace(
        victim, payload=dict(victim.payload, detail="entry-3-1X"))
    assert oracle_tx_id(mutated_tx) != victim.tx_id  # hand-recomputed cascade
    chain.blocks[3] = dataclasses.replace(
        target, transactions=(target.transactions[0], mutated_tx))
    report = ledger.validate_chain(chain)
    assert not report.ok
    assert report.first_bad_height == 3
    assert report.reason == "tx_id mismatch"


def test_reordered_blocks_break_first_link():
    chain = five_block_chain()
    chain.blocks[2], chain.blocks[3] = chain.blocks[3], chain.blocks[2]
    report = ledger.validate_chain(chain)
    assert not report.ok
    assert report.first_bad_height == 2


def test_single_bit_mutations_of_ten_block_fixture_detected():
    chain = five_block_chain()
    key = seeded_keypair("submitter")
    nonce = 8
    for height in range(5, 10):
        nonce += 1
        chain.submit_transaction(audit_tx(key, nonce, f"x{height}"))
        chain.seal_block(VALIDATORS[height % 3], 1_700_000_100 + height)
    assert len(chain.blocks) == 10

    # In-memory single-bit mutations across representative block fields.
    cases = []
    for h in (0, 4, 9):
        blk = chain.blocks[h]
        cases.append((h, dataclasses.replace(blk, prev_hash=_flip(blk.prev_hash))))
        cases.append((h, dataclasses.replace(blk, block_hash=_flip(blk.block_hash))))
        cases.append((h, dataclasses.replace(blk, seal_signature=_flip(blk.seal_signature))))
        cases.append((h, dataclasses.replace(blk, timestamp=blk.timestamp ^ 1)))
        if blk.transactions:
            tx = blk.transactions[0]
            cases.append((h, dataclasses.replace(
                blk, transactions=(dataclasses.replace(tx, tx_id=_flip(tx.tx_id)),)
                + blk.transactions[1:])))
    for height, mutated in cases:
        original = chain.blocks[height]
        chain.blocks[height] = mutated
        report = ledger.validate_chain(chain)
        assert not report.ok
        assert report.first_bad_height <= height
        chain.blocks[height] = original
    assert ledger.validate_chain(chain).ok


def _flip(data: bytes, bit: int = 0) -> bytes:
    out = bytearray(data)
    out[0] ^= 1 << bit
    return bytes(out)


# --- replay_state ----------------------------------------------------------------

def test_replay_empty_chain_is_empty_state():
    state = ledger.replay_state(ledger.Chain())
    assert state == chain_apps.ChainState.empty()


def test_replay_deterministic():
    chain = five_block_chain()
    assert ledger.replay_state(chain) == ledger.replay_state(chain)


def test_replay_refuses_invalid_chain():
    chain = five_block_chain()
    blk = chain.blocks[2]
    chain.blocks[2] = dataclasses.replace(blk, prev_hash=_flip(blk.prev_hash))
    with pytest.raises(InvalidChain):
        ledger.replay_state(chain)


def test_replay_depends_only_on_sealed_blocks():
    # Same sealed block sequence via different mempool arrival batching.
    key = seeded_keypair("submitter")

    def build(batched: bool) -> ledger.Chain:
        chain = fresh_chain()
        txs = [audit_tx(key, n, f"e{n}") for n in (1, 2, 3, 4)]
        if batched:
            for tx in txs:
                chain.submit_transaction(tx)
            chain.seal_block(VALIDATORS[1], 1_700_000_001)
        else:
            for tx in txs[:2]:
                chain.submit_transaction(tx)
            for tx in txs[2:]:
                chain.submit_transaction(tx)
            chain.seal_block(VALIDATORS[1], 1_700_000_001)
        return chain

    a, b = build(True), build(False)
    assert [blk.block_hash for blk in a.blocks] == [blk.block_hash for blk in b.blocks]
    assert ledger.replay_state(a) == ledger.replay_state(b)


# --- persistence ------------------------------------------------------------------

def test_chain_file_round_trip_bit_exact(tmp_path):
    chain = five_block_chain()
    path = tmp_path / "ledger.chain"
    ledger.write_chain_file(chain, path)
    loaded = ledger.read_chain_file(path)
    assert [b.to_value() for b in loaded.blocks] == [b.to_value() for b in chain.blocks]
    ledger.write_chain_file(loaded, tmp_path / "again.chain")
    assert (tmp_path / "again.chain").read_bytes() == path.read_bytes()
    assert ledger.validate_chain(loaded).ok
    assert ledger.replay_state(loaded) == ledger.replay_state(chain)


def test_corrupt_chain_file_reports_height(tmp_path):
    chain = five_block_chain()
    path = tmp_path / "ledger.chain"
    ledger.write_chain_file(chain, path)
    lines = path.read_bytes().split(b"\n")
    mutated = bytearray(lines[2])
    mutated[len(mutated) // 2] ^= 0x04
    lines[2] = bytes(mutated)
    path.write_bytes(b"\n".join(lines))
    report = ledger.validate_chain_file(path)
    assert not report.ok
    assert report.first_bad_height <= 2


def test_append_only_file_matches_full_write(tmp_path):
    chain = five_block_chain()
    full = tmp_path / "full.chain"
    ledger.write_chain_file(chain, full)
    appended = tmp_path / "appended.chain"
    for block in chain.blocks:
        ledger.append_block_file(block, appended)
    assert appended.read_bytes() == full.read_bytes()
