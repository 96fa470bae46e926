"""Right to be forgotten, the anonymization way.

Erasing a record destroys the off-chain ciphertext and its single-use
salt; only a tombstone remains. The salted digest stays on the immutable
chain, but with salt and data gone it identifies nobody — verification
answers ERASED forever after, and the chain still validates end to end.

Run: python demos/demo_erasure.py
"""

from __future__ import annotations

import hashlib
import tempfile
from pathlib import Path

from certledger import codec, ledger
from certledger.chain_apps import make_approval
from certledger.gateway import ActorSpec, Gateway, build_request
from certledger.offchain_store import OffchainStore


def keypair(label: str) -> codec.KeyPair:
    return codec.generate_keypair(hashlib.sha256(label.encode()).digest())


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="certledger-erasure-"))
    keys = {name: keypair(name) for name in ("uni-it", "office-1", "alicia")}
    validators = [keypair("validator-0")]
    store = OffchainStore("store-1", workdir / "store",
                          hashlib.sha256(b"demo-key").digest())
    gateway = Gateway.bootstrap(
        validators=validators,
        actors=[
            ActorSpec("uni-it", "DC", keys["uni-it"].verification_key),
            ActorSpec("office-1", "DP", keys["office-1"].verification_key),
            ActorSpec("alicia", "DO", keys["alicia"].verification_key),
        ],
        store=store,
        chain_file=workdir / "ledger.chain",
    )

    plaintext = codec.canonical_serialize(
        {"degree": "Ingenieria en Computacion", "name": "Alicia Fernandez"})
    print("== Register personal data ==")
    consent = make_approval(
        "alicia", "consent",
        {"action": "register", "data_id": "rec-1", "owner": "alicia",
         "registrar": "office-1"},
        keys["alicia"])
    registered = gateway.handle(build_request("office-1", "DP", "UC1", {
        "data_id": "rec-1", "owner": "alicia", "plaintext": plaintext,
        "consent": consent,
    }, keys["office-1"]))
    digest = registered.payload["digest"]
    record_file = store.data_dir / "rec-1"
    print(f"   anchored digest: {digest[:24]}...")
    print(f"   record file size: {record_file.stat().st_size} bytes (encrypted)")

    print("\n== Erase (owner request, office countersigned) ==")
    countersignature = make_approval(
        "office-1", "countersign",
        {"action": "countersign", "change": "erase", "data_id": "rec-1",
         "owner": "alicia"},
        keys["office-1"])
    erased = gateway.handle(build_request("alicia", "DO", "UC6", {
        "data_id": "rec-1", "change": "erase",
        "countersignature": countersignature,
    }, keys["alicia"]))
    print(f"   outcome: {erased.outcome} at {erased.payload['erased_at']}")

    print("\n== What remains ==")
    print(f"   tombstone file size: {record_file.stat().st_size} bytes")
    meta = (store.data_dir / "rec-1.meta").read_text().strip()
    print(f"   tombstone metadata: {meta}")
    on_chain = gateway.state.integrity["rec-1"]
    print(f"   on-chain record: status={on_chain.status}, "
          f"digest still {on_chain.digest.digest.hex()[:24]}... (unchanged)")

    print("\n== Every later touch answers 'erased' ==")
    fetch = gateway.handle(build_request("alicia", "DO", "UC4",
                                         {"data_id": "rec-1"}, keys["alicia"]))
    print(f"   UC4 fetch:  {fetch.outcome} ({fetch.reason})")
    verify = gateway.handle(build_request("alicia", "DO", "UC5", {
        "data_id": "rec-1", "candidate_plaintext": plaintext,
    }, keys["alicia"]))
    print(f"   UC5 verify: {verify.payload['result']}")

    report = ledger.validate_chain(gateway.chain)
    print(f"\n== Chain integrity survives erasure: ok={report.ok} ==")
    blob = b"".join(p.read_bytes() for p in store.data_dir.iterdir())
    print(f"   store directory contains plaintext: {plaintext in blob}")
    print(f"   store directory contains the name:  {b'Alicia' in blob}")


if __name__ == "__main__":
    main()
