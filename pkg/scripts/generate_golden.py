"""Regenerate the golden fixtures.

Everything here is fully seeded (keys, salts, token ids, clock), so the
produced chain file is bit-exact on every platform and across
implementations that agree on the canonical byte form.

Usage: python scripts/generate_golden.py [--check]
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from certledger import codec, ledger  # noqa: E402
from certledger.certs import (  # noqa: E402
    Certificate,
    GradeRecord,
    canonicalize_certificate,
    registration_consent,
    verification_consent,
)
from certledger.chain_apps import make_approval  # noqa: E402
from certledger.entropy import SeededEntropy  # noqa: E402
from certledger.gateway import ActorSpec, Gateway, build_request  # noqa: E402
from certledger.offchain_store import OffchainStore  # noqa: E402

GOLDEN = REPO / "golden"

ACTOR_SPECS = [
    ("uni-it", "DC", False),
    ("office-1", "DP", False),
    ("office-2", "DP", False),
    ("alice", "DO", False),
    ("bob", "DO", False),
    ("acme-corp", "RECIPIENT", False),
    ("dpa", "RECIPIENT", True),
]

GOLDEN_CERT = Certificate(
    student_id="1994.123-456",
    full_name="Alicia Fernandez",
    degree="Ingenieria en Computacion",
    institution="Universidad Modelo",
    issue_date=dt.date(2023, 6, 15),
    grade_records=(
        GradeRecord("Algoritmos 1", "sobresaliente", dt.date(2019, 12, 10)),
        GradeRecord("Bases de Datos", "muy bueno", dt.date(2020, 7, 21)),
        GradeRecord("Sistemas Operativos", "sobresaliente", dt.date(2021, 11, 30)),
    ),
)

CORRECTED_CERT = Certificate(
    student_id=GOLDEN_CERT.student_id,
    full_name=GOLDEN_CERT.full_name,
    degree=GOLDEN_CERT.degree,
    institution=GOLDEN_CERT.institution,
    issue_date=GOLDEN_CERT.issue_date,
    grade_records=(
        GOLDEN_CERT.grade_records[0],
        GradeRecord("Bases de Datos", "sobresaliente", dt.date(2020, 7, 21)),
        GOLDEN_CERT.grade_records[2],
    ),
)

DATA_ID = "cert-golden-1"


def seeded_keypair(label: str) -> codec.KeyPair:
    return codec.generate_keypair(hashlib.sha256(label.encode()).digest())


class SteppingClock:
    def __init__(self, start: int = 1_700_000_000):
        self.now = start

    def __call__(self) -> int:
        self.now += 1
        return self.now


def golden_session(workdir: Path) -> Gateway:
    """The scripted session whose chain is pinned as golden.chain."""
    clock = SteppingClock()
    validators = [seeded_keypair(f"validator-{i}") for i in range(3)]
    keys = {actor_id: seeded_keypair(actor_id) for actor_id, _, _ in ACTOR_SPECS}
    store = OffchainStore(
        store_id="store-1", data_dir=workdir / "store-data",
        key=hashlib.sha256(b"golden-store-key").digest(),
        entropy=SeededEntropy("golden-store"), clock=clock,
    )
    gateway = Gateway.bootstrap(
        validators=validators,
        actors=[ActorSpec(a, role, keys[a].verification_key, flag)
                for a, role, flag in ACTOR_SPECS],
        store=store,
        token_secret=hashlib.sha256(b"golden-token-secret").digest(),
        clock=clock,
        entropy=SeededEntropy("golden-gateway"),
        chain_file=workdir / "golden.chain",
    )

    cert_bytes = canonicalize_certificate(GOLDEN_CERT)
    corrected_bytes = canonicalize_certificate(
        CORRECTED_CERT, today=CORRECTED_CERT.issue_date)

    def run(actor, role, operation, params, key=None):
        request = build_request(actor, role, operation, params, key or keys[actor])
        result = gateway.handle(request)
        return result

    # UC1: registry office registers the diploma with the student's consent
    run("office-1", "DP", "UC1", {
        "data_id": DATA_ID, "owner": "alice", "plaintext": cert_bytes,
        "consent": registration_consent(DATA_ID, "alice", "office-1", keys["alice"]),
    })
    # UC2: student lets the employer verify
    run("alice", "DO", "UC2", {
        "data_id": DATA_ID, "grantee": "acme-corp", "permission": "VERIFY",
        "consent": verification_consent(DATA_ID, "alice", "acme-corp", keys["alice"]),
    })
    # UC5: employer checks the authentic certificate
    run("acme-corp", "RECIPIENT", "UC5", {
        "data_id": DATA_ID, "candidate_plaintext": cert_bytes,
    })
    # UC4: student downloads her own certificate
    run("alice", "DO", "UC4", {"data_id": DATA_ID})
    # UC7: the controller corrects a grade with the student's authorization
    run("uni-it", "DC", "UC7", {
        "data_id": DATA_ID, "change": "modify", "new_plaintext": corrected_bytes,
        "owner_authorization": make_approval(
            "alice", "consent",
            {"action": "grant", "data_id": DATA_ID, "grantee": "uni-it",
             "permission": "MODIFY"},
            keys["alice"]),
    })
    # UC3: student withdraws the employer's permission
    run("alice", "DO", "UC3", {"data_id": DATA_ID, "grantee": "acme-corp"})
    # UC5 again: employer is now denied
    run("acme-corp", "RECIPIENT", "UC5", {
        "data_id": DATA_ID, "candidate_plaintext": corrected_bytes,
    })
    # UC6: student erases the record (right to be forgotten)
    run("alice", "DO", "UC6", {
        "data_id": DATA_ID, "change": "erase",
        "countersignature": make_approval(
            "office-1", "countersign",
            {"action": "countersign", "change": "erase", "data_id": DATA_ID,
             "owner": "alice"},
            keys["office-1"]),
    })
    # UC8: student pulls her audit trail
    run("alice", "DO", "UC8", {"data_id": DATA_ID})
    return gateway


def canonical_vector_cases() -> list[tuple[str, object]]:
    """Named structured values pinned as canonical-serialization vectors."""
    return [
        ("empty_map", {}),
        ("key_ordering", {"b": 1, "a": 2}),
        ("nested", {"z": [1, 2], "a": {"y": True}}),
        ("blob", {"k": b"\xab\xcd", "empty": b""}),
        ("unicode", {"name": "María Pérez", "ok": False}),
        ("negative", {"n": -12345678901234567890, "zero": 0}),
        ("list_mix", [True, False, "x", 7, b"\x00\x01", [], {}]),
        ("deep", {"a": {"b": {"c": [{"d": [0, {"e": "f"}]}]}}}),
    ]


def canonical_vectors_file() -> bytes:
    lines = []
    for name, value in canonical_vector_cases():
        lines.append(f"{name} {codec.canonical_serialize(value).hex()}".encode())
    return b"\n".join(lines) + b"\n"


def transaction_examples(gateway: Gateway) -> bytes:
    """One canonical transaction per payload kind, for cross-checking."""
    seen: dict[str, ledger.Transaction] = {}
    for block in gateway.chain.blocks:
        for tx in block.transactions:
            seen.setdefault(tx.payload["kind"], tx)
    lines = []
    for kind in sorted(seen):
        lines.append(codec.canonical_serialize(seen[kind].to_value()))
    return b"\n".join(lines) + b"\n"


def generate(check: bool = False) -> int:
    with tempfile.TemporaryDirectory() as tmp:
        gateway = golden_session(Path(tmp))
        chain_bytes = (Path(tmp) / "golden.chain").read_bytes()
    cert_bytes = canonicalize_certificate(GOLDEN_CERT)
    tx_bytes = transaction_examples(gateway)
    report = ledger.validate_chain(gateway.chain)
    assert report.ok, f"golden chain does not validate: {report}"

    outputs = {
        GOLDEN / "golden.chain": chain_bytes,
        GOLDEN / "certificate.cert": cert_bytes,
        GOLDEN / "transactions.txt": tx_bytes,
        GOLDEN / "canonical_vectors.txt": canonical_vectors_file(),
    }
    failures = 0
    for path, data in outputs.items():
        if check:
            current = path.read_bytes() if path.exists() else b""
            status = "ok" if current == data else "MISMATCH"
            if status == "MISMATCH":
                failures += 1
            print(f"{path.relative_to(REPO)}: {status}")
        else:
            path.write_bytes(data)
            print(f"wrote {path.relative_to(REPO)} ({len(data)} bytes)")
    return 1 if failures else 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--check", action="store_true",
                        help="verify the pinned fixtures instead of rewriting")
    raise SystemExit(generate(check=parser.parse_args().check))
