"""The full life of a digital diploma.

A registry office issues Alicia's certificate with her consent; she lets
an employer verify it; the employer catches a forged copy; the
controller corrects a grade (with Alicia's authorization and a notice to
her); Alicia revokes the employer and reads her own audit trail.

Run: python demos/demo_certificate_lifecycle.py
"""

from __future__ import annotations

import dataclasses
import datetime as dt
import hashlib
import tempfile
from pathlib import Path

from certledger import codec, ledger
from certledger.certs import (
    Certificate,
    CertificateService,
    GradeRecord,
    canonicalize_certificate,
    registration_consent,
    verification_consent,
)
from certledger.chain_apps import make_approval
from certledger.gateway import ActorSpec, Gateway, build_request
from certledger.offchain_store import OffchainStore


def keypair(label: str) -> codec.KeyPair:
    return codec.generate_keypair(hashlib.sha256(label.encode()).digest())


def say(text: str = "") -> None:
    print(text)


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="certledger-demo-"))
    say("== Setting up the network ==")
    validators = [keypair(f"validator-{i}") for i in range(3)]
    keys = {name: keypair(name) for name in
            ("uni-it", "office-1", "alicia", "acme-corp", "dpa")}
    store = OffchainStore("store-1", workdir / "store", hashlib.sha256(b"demo-key").digest())
    gateway = Gateway.bootstrap(
        validators=validators,
        actors=[
            ActorSpec("uni-it", "DC", keys["uni-it"].verification_key),
            ActorSpec("office-1", "DP", keys["office-1"].verification_key),
            ActorSpec("alicia", "DO", keys["alicia"].verification_key),
            ActorSpec("acme-corp", "RECIPIENT", keys["acme-corp"].verification_key),
            ActorSpec("dpa", "RECIPIENT", keys["dpa"].verification_key, authority=True),
        ],
        store=store,
        chain_file=workdir / "ledger.chain",
    )
    service = CertificateService(gateway)
    say(f"   data controller: {service.role_map.dc}")
    say(f"   registry offices: {', '.join(service.role_map.dps)}")
    say(f"   supervisory authority: {service.role_map.authority}")

    diploma = Certificate(
        student_id="1994.123-456",
        full_name="Alicia Fernandez",
        degree="Ingenieria en Computacion",
        institution="Universidad Modelo",
        issue_date=dt.date(2023, 6, 15),
        grade_records=(
            GradeRecord("Algoritmos 1", "sobresaliente", dt.date(2019, 12, 10)),
            GradeRecord("Bases de Datos", "muy bueno", dt.date(2020, 7, 21)),
        ),
    )

    say("\n== UC1: the registry office registers the diploma (student consents) ==")
    consent = registration_consent("diploma-alicia", "alicia", "office-1", keys["alicia"])
    result = service.issue_certificate("office-1", keys["office-1"], diploma, consent)
    say(f"   outcome: {result.outcome}; anchored digest {result.payload['digest'][:16]}...")
    say(f"   off-chain link: {result.payload['link']}")

    say("\n== UC5 without consent: the employer is refused ==")
    refused = service.verify_certificate(
        "acme-corp", keys["acme-corp"], diploma, data_id="diploma-alicia")
    say(f"   outcome: {refused.outcome} ({refused.reason}) — consent is required")

    say("\n== UC2: Alicia grants the employer verification access ==")
    grant = gateway.handle(build_request("alicia", "DO", "UC2", {
        "data_id": "diploma-alicia", "grantee": "acme-corp", "permission": "VERIFY",
        "consent": verification_consent("diploma-alicia", "alicia", "acme-corp",
                                        keys["alicia"]),
    }, keys["alicia"]))
    say(f"   outcome: {grant.outcome}")

    say("\n== UC5: the employer verifies the authentic diploma ==")
    genuine = service.verify_certificate(
        "acme-corp", keys["acme-corp"], diploma, data_id="diploma-alicia")
    say(f"   result: {genuine.payload['result']}")

    say("\n== UC5: a forged copy (degree upgraded) is caught ==")
    forged = dataclasses.replace(diploma, degree="Doctorado en Computacion")
    fake = service.verify_certificate(
        "acme-corp", keys["acme-corp"], forged, data_id="diploma-alicia")
    say(f"   result: {fake.payload['result']}")

    say("\n== UC7: the controller corrects a grade (authorized, with notice) ==")
    corrected = dataclasses.replace(diploma, grade_records=(
        diploma.grade_records[0],
        GradeRecord("Bases de Datos", "sobresaliente", dt.date(2020, 7, 21)),
    ))
    authorization = make_approval(
        "alicia", "consent",
        {"action": "grant", "data_id": "diploma-alicia", "grantee": "uni-it",
         "permission": "MODIFY"},
        keys["alicia"])
    correction = gateway.handle(build_request("uni-it", "DC", "UC7", {
        "data_id": "diploma-alicia", "change": "modify",
        "new_plaintext": canonicalize_certificate(corrected, today=corrected.issue_date),
        "owner_authorization": authorization,
    }, keys["uni-it"]))
    say(f"   outcome: {correction.outcome}; record version {correction.payload['version']}")
    say(f"   notice to owner: {correction.payload['owner_notice']['detail']}")
    say("   old bytes now verify as: " + service.verify_certificate(
        "acme-corp", keys["acme-corp"], diploma,
        data_id="diploma-alicia").payload["result"])
    say("   corrected bytes verify as: " + service.verify_certificate(
        "acme-corp", keys["acme-corp"], corrected,
        data_id="diploma-alicia").payload["result"])

    say("\n== UC3: Alicia revokes the employer ==")
    revoke = gateway.handle(build_request("alicia", "DO", "UC3", {
        "data_id": "diploma-alicia", "grantee": "acme-corp",
    }, keys["alicia"]))
    say(f"   outcome: {revoke.outcome}")
    denied = service.verify_certificate(
        "acme-corp", keys["acme-corp"], corrected, data_id="diploma-alicia")
    say(f"   employer's next verification: {denied.outcome} ({denied.reason})")

    say("\n== UC8: Alicia reads her audit trail ==")
    log = gateway.handle(build_request("alicia", "DO", "UC8", {
        "data_id": "diploma-alicia",
    }, keys["alicia"]))
    for entry in log.payload["entries"]:
        say(f"   #{entry['seq']:>3} {entry['operation']:<14} {entry['outcome']:<7}"
            f" actor={entry['actor']:<10} {entry['detail']}")

    say("\n== The chain stays verifiable ==")
    report = ledger.validate_chain(gateway.chain)
    say(f"   validate_chain: ok={report.ok}, height={gateway.chain.height}")
    say(f"   chain file: {gateway.chain_file}")


if __name__ == "__main__":
    main()
