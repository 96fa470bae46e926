"""Digital academic certificates over the generic use cases.

Role mapping for the deployment this package targets: one IT-services
data controller, school registry offices as data processors, students as
data owners, and employers or institutions as recipients.

A certificate's canonical bytes are exactly what gets salted, hashed,
and anchored, so the schema fixes field order and bans undeclared
extensions from the digest: extension fields travel with the record but
only declared ones are hashed.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import codec
from .errors import InvalidCertificate, NotCanonical, UnsupportedValue
from .gateway import Gateway, UseCaseResult, build_request


@dataclass(frozen=True)
class GradeRecord:
    course: str
    grade: str
    date: dt.date


@dataclass(frozen=True)
class Certificate:
    student_id: str
    full_name: str
    degree: str
    institution: str
    issue_date: dt.date
    grade_records: tuple[GradeRecord, ...] = ()
    extensions: dict = field(default_factory=dict)
    declared_extensions: tuple[str, ...] = ()


def canonicalize_certificate(cert: Certificate,
                             today: Optional[dt.date] = None) -> bytes:
    """Fixed-order canonical bytes; grade list order is significant."""
    today = today or dt.date.today()
    for name in ("student_id", "full_name", "degree", "institution"):
        value = getattr(cert, name)
        if not isinstance(value, str) or not value:
            raise InvalidCertificate(f"{name} must be a non-empty string")
    if not isinstance(cert.issue_date, dt.date):
        raise InvalidCertificate("issue_date must be a date")
    if cert.issue_date > today:
        raise InvalidCertificate("issue_date lies in the future")
    records = []
    for record in cert.grade_records:
        if not isinstance(record, GradeRecord):
            raise InvalidCertificate("grade_records must hold GradeRecord items")
        if not record.course or not record.grade:
            raise InvalidCertificate("grade record fields must be non-empty")
        if not isinstance(record.date, dt.date):
            raise InvalidCertificate("grade record date must be a date")
        records.append({
            "course": record.course,
            "date": record.date.isoformat(),
            "grade": record.grade,
        })
    hashed_extensions = {}
    for key in cert.declared_extensions:
        if key not in cert.extensions:
            raise InvalidCertificate(f"declared extension {key!r} missing")
        value = cert.extensions[key]
        if not isinstance(value, str):
            raise InvalidCertificate("extension values must be strings")
        hashed_extensions[key] = value
    value = {
        "degree": cert.degree,
        "extensions": hashed_extensions,
        "full_name": cert.full_name,
        "grade_records": records,
        "institution": cert.institution,
        "issue_date": cert.issue_date.isoformat(),
        "student_id": cert.student_id,
    }
    try:
        return codec.canonical_serialize(value)
    except UnsupportedValue as exc:
        raise InvalidCertificate(str(exc)) from exc


def parse_certificate(data: bytes) -> Certificate:
    """Inverse of canonicalize_certificate for `.cert` interchange files."""
    try:
        value = codec.canonical_parse(data)
    except NotCanonical as exc:
        raise InvalidCertificate(f"not a canonical certificate: {exc}") from exc
    expected = {"degree", "extensions", "full_name", "grade_records",
                "institution", "issue_date", "student_id"}
    if not isinstance(value, dict) or set(value) != expected:
        raise InvalidCertificate("unexpected certificate fields")
    try:
        records = tuple(
            GradeRecord(course=r["course"], grade=r["grade"],
                        date=dt.date.fromisoformat(r["date"]))
            for r in value["grade_records"]
        )
        cert = Certificate(
            student_id=value["student_id"],
            full_name=value["full_name"],
            degree=value["degree"],
            institution=value["institution"],
            issue_date=dt.date.fromisoformat(value["issue_date"]),
            grade_records=records,
            extensions=dict(value["extensions"]),
            declared_extensions=tuple(sorted(value["extensions"])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidCertificate(f"malformed certificate: {exc}") from exc
    if canonicalize_certificate(cert, today=cert.issue_date) != data:
        raise InvalidCertificate("certificate does not round-trip")
    return cert


def write_cert_file(cert: Certificate, path: Path | str) -> None:
    Path(path).write_bytes(canonicalize_certificate(cert))


def read_cert_file(path: Path | str) -> Certificate:
    return parse_certificate(Path(path).read_bytes())


@dataclass(frozen=True)
class RoleMap:
    dc: str
    dps: tuple[str, ...]
    authority: Optional[str] = None

    def __post_init__(self) -> None:
        if self.dc in self.dps:
            raise UnsupportedValue("data controller cannot double as a processor")


def role_map_from_state(state) -> RoleMap:
    dc = next((a.actor_id for a in state.actors.values() if a.role == "DC"), None)
    if dc is None:
        raise UnsupportedValue("no data controller registered")
    dps = tuple(sorted(a.actor_id for a in state.actors.values() if a.role == "DP"))
    authority = next(
        (a.actor_id for a in state.actors.values() if a.authority), None)
    return RoleMap(dc=dc, dps=dps, authority=authority)


def registration_consent(data_id: str, student: str, office: str,
                         student_key: codec.KeyPair,
                         attestation: Optional[dict] = None) -> dict:
    from . import chain_apps

    return chain_apps.make_approval(
        student, "consent",
        {"action": "register", "data_id": data_id, "owner": student,
         "registrar": office},
        student_key, attestation=attestation,
    )


def verification_consent(data_id: str, student: str, employer: str,
                         student_key: codec.KeyPair,
                         attestation: Optional[dict] = None) -> dict:
    from . import chain_apps

    return chain_apps.make_approval(
        student, "consent",
        {"action": "grant", "data_id": data_id, "grantee": employer,
         "permission": "VERIFY"},
        student_key, attestation=attestation,
    )


class CertificateService:
    """Certificate-level convenience flows over a gateway."""

    def __init__(self, gateway: Gateway, role_map: Optional[RoleMap] = None):
        self.gateway = gateway
        self.role_map = role_map or role_map_from_state(gateway.state)

    def issue_certificate(self, office: str, office_key: codec.KeyPair,
                          cert: Certificate, consent: dict) -> UseCaseResult:
        """Registers the certificate under the data id named in the
        student's consent. Offices submit as processors; any other role
        is denied by the gateway."""
        claims = consent.get("claims", {}) if isinstance(consent, dict) else {}
        data_id = claims.get("data_id", "")
        owner = claims.get("owner", "")
        request = build_request(office, "DP", "UC1", {
            "data_id": data_id,
            "owner": owner,
            "plaintext": canonicalize_certificate(cert),
            "consent": consent,
        }, office_key)
        return self.gateway.handle(request)

    def verify_certificate(self, employer: str, employer_key: codec.KeyPair,
                           cert: Certificate, data_id: Optional[str] = None,
                           student: Optional[str] = None) -> UseCaseResult:
        if data_id is None:
            data_id = self._resolve_data_id(student)
        role = self.gateway.state.actors[employer].role \
            if employer in self.gateway.state.actors else "RECIPIENT"
        request = build_request(employer, role, "UC5", {
            "data_id": data_id,
            "candidate_plaintext": canonicalize_certificate(
                cert, today=cert.issue_date),
        }, employer_key)
        return self.gateway.handle(request)

    def _resolve_data_id(self, student: Optional[str]) -> str:
        if student is None:
            raise UnsupportedValue("need a data id or a student id")
        matches = [d for d, o in self.gateway.state.owners.items() if o == student]
        if len(matches) != 1:
            raise UnsupportedValue(
                f"student {student!r} owns {len(matches)} records; pass data_id")
        return matches[0]
