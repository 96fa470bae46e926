"""Exception hierarchy shared across the package.

Names mirror the public contracts: callers catch these by name, and the
HTTP layer maps them onto DENIED/ERROR response bodies.
"""


class CertLedgerError(Exception):
    """Base class for every error raised by this package."""


# --- codec ---------------------------------------------------------------

class UnsupportedValue(CertLedgerError):
    """Value cannot be canonically serialized (float, non-string key, ...)."""


class NotCanonical(CertLedgerError):
    """Byte sequence is not the canonical serialization of any value."""


class BadSeedLength(CertLedgerError):
    """Key seed must be exactly 32 bytes."""


class MalformedKey(CertLedgerError):
    """Verification key has the wrong length."""


class MalformedSignature(CertLedgerError):
    """Signature has the wrong length."""


# --- ledger --------------------------------------------------------------

class BadSignature(CertLedgerError):
    """Transaction signature does not verify under its submitter key."""


class StaleNonce(CertLedgerError):
    """Nonce not strictly greater than the submitter's last accepted one."""


class UnknownPayloadKind(CertLedgerError):
    """Transaction payload kind is not one the chain applications accept."""


class WrongSealer(CertLedgerError):
    """Sealing key is not the round-robin validator for the next height."""


class EmptyMempool(CertLedgerError):
    """Nothing to seal and no heartbeat block was forced."""


class InvalidChain(CertLedgerError):
    """Chain failed validation; replay refused."""


# --- chain applications ---------------------------------------------------

class NotAuthorized(CertLedgerError):
    """Caller lacks the on-chain authorization for this operation."""


class UnknownDataId(CertLedgerError):
    """No integrity record or owner registration for this data id."""


class DuplicateActiveRecord(CertLedgerError):
    """An ACTIVE integrity record already exists for this data id."""


# --- off-chain store -------------------------------------------------------

class DuplicateDataId(CertLedgerError):
    """Data id already holds a record (live or tombstoned)."""


class TokenRejected(CertLedgerError):
    """Capability token failed validation; .reason carries the cause."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class Erased(CertLedgerError):
    """Record was erased; only the tombstone remains."""


class AlreadyErased(CertLedgerError):
    """Erasure requested twice for the same record."""


class NotFound(CertLedgerError):
    """No record stored under this data id."""


# --- domain ----------------------------------------------------------------

class InvalidCertificate(CertLedgerError):
    """Certificate violates its schema invariants."""
