"""Command-line client for all four actor roles.

Signs canonical requests with the keystore's next key (fresh per request
in KEY_PER_TRANSACTION mode), calls the gateway over HTTP, prints the
response. Exit codes: 0 GRANTED, 3 DENIED, 1 transport or gateway error,
2 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

import httpx

from . import chain_apps, codec
from .certs import canonicalize_certificate, read_cert_file
from .errors import CertLedgerError
from .keystore import (
    KEY_PER_TRANSACTION,
    STATIC_KEY,
    Keystore,
    keystore_next_key,
    load_keystore,
    rotation_attestation,
    save_keystore,
)

EXIT_GRANTED = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_DENIED = 3


def _jsonable(value) -> object:
    return codec.canonical_parse(codec.canonical_serialize(value))


class _Cli:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.gateway_url = args.gateway.rstrip("/")

    # -- keystores ---------------------------------------------------------

    def _passphrase(self, flag_value: Optional[str]) -> str:
        if flag_value is not None:
            return flag_value
        return os.environ.get("CERTLEDGER_PASSPHRASE", "")

    def load_main_keystore(self) -> Keystore:
        return load_keystore(self.args.keystore,
                             self._passphrase(self.args.passphrase))

    def _signing_key(self, store: Keystore, path: Path | str,
                     passphrase: str) -> tuple[codec.KeyPair, Optional[dict]]:
        """Next key plus its rotation attestation; persists minted keys
        before anything is sent."""
        key = keystore_next_key(store)
        attestation = rotation_attestation(store)
        if store.mode == KEY_PER_TRANSACTION:
            save_keystore(store, path, passphrase)
        return key, attestation

    def approval_from_keystore(self, path: str, passphrase: Optional[str],
                               purpose: str, claims: dict) -> dict:
        """Approval signed by a different actor's keystore; carries its
        own rotation attestation in per-transaction mode."""
        store = load_keystore(path, self._passphrase(passphrase))
        key, attestation = self._signing_key(store, path, self._passphrase(passphrase))
        return chain_apps.make_approval(
            store.actor_id, purpose, claims, key, attestation=attestation)

    # -- transport -----------------------------------------------------------

    def send(self, operation: str, make_parameters) -> tuple[int, dict]:
        """One request mints exactly one key: the envelope signature and
        any same-actor approval share it, and its attestation rides the
        envelope so the chain applies the rotation once, first."""
        store = self.load_main_keystore()
        key, attestation = self._signing_key(
            store, self.args.keystore, self._passphrase(self.args.passphrase))

        def same_actor_approval(purpose: str, claims: dict) -> dict:
            return chain_apps.make_approval(store.actor_id, purpose, claims, key)

        parameters = make_parameters(store, same_actor_approval) \
            if callable(make_parameters) else make_parameters
        envelope = {
            "actor": store.actor_id,
            "operation": operation,
            "parameters": parameters,
            "role_claim": store.role,
        }
        if attestation is not None:
            envelope["attestation"] = attestation
        message = codec.canonical_serialize(envelope)
        signature = codec.sign(key, message)
        endpoint = {
            "UC1": "register", "UC2": "grant", "UC3": "revoke", "UC4": "access",
            "UC5": "verify", "UC6": "owner-change", "UC7": "controller-change",
        }
        with httpx.Client(timeout=30.0) as client:
            if operation == "UC8":
                response = client.get(f"{self.gateway_url}/uc/audit", params={
                    "request": message.hex(), "signature": signature.hex(),
                })
            else:
                response = client.post(
                    f"{self.gateway_url}/uc/{endpoint[operation]}",
                    json={"request": _jsonable(envelope),
                          "signature": signature.hex()},
                )
        return response.status_code, response.json()

    def finish(self, body: dict, lines: Optional[list[str]] = None) -> int:
        if self.args.output == "canonical":
            sys.stdout.write(codec.canonical_serialize(_jsonable(body)).decode() + "\n")
        else:
            for line in lines or []:
                print(line)
        outcome = body.get("outcome")
        if outcome == "GRANTED":
            return EXIT_GRANTED
        if outcome == "DENIED":
            if self.args.output != "canonical":
                print(f"DENIED: {body.get('reason')} (audit_seq={body.get('audit_seq')})")
            return EXIT_DENIED
        if self.args.output != "canonical":
            print(f"ERROR: {body.get('reason')}")
        return EXIT_ERROR

    # -- subcommands ----------------------------------------------------------

    def cmd_keygen(self) -> int:
        args = self.args
        store = Keystore.create(args.actor, args.role, args.mode)
        save_keystore(store, args.keystore, self._passphrase(args.passphrase))
        print(f"actor: {store.actor_id}")
        print(f"role: {store.role}")
        print(f"mode: {store.mode}")
        print(f"verification_key: {store.verification_key.hex()}")
        return EXIT_GRANTED

    def cmd_register(self) -> int:
        args = self.args
        plaintext = read_cert_bytes(args.cert)
        store = self.load_main_keystore()
        consent = self.approval_from_keystore(
            args.owner_keystore, args.owner_passphrase, "consent",
            {"action": "register", "data_id": args.data_id, "owner": args.owner,
             "registrar": store.actor_id})
        status, body = self.send("UC1", {
            "data_id": args.data_id,
            "owner": args.owner,
            "plaintext": plaintext.hex(),
            "consent": consent,
        })
        lines = []
        if body.get("outcome") == "GRANTED":
            payload = body["payload"]
            lines = [f"registered {payload['data_id']}",
                     f"link: {payload['link']}",
                     f"digest: {payload['digest']}"]
        return self.finish(body, lines)

    def cmd_grant(self) -> int:
        args = self.args
        claims = {"action": "grant", "data_id": args.data_id,
                  "grantee": args.grantee, "permission": args.permission}

        def make_parameters(store, same_actor_approval):
            if args.owner_keystore:  # requester acting for a distinct owner
                consent = self.approval_from_keystore(
                    args.owner_keystore, args.owner_passphrase, "consent", claims)
            else:
                consent = same_actor_approval("consent", claims)
            parameters = {
                "data_id": args.data_id,
                "grantee": args.grantee,
                "permission": args.permission,
                "consent": consent,
            }
            if args.expiry is not None:
                parameters["expiry"] = args.expiry
            return parameters

        status, body = self.send("UC2", make_parameters)
        return self.finish(body, [f"granted {args.permission} on {args.data_id} "
                                  f"to {args.grantee}"]
                           if body.get("outcome") == "GRANTED" else [])

    def cmd_revoke(self) -> int:
        args = self.args
        parameters = {"data_id": args.data_id, "grantee": args.grantee}
        if args.permission:
            parameters["permission"] = args.permission
        status, body = self.send("UC3", parameters)
        return self.finish(body, [f"revoked {args.grantee} on {args.data_id}"]
                           if body.get("outcome") == "GRANTED" else [])

    def cmd_access(self) -> int:
        args = self.args
        status, body = self.send("UC4", {"data_id": args.data_id})
        lines = []
        if body.get("outcome") == "GRANTED":
            plaintext = bytes.fromhex(body["payload"]["plaintext"])
            if args.save:
                Path(args.save).write_bytes(plaintext)
                lines = [f"saved {len(plaintext)} bytes to {args.save}"]
            else:
                lines = [plaintext.decode("utf-8", errors="replace")]
        return self.finish(body, lines)

    def cmd_verify(self) -> int:
        args = self.args
        parameters: dict = {"data_id": args.data_id}
        if args.cert:
            parameters["candidate_plaintext"] = read_cert_bytes(args.cert).hex()
        elif args.digest:
            parameters["candidate_digest"] = args.digest.lower()
        else:
            print("verify needs --cert or --digest", file=sys.stderr)
            return EXIT_USAGE
        status, body = self.send("UC5", parameters)
        lines = []
        if body.get("outcome") == "GRANTED":
            lines = [body["payload"]["result"]]
        return self.finish(body, lines)

    def cmd_change(self) -> int:
        args = self.args
        parameters: dict = {"data_id": args.data_id, "change": args.action}
        if args.action == "modify":
            if not args.cert:
                print("modify needs --cert with the new content", file=sys.stderr)
                return EXIT_USAGE
            parameters["new_plaintext"] = read_cert_bytes(args.cert).hex()
        if args.by == "owner":
            if not args.countersign_keystore:
                print("owner change needs --countersign-keystore", file=sys.stderr)
                return EXIT_USAGE
            store = self.load_main_keystore()
            parameters["countersignature"] = self.approval_from_keystore(
                args.countersign_keystore, args.countersign_passphrase,
                "countersign",
                {"action": "countersign", "change": args.action,
                 "data_id": args.data_id, "owner": store.actor_id})
            status, body = self.send("UC6", parameters)
        else:
            if args.action == "modify":
                if not args.owner_keystore:
                    print("controller modify needs --owner-keystore", file=sys.stderr)
                    return EXIT_USAGE
                store = self.load_main_keystore()
                parameters["owner_authorization"] = self.approval_from_keystore(
                    args.owner_keystore, args.owner_passphrase, "consent",
                    {"action": "grant", "data_id": args.data_id,
                     "grantee": store.actor_id, "permission": "MODIFY"})
            status, body = self.send("UC7", parameters)
        lines = []
        if body.get("outcome") == "GRANTED":
            payload = body["payload"]
            if args.action == "modify":
                lines = [f"modified: version {payload.get('version')}",
                         f"digest: {payload.get('digest')}"]
            else:
                lines = [f"erased at {payload.get('erased_at')}"]
        return self.finish(body, lines)

    def cmd_audit(self) -> int:
        args = self.args
        parameters: dict = {}
        if args.data_id:
            parameters["data_id"] = args.data_id
        if args.actor_filter:
            parameters["actor_filter"] = args.actor_filter
        if args.seq_from is not None:
            parameters["seq_from"] = args.seq_from
        if args.seq_to is not None:
            parameters["seq_to"] = args.seq_to
        status, body = self.send("UC8", parameters)
        lines = []
        if body.get("outcome") == "GRANTED":
            for entry in body["payload"]["entries"]:
                lines.append(
                    f"#{entry['seq']} {entry['operation']} {entry['outcome']} "
                    f"actor={entry['actor']} data={entry.get('data_id', '-')} "
                    f"detail={entry['detail']}")
            lines.append(f"{len(body['payload']['entries'])} entries")
        return self.finish(body, lines)

    def cmd_chain_validate(self) -> int:
        with httpx.Client(timeout=30.0) as client:
            response = client.get(f"{self.gateway_url}/chain/validate")
        body = response.json()
        if self.args.output == "canonical":
            sys.stdout.write(codec.canonical_serialize(_jsonable(body)).decode() + "\n")
        elif body["ok"]:
            print("chain ok")
        else:
            print(f"chain INVALID at height {body['first_bad_height']}: {body['reason']}")
        return EXIT_GRANTED if body["ok"] else EXIT_ERROR


def read_cert_bytes(path: str) -> bytes:
    """A `.cert` file is already canonical bytes; re-canonicalize to
    reject corrupt files early."""
    cert = read_cert_file(path)
    return canonicalize_certificate(cert, today=cert.issue_date)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certledger", description="Client for the certificate ledger gateway.")
    parser.add_argument("--gateway", default="http://127.0.0.1:8420")
    parser.add_argument("--keystore", help="path to the actor keystore file")
    parser.add_argument("--passphrase", default=None,
                        help="keystore passphrase (default: $CERTLEDGER_PASSPHRASE)")
    parser.add_argument("--output", choices=("text", "canonical"), default="text")
    sub = parser.add_subparsers(dest="command", required=True)

    keygen = sub.add_parser("keygen", help="create a keystore")
    keygen.add_argument("--actor", required=True)
    keygen.add_argument("--role", required=True,
                        choices=("DO", "DC", "DP", "RECIPIENT"))
    keygen.add_argument("--mode", default=STATIC_KEY,
                        choices=(STATIC_KEY, KEY_PER_TRANSACTION))

    register = sub.add_parser("register", help="register a certificate (UC1)")
    register.add_argument("--data-id", required=True)
    register.add_argument("--owner", required=True)
    register.add_argument("--cert", required=True)
    register.add_argument("--owner-keystore", required=True)
    register.add_argument("--owner-passphrase", default=None)

    grant = sub.add_parser("grant", help="grant access (UC2)")
    grant.add_argument("--data-id", required=True)
    grant.add_argument("--grantee", required=True)
    grant.add_argument("--permission", required=True,
                       choices=("READ", "VERIFY", "MODIFY", "DELETE"))
    grant.add_argument("--expiry", type=int, default=None)
    grant.add_argument("--owner-keystore", default=None,
                       help="owner keystore when the requester is not the owner")
    grant.add_argument("--owner-passphrase", default=None)

    revoke = sub.add_parser("revoke", help="revoke access (UC3)")
    revoke.add_argument("--data-id", required=True)
    revoke.add_argument("--grantee", required=True)
    revoke.add_argument("--permission", default=None)

    access = sub.add_parser("access", help="fetch data (UC4)")
    access.add_argument("--data-id", required=True)
    access.add_argument("--save", default=None)

    verify = sub.add_parser("verify", help="verify integrity (UC5)")
    verify.add_argument("--data-id", required=True)
    verify.add_argument("--cert", default=None)
    verify.add_argument("--digest", default=None)

    change = sub.add_parser("change", help="modify or erase data (UC6/UC7)")
    change.add_argument("--by", required=True, choices=("owner", "controller"))
    change.add_argument("--action", required=True, choices=("modify", "erase"))
    change.add_argument("--data-id", required=True)
    change.add_argument("--cert", default=None)
    change.add_argument("--countersign-keystore", default=None)
    change.add_argument("--countersign-passphrase", default=None)
    change.add_argument("--owner-keystore", default=None)
    change.add_argument("--owner-passphrase", default=None)

    audit = sub.add_parser("audit", help="request the access log (UC8)")
    audit.add_argument("--data-id", default=None)
    audit.add_argument("--actor-filter", default=None)
    audit.add_argument("--seq-from", type=int, default=None)
    audit.add_argument("--seq-to", type=int, default=None)

    sub.add_parser("chain-validate", help="validate the gateway's chain")
    return parser


_NEEDS_KEYSTORE = {"register", "grant", "revoke", "access", "verify",
                   "change", "audit", "keygen"}


def run_command(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if args.command in _NEEDS_KEYSTORE and not args.keystore:
        print("--keystore is required for this command", file=sys.stderr)
        return EXIT_USAGE
    cli = _Cli(args)
    handler = getattr(cli, f"cmd_{args.command.replace('-', '_')}")
    try:
        return handler()
    except httpx.HTTPError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (CertLedgerError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    raise SystemExit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
