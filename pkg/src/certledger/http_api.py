"""HTTP+JSON surface of the gateway.

Use-case endpoints take a signed envelope; DENIED results come back as
HTTP 403 with the denial reason and the audit sequence number, never
silently. Inspection endpoints expose the chain itself.

Error body schema (all endpoints):
    {"outcome": "ERROR", "reason": "<code>"}          HTTP 400
    {"outcome": "DENIED", "reason": ..., "audit_seq": n}  HTTP 403
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse

from . import chain_apps, codec, ledger
from .errors import CertLedgerError, NotCanonical
from .gateway import ActorSpec, Gateway, UseCaseRequest, UseCaseResult
from .offchain_store import OffchainStore

ENDPOINT_OPERATIONS = {
    "register": "UC1",
    "grant": "UC2",
    "revoke": "UC3",
    "access": "UC4",
    "verify": "UC5",
    "owner-change": "UC6",
    "controller-change": "UC7",
    "audit": "UC8",
}


def _jsonable(value: Any) -> Any:
    """Canonical-value view: byte blobs become lowercase hex strings."""
    return codec.canonical_parse(codec.canonical_serialize(value))


def _error(reason: str, status: int = 400) -> JSONResponse:
    return JSONResponse({"outcome": "ERROR", "reason": reason}, status_code=status)


def _result_response(result: UseCaseResult) -> JSONResponse:
    body = result.to_value()
    if result.outcome == "GRANTED":
        return JSONResponse(body, status_code=200)
    if result.outcome == "DENIED":
        return JSONResponse(body, status_code=403)
    return JSONResponse(body, status_code=400)


def _parse_envelope(envelope: Any, signature_hex: Any,
                    expected_operation: str) -> UseCaseRequest | JSONResponse:
    if not isinstance(envelope, dict):
        return _error("bad_request_envelope")
    allowed = {"actor", "role_claim", "operation", "parameters", "attestation"}
    if not set(envelope) <= allowed:
        return _error("bad_request_envelope")
    missing = {"actor", "role_claim", "operation", "parameters"} - set(envelope)
    if missing:
        return _error("bad_request_envelope")
    if envelope["operation"] != expected_operation:
        return _error("operation_mismatch")
    if not isinstance(signature_hex, str):
        return _error("bad_signature_encoding")
    try:
        signature = bytes.fromhex(signature_hex)
    except ValueError:
        return _error("bad_signature_encoding")
    return UseCaseRequest(
        actor=envelope["actor"],
        role_claim=envelope["role_claim"],
        operation=envelope["operation"],
        parameters=envelope["parameters"],
        attestation=envelope.get("attestation"),
        signature=signature,
    )


def create_app(gateway: Gateway) -> FastAPI:
    app = FastAPI(title="certledger gateway", docs_url=None, redoc_url=None)

    def handle_post(expected_operation: str):
        async def endpoint(request: Request) -> JSONResponse:
            try:
                body = await request.json()
            except json.JSONDecodeError:
                return _error("bad_json")
            if not isinstance(body, dict) or set(body) != {"request", "signature"}:
                return _error("bad_request_body")
            parsed = _parse_envelope(body["request"], body["signature"],
                                     expected_operation)
            if isinstance(parsed, JSONResponse):
                return parsed
            return _result_response(gateway.handle(parsed))
        return endpoint

    for name, operation in ENDPOINT_OPERATIONS.items():
        if name == "audit":
            continue
        app.post(f"/uc/{name}")(handle_post(operation))

    @app.get("/uc/audit")
    def audit(request: str = Query(...), signature: str = Query(...)) -> JSONResponse:
        try:
            envelope = codec.canonical_parse(bytes.fromhex(request))
        except (ValueError, NotCanonical):
            return _error("bad_request_encoding")
        parsed = _parse_envelope(envelope, signature, "UC8")
        if isinstance(parsed, JSONResponse):
            return parsed
        return _result_response(gateway.handle(parsed))

    @app.get("/chain/validate")
    def chain_validate() -> JSONResponse:
        report = ledger.validate_chain(gateway.chain)
        return JSONResponse({
            "ok": report.ok,
            "first_bad_height": report.first_bad_height,
            "reason": report.reason,
        })

    @app.get("/chain/blocks")
    def chain_blocks(start: int = 0, count: Optional[int] = None) -> JSONResponse:
        blocks = gateway.chain.blocks[start:]
        if count is not None:
            blocks = blocks[:count]
        return JSONResponse({
            "height": gateway.chain.height,
            "blocks": [_jsonable(b.to_value()) for b in blocks],
        })

    return app


# --- configuration -------------------------------------------------------------


def load_gateway(config_path: Path | str) -> tuple[Gateway, str, int]:
    """Build a gateway from a JSON configuration file.

    Schema:
      listen:        "host:port"
      token_ttl:     seconds (optional, default 300)
      chain_file:    path; loaded when present, bootstrapped otherwise
      validator_keys: [hex 32-byte signing seeds]
      store: {id, data_dir, key_file}   key_file holds 32 bytes
      genesis: {token_secret?: hex, actors: [{actor_id, role, key, authority?}]}
    """
    config_path = Path(config_path)
    config = json.loads(config_path.read_text())
    base = config_path.parent

    def resolve(p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else base / path

    validators = [
        codec.generate_keypair(bytes.fromhex(seed))
        for seed in config["validator_keys"]
    ]
    store_cfg = config["store"]
    key_file = resolve(store_cfg["key_file"])
    store = OffchainStore(
        store_id=store_cfg["id"],
        data_dir=resolve(store_cfg["data_dir"]),
        key=key_file.read_bytes()[:32],
    )
    token_ttl = int(config.get("token_ttl", chain_apps.DEFAULT_TOKEN_TTL))
    chain_file = resolve(config["chain_file"])
    if chain_file.exists():
        gateway = Gateway.from_chain_file(
            chain_file, validators, store, token_ttl=token_ttl)
    else:
        genesis = config["genesis"]
        actors = [
            ActorSpec(
                actor_id=a["actor_id"],
                role=a["role"],
                key=bytes.fromhex(a["key"]),
                authority=bool(a.get("authority", False)),
            )
            for a in genesis["actors"]
        ]
        secret_hex = genesis.get("token_secret")
        gateway = Gateway.bootstrap(
            validators, actors, store,
            token_secret=bytes.fromhex(secret_hex) if secret_hex else None,
            token_ttl=token_ttl, chain_file=chain_file,
        )
    listen = config.get("listen", "127.0.0.1:8420")
    host, _, port = listen.partition(":")
    return gateway, host or "127.0.0.1", int(port or 8420)


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="certledger-gateway",
        description="Run the certificate-ledger gateway HTTP server.")
    parser.add_argument("--config", required=True, help="JSON configuration file")
    args = parser.parse_args(argv)
    try:
        gateway, host, port = load_gateway(args.config)
    except (OSError, KeyError, ValueError, CertLedgerError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    import uvicorn

    uvicorn.run(create_app(gateway), host=host, port=port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
