"""Materialize a runnable network in ./network/: gateway configuration,
store key, and one encrypted keystore per actor.

Afterwards:
    certledger-gateway --config network/gateway.json
    certledger --keystore network/alicia.keystore --passphrase demo \\
        access --data-id ...

Run: python demos/setup_network.py [directory]
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

from certledger import codec
from certledger.keystore import Keystore, save_keystore

ACTORS = [
    ("uni-it", "DC", False),
    ("office-1", "DP", False),
    ("alicia", "DO", False),
    ("acme-corp", "RECIPIENT", False),
    ("dpa", "RECIPIENT", True),
]
PASSPHRASE = "demo"


def main() -> None:
    target = Path(sys.argv[1] if len(sys.argv) > 1 else "network")
    target.mkdir(parents=True, exist_ok=True)
    (target / "store.key").write_bytes(os.urandom(32))

    actors = []
    for actor_id, role, authority in ACTORS:
        store = Keystore.create(actor_id, role)
        save_keystore(store, target / f"{actor_id}.keystore", PASSPHRASE)
        actors.append({
            "actor_id": actor_id,
            "role": role,
            "authority": authority,
            "key": store.verification_key.hex(),
        })
        print(f"keystore: {target / f'{actor_id}.keystore'} ({role}"
              f"{', authority' if authority else ''})")

    validators = [codec.generate_keypair() for _ in range(3)]
    config = {
        "listen": "127.0.0.1:8420",
        "token_ttl": 300,
        "chain_file": "ledger.chain",
        "validator_keys": [k.signing_key.hex() for k in validators],
        "store": {"id": "store-1", "data_dir": "store-data",
                  "key_file": "store.key"},
        "genesis": {"actors": actors},
    }
    (target / "gateway.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"\nconfig: {target / 'gateway.json'}")
    print(f"keystore passphrase: {PASSPHRASE}")
    print(f"\nstart the gateway with:\n  certledger-gateway --config {target}/gateway.json")


if __name__ == "__main__":
    main()
