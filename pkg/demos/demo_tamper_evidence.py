"""Tamper evidence on the persisted chain.

Flip any byte of the ledger file — a payload character, a hash, a
signature, even a newline — and validation pinpoints the damage at or
below the mutated height.

Run: python demos/demo_tamper_evidence.py
"""

from __future__ import annotations

import random
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "scripts"))

from certledger import ledger
from generate_golden import golden_session


def main() -> None:
    workdir = Path(tempfile.mkdtemp(prefix="certledger-tamper-"))
    print("== Build the scripted session chain ==")
    gateway = golden_session(workdir)
    path = workdir / "golden.chain"
    original = path.read_bytes()
    print(f"   {gateway.chain.height} blocks, {len(original)} bytes on disk")
    print(f"   pristine validation: ok={ledger.validate_chain_file(path).ok}")

    line_of_byte = []
    line = 0
    for byte in original:
        line_of_byte.append(line)
        if byte == 0x0A:
            line += 1

    print("\n== Flip twelve random bits ==")
    rng = random.Random(7)
    for _ in range(12):
        pick = rng.randrange(len(original) * 8)
        byte_index, bit = divmod(pick, 8)
        mutated = bytearray(original)
        mutated[byte_index] ^= 1 << bit
        path.write_bytes(bytes(mutated))
        report = ledger.validate_chain_file(path)
        height = min(line_of_byte[byte_index], gateway.chain.height - 1)
        print(f"   byte {byte_index:>5} bit {bit} (block {height}): "
              f"detected at height {report.first_bad_height} — {report.reason}")
        assert not report.ok and report.first_bad_height <= height
    path.write_bytes(original)
    print(f"\n== Restored: ok={ledger.validate_chain_file(path).ok} ==")


if __name__ == "__main__":
    main()
