"""certledger: permissioned ledger + encrypted off-chain store for
consent-gated digital academic certificates."""

__version__ = "0.1.0"
