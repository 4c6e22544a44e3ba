"""Private proof-of-authority ledger for procurement and asset management.

The package is organized by subsystem:

- ``hashing`` / ``codec``: SHA3-512 digests, approval MACs, and the
  length-prefixed canonical byte encoding every node hashes and ships.
- ``procurement`` / ``assets``: the typed transaction payloads and the
  deterministic state machine that validates them.
- ``ledger`` / ``storage``: hash-chained blocks, chain verification, and the
  append-only block log.
- ``consensus`` / ``p2p`` / ``sim``: the proof-of-authority engine, the
  message layer, and a seeded discrete-event network simulator.
- ``node`` / ``cli``: the runnable node (HTTP API + socket transport) and
  operator tooling.
"""

__version__ = "0.1.0"
