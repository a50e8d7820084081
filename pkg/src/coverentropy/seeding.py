"""Deterministic seed derivation.

All randomness flows from one root seed; consumers derive their own
streams by hashing the root together with a fixed text label, so adding
or reordering consumers never shifts anyone else's stream.
"""

import hashlib


def derive_seed(seed: int, label: str) -> int:
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")
