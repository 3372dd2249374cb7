import hashlib
import random


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary parts; distinct tuples give independent streams."""
    digest = hashlib.sha256(":".join(map(str, parts)).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(*parts) -> random.Random:
    return random.Random(derive_seed(*parts))
