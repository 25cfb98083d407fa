"""Named random substreams derived from one root seed."""

from __future__ import annotations

import hashlib
import random


def substream(seed: int, sensor: int | str, purpose: str) -> random.Random:
    """Independent stream per (sensor, purpose); adding a sensor leaves the others alone."""
    digest = hashlib.sha256(f"{seed}:{sensor}:{purpose}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))
