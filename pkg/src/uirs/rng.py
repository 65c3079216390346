"""Counter-based random streams keyed by (master seed, purpose tag, chunk index)."""
from __future__ import annotations

import zlib

import numpy as np

# sequences are drawn in fixed-size chunks, each with its own stream, so the
# draws do not depend on how chunks are distributed over workers
CHUNK = 1024


def substream(master_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    key = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode()), int(index)])
    return np.random.Generator(np.random.Philox(key))


def chunks(total: int, size: int = CHUNK) -> list[tuple[int, int]]:
    """Contiguous [start, stop) ranges covering ``total`` items."""
    return [(start, min(start + size, total)) for start in range(0, total, size)]
