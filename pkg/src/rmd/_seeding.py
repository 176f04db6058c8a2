from __future__ import annotations

import zlib


def derive_seed(seed: int, stage: str) -> int:
    """Per-stage seed: base seed plus a CRC32 of the stage name, mod 2**32."""
    return (int(seed) + zlib.crc32(stage.encode("utf-8"))) % 2**32
