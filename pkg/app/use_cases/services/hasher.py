import hashlib
import logging

import numpy as np

from app.entities.seed_manifest import StreamKey

logger = logging.getLogger(__name__)


class Hasher:
    """Derives 128-bit Philox keys from (master seed, stream, vertex address)."""

    def __init__(self, digest_size: int = 16):
        self.digest_size = digest_size

    def stream_key(self, master_seed: int, stream: StreamKey, address: str) -> np.ndarray:
        # '|' and '#' never occur in an address, so the encoding is injective
        material = f"{master_seed}|{stream.label.value}|{stream.generation}|#{address}".encode()
        digest = hashlib.blake2b(material, digest_size=self.digest_size).digest()
        return np.frombuffer(digest, dtype="<u8").copy()
