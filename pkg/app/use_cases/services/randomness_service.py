"""Counter-based, lazily materialized randomness for the infinite tree.

Every draw is a pure function of (master seed, vertex address, stream label, generation, index):
the triple is hashed into a Philox key and the index is the position in that Philox stream.
Nothing is generated globally, so any finite window of the tree can be sampled on demand and
coupled reruns replay the exact same clocks.
"""
import bisect
import logging
import math

import numpy as np

from app.entities.seed_manifest import SeedManifest, StreamKey, StreamLabel
from app.use_cases.services.hasher import Hasher

logger = logging.getLogger(__name__)


class ClockStream:
    """Ring times of one rate-1 Poisson clock, extended on demand.

    Extending the horizon appends to the stream and never alters earlier rings.
    """

    def __init__(self, address: str, generator: np.random.Generator, suppressed_until: float | None = None):
        self.address = address
        self._generator = generator
        self._times: list[float] = []
        self._last = 0.0
        self.suppressed_until = suppressed_until

    def _extend(self, horizon: float):
        while self._last <= horizon:
            block = max(8, int(horizon - self._last) + 4 * int(math.sqrt(max(horizon - self._last, 1.0))) + 4)
            increments = -np.log1p(-self._generator.random(block))
            # accumulate from the last ring so block boundaries do not change rounding
            times = np.cumsum(np.concatenate(([self._last], increments)))[1:]
            self._times.extend(times.tolist())
            self._last = float(times[-1])

    def raw_rings(self, horizon: float) -> list[float]:
        """Rings in [0, horizon] ignoring suppression."""
        if horizon < 0:
            return []
        self._extend(horizon)
        return self._times[:bisect.bisect_right(self._times, horizon)]

    def rings(self, horizon: float) -> list[float]:
        times = self.raw_rings(horizon)
        if self.suppressed_until is not None:
            times = [t for t in times if t > self.suppressed_until]
        return times

    def increments(self, count: int) -> np.ndarray:
        """The first ``count`` exponential gaps of the raw stream."""
        while len(self._times) < count:
            self._extend(self._last + count)
        return np.diff(np.asarray([0.0] + self._times[:count]))


class RandomnessService:
    """All randomness of one replica, keyed by its SeedManifest."""

    def __init__(self, manifest: SeedManifest, hasher: Hasher | None = None):
        self.manifest = manifest
        self.hasher = hasher or Hasher()
        self._uniforms: dict[tuple[str, StreamLabel], float] = {}
        self._clocks: dict[str, ClockStream] = {}

    def _generator(self, stream: StreamKey, address: str) -> np.random.Generator:
        key = self.hasher.stream_key(self.manifest.master_seed, stream, address)
        return np.random.Generator(np.random.Philox(key=key))

    def _uniform(self, stream: StreamKey, address: str) -> float:
        cache_key = (address, stream.label)
        value = self._uniforms.get(cache_key)
        if value is None:
            value = float(self._generator(stream, address).random())
            self._uniforms[cache_key] = value
        return value

    def initial_uniform(self, address: str) -> float:
        return self._uniform(self.manifest.spin_stream(address), address)

    def initial_uniforms(self, addresses) -> np.ndarray:
        return np.fromiter((self.initial_uniform(a) for a in addresses), dtype=np.float64, count=len(addresses))

    def tie_break(self, address: str) -> float:
        return self._uniform(StreamKey(label=StreamLabel.tie_break), address)

    def clock(self, address: str) -> ClockStream:
        stream = self._clocks.get(address)
        if stream is None:
            stream = ClockStream(address, self._generator(self.manifest.clock_stream(address), address),
                                 self.manifest.clock_suppression.get(address))
            self._clocks[address] = stream
        return stream

    def rings(self, address: str, horizon: float) -> list[float]:
        return self.clock(address).rings(horizon)


def initial_uniform(manifest: SeedManifest, address: str) -> float:
    return RandomnessService(manifest).initial_uniform(address)


def rings(manifest: SeedManifest, address: str, horizon: float) -> list[float]:
    return RandomnessService(manifest).rings(address, horizon)


def tie_break(manifest: SeedManifest, address: str) -> float:
    return RandomnessService(manifest).tie_break(address)
