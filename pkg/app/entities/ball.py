from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Ball:
    """All vertices within ``radius`` of ``center``, stored as flat arrays.

    Vertices are numbered in breadth-first order from the center; for a root-centered ball this
    numbering coincides with the canonical address code. ``neighbors[i]`` lists the ball indices of
    the three neighbors of vertex ``i`` in (parent, child 0, child 1) address order, ``-1`` marking a
    neighbor outside the ball.
    """
    center: str
    radius: int
    addresses: tuple[str, ...]
    distance: np.ndarray
    neighbors: np.ndarray
    index: dict[str, int] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.addresses)

    def __contains__(self, address: str) -> bool:
        return address in self.index

    def code(self, address: str) -> int:
        return self.index[address]

    @property
    def boundary(self) -> np.ndarray:
        return np.flatnonzero(self.distance == self.radius)
