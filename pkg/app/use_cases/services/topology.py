"""Canonical addressing on the infinite 3-regular tree.

The root is the empty word. Its three neighbors are ``"0"``, ``"1"``, ``"2"``; every other vertex
``w`` has parent ``w[:-1]`` and children ``w + "0"``, ``w + "1"``. All functions here are pure.
"""
import logging
from collections import deque
from functools import lru_cache

import numpy as np

from app.core.exceptions import MalformedAddressError
from app.entities.ball import Ball

logger = logging.getLogger(__name__)

ROOT = ""


@lru_cache(maxsize=1 << 16)
def validate(address: str) -> str:
    if not isinstance(address, str):
        raise MalformedAddressError(address)
    if address and (address[0] not in "012" or any(letter not in "01" for letter in address[1:])):
        raise MalformedAddressError(address)
    return address


def neighbors(address: str) -> tuple[str, str, str]:
    validate(address)
    if not address:
        return "0", "1", "2"
    return address[:-1], address + "0", address + "1"


def _common_prefix(u: str, v: str) -> int:
    length = 0
    for a, b in zip(u, v):
        if a != b:
            break
        length += 1
    return length


def distance(u: str, v: str) -> int:
    validate(u)
    validate(v)
    common = _common_prefix(u, v)
    return len(u) + len(v) - 2 * common


def path_between(u: str, v: str) -> list[str]:
    """Unique self-avoiding path from ``u`` to ``v``, both endpoints included."""
    validate(u)
    validate(v)
    common = _common_prefix(u, v)
    up = [u[:length] for length in range(len(u), common - 1, -1)]
    down = [v[:length] for length in range(common + 1, len(v) + 1)]
    return up + down


def ball_size(radius: int) -> int:
    return 3 * 2 ** radius - 2


def encode(address: str) -> int:
    """Bijective code of ``address``: breadth-first rank from the root."""
    validate(address)
    depth = len(address)
    if depth == 0:
        return 0
    within = int(address[0]) * 2 ** (depth - 1)
    if depth > 1:
        within += int(address[1:], 2)
    return ball_size(depth - 1) + within


def decode(code: int) -> str:
    if code < 0:
        raise MalformedAddressError(code)
    if code == 0:
        return ROOT
    depth = 1
    while ball_size(depth) <= code:
        depth += 1
    within = code - ball_size(depth - 1)
    head, tail = divmod(within, 2 ** (depth - 1))
    if depth == 1:
        return str(head)
    return str(head) + format(tail, f"0{depth - 1}b")


@lru_cache(maxsize=16)
def ball(center: str, radius: int) -> Ball:
    """Enumerate the ball around ``center`` and build its neighbor table."""
    validate(center)
    if radius < 0:
        raise ValueError(f"radius must be nonnegative, got {radius}")
    addresses = [center]
    distances = [0]
    index = {center: 0}
    queue = deque([center])
    while queue:
        current = queue.popleft()
        depth = distances[index[current]]
        if depth == radius:
            continue
        for neighbor in neighbors(current):
            if neighbor not in index:
                index[neighbor] = len(addresses)
                addresses.append(neighbor)
                distances.append(depth + 1)
                queue.append(neighbor)
    table = np.full((len(addresses), 3), -1, dtype=np.int64)
    for i, address in enumerate(addresses):
        for slot, neighbor in enumerate(neighbors(address)):
            table[i, slot] = index.get(neighbor, -1)
    logger.debug(f"Built ball around {center!r} of radius {radius} with {len(addresses)} vertices")
    return Ball(center=center, radius=radius, addresses=tuple(addresses),
                distance=np.asarray(distances, dtype=np.int64), neighbors=table, index=index)
