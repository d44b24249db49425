class UnionFind:
    """Disjoint sets over ``0..n-1`` with union by rank and path compression."""

    def __init__(self, n: int):
        self._leader = list(range(n))
        self._rank = [0] * n
        self.clusters = n

    def find(self, i: int) -> int:
        leader = self._leader
        root = i
        while leader[root] != root:
            root = leader[root]
        while leader[i] != root:
            leader[i], i = root, leader[i]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self._rank[ra] < self._rank[rb]:
            ra, rb = rb, ra
        if self._rank[ra] == self._rank[rb]:
            self._rank[ra] += 1
        self._leader[rb] = ra
        self.clusters -= 1
        return True

    def groups(self, members=None) -> list[list[int]]:
        """Sets restricted to ``members`` (all elements by default), each sorted, ordered by smallest element."""
        members = range(len(self._leader)) if members is None else members
        grouped: dict[int, list[int]] = {}
        for i in members:
            grouped.setdefault(self.find(i), []).append(i)
        return sorted((sorted(group) for group in grouped.values()), key=lambda group: group[0])
