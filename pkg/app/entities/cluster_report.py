from typing import Optional

from pydantic import BaseModel, Field


class Cluster(BaseModel):
    label: str
    members: tuple[str, ...]
    boundary_contact: int = 0
    max_degree: Optional[int] = None
    is_simple_path: Optional[bool] = None

    @property
    def size(self) -> int:
        return len(self.members)


class ClusterReport(BaseModel):
    """Clusters of the analysed vertex set.

    ``pre_fixation`` is set when the analysis ran on a raw snapshot instead of a certified-fixated region.
    """
    kind: str
    horizon: float
    analysed: int
    pre_fixation: bool = True
    clusters: list[Cluster] = Field(default_factory=list)

    def sizes(self) -> list[int]:
        return [cluster.size for cluster in self.clusters]

    def rows(self) -> list[dict]:
        return [
            {
                "cluster": index,
                "label": cluster.label,
                "size": cluster.size,
                "boundary_contact": cluster.boundary_contact,
                "max_degree": cluster.max_degree,
                "is_simple_path": cluster.is_simple_path,
                "pre_fixation": self.pre_fixation,
            }
            for index, cluster in enumerate(self.clusters)
        ]


class TraceSet(BaseModel):
    source: str
    horizon: float
    members: frozenset[str]
    touches_boundary: bool = False

    @property
    def size(self) -> int:
        return len(self.members)


class ThresholdPair(BaseModel):
    """Projections of one median run at the level of the source's initial value, weak and strict."""
    source: str
    level: float
    weak_flips: list[tuple[float, str, int]]
    strict_flips: list[tuple[float, str, int]]
    difference: frozenset[str]
