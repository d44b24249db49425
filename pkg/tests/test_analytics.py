import numpy as np
import pytest

from app.entities.seed_manifest import SeedManifest
from app.entities.trajectory import BoundaryCondition, RunMode
from app.use_cases.services import topology
from app.use_cases.services.analytics_service import AnalyticsService, Snapshot, dyadic_tail
from app.utils.union_find import UnionFind
from tests.conftest import SEEDS


@pytest.fixture
def radius_two_snapshot():
    # "0" and "00" share origin 5, which isolates "01" from the rest
    ball = topology.ball("", 2)
    origins = np.zeros(ball.size, dtype=np.int64)
    origins[[ball.code("0"), ball.code("00")]] = 5
    values = np.where(origins == 5, 0.7, 0.2)
    return Snapshot(ball, 2, 1.0, values, origins, np.arange(ball.size), pre_fixation=False)


def test_union_find_groups():
    forest = UnionFind(6)
    forest.union(0, 3)
    forest.union(3, 5)
    forest.union(1, 2)
    assert forest.groups() == [[0, 3, 5], [1, 2], [4]]
    assert forest.clusters == 3
    assert not forest.union(5, 0)
    assert forest.groups([4, 5, 1]) == [[1], [4], [5]]


def test_agreement_clusters(radius_two_snapshot):
    report = AnalyticsService.agreement_clusters(radius_two_snapshot)
    assert sorted(report.sizes()) == [1, 2, 7]
    assert not report.pre_fixation
    assert report.analysed == 10


def test_disagreement_components(radius_two_snapshot):
    report = AnalyticsService.disagreement_components(radius_two_snapshot)
    assert len(report.clusters) == 1
    component = report.clusters[0]
    assert set(component.members) == {"", "0", "01"}
    assert component.max_degree == 2
    assert component.is_simple_path


def test_neighbor_agreement_skips_incomplete_neighborhoods(radius_two_snapshot):
    # "01" disagrees with everything but sits on the boundary
    checked, lonely = AnalyticsService.lonely_vertices(radius_two_snapshot)
    assert (checked, lonely) == (4, [])
    assert AnalyticsService.neighbor_agreement_rate(radius_two_snapshot) == 1.0


def test_lonely_inner_vertex_is_reported():
    ball = topology.ball("", 2)
    origins = np.zeros(ball.size, dtype=np.int64)
    origins[ball.code("1")] = 9
    snapshot = Snapshot(ball, 2, 1.0, origins / 10, origins, np.arange(ball.size), pre_fixation=False)
    assert AnalyticsService.lonely_vertices(snapshot) == (4, ["1"])
    assert AnalyticsService.neighbor_agreement_rate(snapshot) == pytest.approx(0.75)


def test_certified_neighbor_outside_the_analysed_set_counts_as_agreeing():
    ball = topology.ball("", 2)
    origins = np.arange(ball.size, dtype=np.int64)
    origins[ball.code("2")] = origins[ball.code("20")]
    analysed = np.asarray([ball.code("2")])
    known = np.ones(ball.size, dtype=bool)
    snapshot = Snapshot(ball, 2, 1.0, origins / ball.size, origins, analysed, pre_fixation=False, known=known)
    assert AnalyticsService.lonely_vertices(snapshot) == (1, [])
    known[ball.code("21")] = False
    unknown = Snapshot(ball, 2, 1.0, origins / ball.size, origins, analysed, pre_fixation=False, known=known)
    assert AnalyticsService.lonely_vertices(unknown) == (0, [])


def test_value_clusters_match_origin_clusters(engine):
    for seed in SEEDS:
        trajectory = engine.run(SeedManifest(master_seed=seed), topology.ball("", 5),
                                BoundaryCondition.frozen_initial(), RunMode.median(), 3.0)
        snapshot = Snapshot.of(trajectory)
        by_origin = AnalyticsService.agreement_clusters(snapshot)
        by_value = AnalyticsService.agreement_clusters(snapshot, by_value=True)
        assert [c.members for c in by_origin.clusters] == [c.members for c in by_value.clusters]


def test_dyadic_tail():
    assert dyadic_tail([1, 2, 3, 8]) == [(1, 1.0), (2, 0.75), (4, 0.25), (8, 0.25)]
    assert dyadic_tail([]) == []


def test_trace_identity(engine, analytics):
    ball = topology.ball("", 6)
    for seed in SEEDS:
        trajectory = engine.run(SeedManifest(master_seed=seed), ball, BoundaryCondition.frozen_initial(),
                                RunMode.median(), 8.0)
        trace = analytics.trace_of(trajectory, "")
        pair = analytics.threshold_pair(trajectory, "")
        assert "" in trace.members
        assert trace.members == pair.difference


def test_trace_of_inner_vertex(analytics, manifest):
    trace = analytics.trace(manifest, "01", 4.0, 4)
    assert "01" in trace.members
    assert all(topology.distance("01", v) <= 4 for v in trace.members)


def test_resampling_difference_contains_target(analytics, manifest):
    difference = analytics.resampling_difference(manifest, 0.5, 6.0, "", 5)
    assert "" in difference.members
    assert difference.source == ""


def test_resampling_identical_signs_gives_empty_set(analytics, manifest):
    difference = analytics.resampling_difference(manifest, 0.5, 6.0, "", 5, plus=1, minus=1)
    assert difference.size == 0


def test_chain_membership():
    ball = topology.ball("", 4)
    plus = np.ones(ball.size, dtype=np.int64)
    assert AnalyticsService.chain_membership(plus, ball, "", 4)
    assert not AnalyticsService.chain_membership(plus, ball, "", 5)
    lonely = plus.copy()
    lonely[0] = -1
    assert not AnalyticsService.chain_membership(lonely, ball, "", 1)
    assert AnalyticsService.chain_membership(lonely, ball, "", 0)


def test_triple_points_of_a_full_cluster(analytics):
    ball = topology.ball("", 3)
    plus = np.ones(ball.size, dtype=np.int64)
    triples = analytics.triple_points(plus, ball, 3, 1)
    assert "" in triples and "0" in triples
    assert not any(len(a) == 3 for a in triples)
    assert analytics.spanning_triple_fraction(plus, ball, 3, 1) == (1, 1)
    assert analytics.spanning_triple_fraction(plus, ball, 3, -1) == (0, 0)


def test_snapshot_of_a_discrete_trajectory_is_rejected(engine, manifest):
    trajectory = engine.run(manifest, topology.ball("", 2), BoundaryCondition.frozen_initial(),
                            RunMode.discrete(0.5), 1.0)
    with pytest.raises(ValueError):
        Snapshot.of(trajectory)


def test_structure_on_a_fixated_region(exactness, manifest):
    region = exactness.certify_region(manifest, "", 4.0, 6)
    snapshot = Snapshot.of_region(region)
    report = AnalyticsService.agreement_clusters(snapshot)
    assert not report.pre_fixation
    assert sum(report.sizes()) == int(region.fixated.sum())
    assert 0.0 <= AnalyticsService.neighbor_agreement_rate(snapshot) <= 1.0
