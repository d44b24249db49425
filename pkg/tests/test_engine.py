import numpy as np
import pytest

from app.core.exceptions import BudgetExceededError
from app.entities.seed_manifest import SeedManifest
from app.entities.spin import HIGH_SPIN, LOW_SPIN, Spin
from app.entities.trajectory import BoundaryCondition, RunMode
from app.use_cases.evaluators.evaluators import Evaluator
from app.use_cases.services import engine_service, randomness_service, topology
from app.use_cases.services.analytics_service import AnalyticsService
from app.use_cases.services.engine_service import (EngineService, discrete_update, median_update, project,
                                                   project_trajectory)
from tests.conftest import SEEDS


def test_median_update_picks_the_middle_value():
    a, b, c = Spin(value=0.1, origin="0"), Spin(value=0.7, origin="1"), Spin(value=0.4, origin="2")
    assert median_update(Spin(value=0.9, origin=""), a, b, c) == c


def test_median_update_breaks_ties_by_origin():
    a, b, c = Spin(value=0.5, origin="1"), Spin(value=0.5, origin="0"), Spin(value=0.9, origin="2")
    assert median_update(a, a, b, c).origin == "1"


def test_median_update_with_sentinels():
    u = Spin(value=0.3, origin="00")
    assert median_update(u, LOW_SPIN, u, HIGH_SPIN) == u
    assert median_update(u, LOW_SPIN, LOW_SPIN, HIGH_SPIN) == LOW_SPIN


@pytest.mark.parametrize("current, around, expected", [
    (1, (-1, -1, 1), -1),
    (1, (-1, 1, 1), 1),
    (-1, (1, 1, 1), 1),
    (-1, (-1, -1, 1), -1),
])
def test_discrete_update_is_majority(current, around, expected):
    assert discrete_update(current, *around) == expected


def test_project_reverses_order():
    assert project(np.array([0.1, 0.5, 0.9]), 0.5).tolist() == [1, 1, -1]
    assert project(LOW_SPIN, 0.0) == 1
    assert project(HIGH_SPIN, 1.0) == -1


def test_empty_run():
    manifest = SeedManifest(master_seed=3)
    trajectory = engine_service.run(manifest, 0, BoundaryCondition.frozen_initial(), RunMode.median(), 0.0)
    assert len(trajectory.flips) == 0
    assert trajectory.event_count == 0
    assert list(trajectory.final_configuration()) == [""]
    assert list(trajectory.to_frame().columns) == ["vertex_address", "time", "old_origin", "new_origin",
                                                   "old_value", "new_value"]


def test_free_center_never_changes(engine):
    for seed in SEEDS:
        manifest = SeedManifest(master_seed=seed)
        trajectory = engine.run(manifest, topology.ball("", 0), BoundaryCondition.free(), RunMode.median(), 50.0)
        assert trajectory.event_count > 0
        assert len(trajectory.flips) == 0


def test_free_boundary_copies_parent(engine, manifest):
    trajectory = engine.run(manifest, topology.ball("", 2), BoundaryCondition.free(), RunMode.median(), 10.0)
    boundary = set(trajectory.window_boundary.tolist())
    for k, vertex in enumerate(trajectory.flips.vertex):
        if vertex in boundary:
            origins = trajectory.flips.neighbor_origins[k]
            assert origins[0] == origins[1] == origins[2]


def test_values_are_initial_uniforms(engine, manifest, small_ball):
    trajectory = engine.run(manifest, small_ball, BoundaryCondition.frozen_initial(), RunMode.median(), 8.0)
    for i, origin in enumerate(trajectory.final_origins.tolist()):
        assert trajectory.final_values[i] == trajectory.initial_values[origin]


def test_runs_are_deterministic(engine, small_ball):
    manifest = SeedManifest(master_seed=99)
    first = engine.run(manifest, small_ball, BoundaryCondition.frozen_initial(), RunMode.median(), 6.0)
    second = engine.run(manifest, small_ball, BoundaryCondition.frozen_initial(), RunMode.median(), 6.0)
    assert first.to_frame().equals(second.to_frame())


def test_resume_matches_single_run(engine, manifest, small_ball):
    boundary = BoundaryCondition.frozen_initial()
    whole = engine.run(manifest, small_ball, boundary, RunMode.median(), 8.0)
    half = engine.run(manifest, small_ball, boundary, RunMode.median(), 3.0)
    resumed = engine.run(manifest, small_ball, boundary, RunMode.median(), 8.0, resume_from=half)
    assert resumed.flips.time == whole.flips.time
    assert np.array_equal(resumed.final_origins, whole.final_origins)
    assert resumed.event_count == whole.event_count


def test_resume_backwards_rejected(engine, manifest, small_ball):
    trajectory = engine.run(manifest, small_ball, BoundaryCondition.frozen_initial(), RunMode.median(), 3.0)
    with pytest.raises(ValueError):
        engine.run(manifest, small_ball, BoundaryCondition.frozen_initial(), RunMode.median(), 1.0,
                   resume_from=trajectory)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_projection_commutes_with_dynamics(engine, p):
    ball = topology.ball("", 5)
    for seed in SEEDS:
        result = Evaluator.check_commutation(engine, SeedManifest(master_seed=seed), ball, p, 4.0)
        assert result.passed, result.detail


def test_discrete_mode_equals_projection(engine, manifest, small_ball):
    median = engine.run(manifest, small_ball, BoundaryCondition.frozen_initial(), RunMode.median(), 5.0)
    discrete = engine.run(manifest, small_ball, BoundaryCondition.frozen_initial(), RunMode.discrete(0.4), 5.0)
    assert discrete.flips.time == project_trajectory(median, 0.4).flips.time
    assert discrete.is_discrete


def test_energy_never_increases(engine, small_ball):
    for seed in SEEDS:
        trajectory = engine.run(SeedManifest(master_seed=seed), small_ball, BoundaryCondition.frozen_initial(),
                                RunMode.median(), 16.0)
        assert AnalyticsService.energy_audit(trajectory) == 0
        assert AnalyticsService.median_consistency(trajectory) == 0


def test_frozen_vertex_never_flips(engine, manifest, small_ball):
    trajectory = engine.run_discrete(manifest, small_ball, BoundaryCondition.frozen_initial(), 0.5, 16.0,
                                     frozen={"0": -1})
    code = small_ball.code("0")
    assert trajectory.initial_values[code] == -1
    assert code not in trajectory.flips.vertex


def test_frozen_discrete_boundary(engine, manifest, small_ball):
    trajectory = engine.run_discrete(manifest, small_ball, BoundaryCondition.frozen_discrete(1), 0.0, 40.0)
    outer = trajectory.ball.distance > trajectory.radius
    assert (trajectory.final_values[outer] == 1).all()
    assert (trajectory.initial_values[~outer] == -1).all()


def test_frozen_discrete_is_rejected_for_median_runs(engine, manifest, small_ball):
    with pytest.raises(ValueError):
        engine.run(manifest, small_ball, BoundaryCondition.frozen_discrete(-1), RunMode.median(), 1.0)


def test_boundary_condition_sign_validation():
    with pytest.raises(ValueError):
        BoundaryCondition.frozen_discrete(0)


def test_event_budget(manifest):
    with pytest.raises(BudgetExceededError):
        EngineService(max_events=10).run(manifest, topology.ball("", 6), BoundaryCondition.frozen_initial(),
                                         RunMode.median(), 10.0)


def test_spin_at_time_zero_is_initial(engine, manifest, small_ball):
    trajectory = engine.run(manifest, small_ball, BoundaryCondition.frozen_initial(), RunMode.median(), 5.0)
    spin = trajectory.spin_at("01", 0.0)
    assert spin.origin == "01"
    assert spin.value == trajectory.initial_values[small_ball.code("01")]


def test_single_vertex_takes_the_majority_at_its_first_ring(engine):
    ball = topology.ball("", 0)
    flipped = 0
    replicas = 1000
    for seed in range(replicas):
        manifest = SeedManifest(master_seed=seed)
        trajectory = engine.run_discrete(manifest, ball, BoundaryCondition.frozen_initial(), 0.5, 1.0,
                                         initial=[-1, 1, 1, -1])
        rang = len(randomness_service.rings(manifest, "", 1.0)) > 0
        assert (trajectory.final_values[0] == 1) == rang
        flipped += rang
    expected = 1 - np.exp(-1.0)
    assert abs(flipped / replicas - expected) < 4 * np.sqrt(expected * (1 - expected) / replicas)
