import math

import pytest

from app.core.exceptions import DegenerateCurveError, EstimationError
from app.entities.certificate import Certificate, Verdict
from app.entities.estimate import EstimateWithCI, SamplerKind, SamplerPolicy, ThetaCurve
from app.entities.spin import Spin
from app.use_cases.services.estimator_service import PC_LOWER_BOUND, THETA_GRID, EstimatorService


def test_theta_grid():
    assert len(THETA_GRID) == 49
    assert THETA_GRID[0] == 0.02 and THETA_GRID[-1] == 0.98
    assert PC_LOWER_BOUND == pytest.approx(0.0669873)


def test_bernoulli_estimate(estimator):
    estimate = estimator.bernoulli(30, 100)
    assert estimate.estimate == pytest.approx(0.3)
    assert estimate.halfwidth == pytest.approx(1.96 * math.sqrt(0.3 * 0.7 / 100))
    assert (estimate.lower, estimate.upper) == (0.3, 0.3)


def test_bernoulli_with_undetermined(estimator):
    estimate = estimator.bernoulli(30, 100, undetermined=10)
    assert estimate.estimate == pytest.approx(30 / 90)
    assert estimate.lower == pytest.approx(0.3)
    assert estimate.upper == pytest.approx(0.4)
    assert estimate.undetermined_fraction == pytest.approx(0.1)


def test_too_many_undetermined(estimator):
    with pytest.raises(EstimationError):
        estimator.bernoulli(10, 100, undetermined=60)


def test_minimum_replicas(engine):
    strict = EstimatorService(engine, min_replicas=1000, n_jobs=1)
    with pytest.raises(EstimationError):
        strict.bernoulli(1, 10)


def test_estimates_overlap():
    a = EstimateWithCI(estimate=0.5, replicas=100, halfwidth=0.0196)
    b = EstimateWithCI(estimate=0.52, replicas=100, halfwidth=0.0196)
    assert a.overlaps(b)
    assert not a.overlaps(EstimateWithCI(estimate=0.6, replicas=100, halfwidth=0.0196))


def test_theta_curve_cdf_and_bounds():
    curve = ThetaCurve(horizon=1.0, samples=[0.9, 0.1, 0.4, 0.6], undetermined=1)
    assert curve.samples == [0.1, 0.4, 0.6, 0.9]
    assert curve.replicas == 5 and curve.certified == 4
    assert curve.cdf(0.5) == 0.5
    assert curve.bounds(0.5) == (0.4, 0.6)
    assert curve.cdf(0.4) == 0.5


def test_theta_curve_flags():
    assert ThetaCurve(horizon=1.0, samples=[0.3]).flags() == []
    assert ThetaCurve(horizon=1.0, samples=[], undetermined=2).flags() == ["no_certified", "undetermined"]
    assert ThetaCurve(horizon=1.0, samples=[0.3], proxy_failures=1).flags() == ["proxy_failure"]


def _certificate(value, certified=True, fixated=True):
    if not certified:
        return Certificate(vertex="", horizon=1.0, radius=4, verdict=Verdict.undetermined)
    return Certificate(vertex="", horizon=1.0, radius=4, verdict=Verdict.certified,
                       spin=Spin(value=value, origin="0"), fixated=fixated)


def test_curve_from_certificates(estimator):
    certificates = [_certificate(0.2), _certificate(0.8, fixated=False), _certificate(0.5, certified=False)]
    curve = estimator.curve_from(certificates, 1.0)
    assert curve.certified == 2 and curve.undetermined == 1
    assert curve.proxy_failures == 1


def test_pc_bracket():
    curve = ThetaCurve(horizon=1.0, samples=[0.2, 0.3, 0.4, 0.6, 0.7, 0.8] * 10)
    lower, upper = EstimatorService.pc_bracket(curve, 0.01)
    assert lower == pytest.approx(0.199)
    assert upper == pytest.approx(0.2)


def test_pc_bracket_on_a_flat_curve():
    with pytest.raises(DegenerateCurveError):
        EstimatorService.pc_bracket(ThetaCurve(horizon=1.0, samples=[]), 0.01)


def test_symmetry_of_a_symmetric_sample():
    samples = [0.11, 0.27, 0.43, 0.57, 0.73, 0.89]
    assert EstimatorService.symmetry_check(ThetaCurve(horizon=1.0, samples=samples)) == 0.0


def test_continuity_check():
    curve = ThetaCurve(horizon=1.0, samples=[0.5] * 10)
    assert EstimatorService.continuity_check(curve, 0.02) == 1.0


def test_mass_below():
    curve = ThetaCurve(horizon=1.0, samples=[0.01, 0.5, 0.99, 0.5], undetermined=0)
    assert EstimatorService.mass_below(curve) == 0.5


def test_theta_curve_from_sandwich_certificates(estimator):
    policy = SamplerPolicy(r_schedule=(2, 4, 6), fixation=True)
    certificates = estimator.theta_certificates(20, 1.0, policy, seed=5)
    assert len(certificates) == 20
    curve = estimator.curve_from(certificates, 1.0)
    assert curve.replicas == 20
    assert all(0.0 <= value <= 1.0 for value in curve.samples)


def test_backward_sampler_matches_sandwich(estimator):
    sandwich = estimator.theta_certificates(10, 1.0, SamplerPolicy(r_schedule=(4, 8)), seed=3)
    backward = estimator.theta_certificates(10, 1.0, SamplerPolicy(kind=SamplerKind.backward), seed=3)
    for first, second in zip(sandwich, backward):
        assert second.is_certified
        if first.is_certified:
            assert first.spin == second.spin


def test_never_flip_is_zero_without_plus_spins(estimator):
    estimate = estimator.never_flip_probability(0.0, 4.0, 20, 3, seed=1)
    assert estimate.estimate == 0.0


def test_never_flip_is_positive_at_half(estimator):
    estimate = estimator.never_flip_probability(0.5, 2.0, 200, 4, seed=1)
    assert 0.0 < estimate.estimate < 0.5


def test_chain_cdf_is_nondecreasing(estimator):
    cdf = estimator.chain_time_cdf(0.5, 3, [1.0, 2.0, 4.0], 30, 4, seed=2)
    values = [estimate.estimate for estimate in cdf]
    assert values == sorted(values)


def test_chain_depth_beyond_radius(estimator):
    with pytest.raises(ValueError):
        estimator.chain_time_cdf(0.5, 6, [1.0], 10, 4)


def test_alpha_estimates(estimator):
    estimates = estimator.alpha_estimates(0.3, 0, [1, 2], 40, 0.5, 6, seed=9)
    assert set(estimates) == {1, 2}
    assert all(estimate.estimate >= 0 for estimate in estimates.values())


def test_discrete_theta_is_a_probability(estimator):
    estimate = estimator.discrete_theta(0.5, 40, 2.0, 4, seed=4)
    assert 0.0 <= estimate.estimate <= 1.0
    assert estimate.replicas == 40


def test_influence_growth(estimator):
    growth = estimator.influence_growth([0.5, 1.0], 20, seed=1)
    assert set(growth) == {0.5, 1.0}
    assert all(estimate.estimate >= 1 for estimate in growth.values())
