import numpy as np
import pytest
from scipy import stats

from app.entities.seed_manifest import SeedManifest
from app.use_cases.services import randomness_service, topology
from app.use_cases.services.randomness_service import RandomnessService


def test_uniform_is_a_pure_function(manifest):
    first = randomness_service.initial_uniform(manifest, "0101")
    second = RandomnessService(SeedManifest(master_seed=42)).initial_uniform("0101")
    assert first == second
    assert 0.0 <= first < 1.0


def test_streams_are_distinct(manifest):
    randomness = RandomnessService(manifest)
    assert randomness.initial_uniform("0") != randomness.initial_uniform("1")
    assert randomness.initial_uniform("0") != randomness.tie_break("0")
    assert randomness.initial_uniform("0") != RandomnessService(SeedManifest(master_seed=43)).initial_uniform("0")


def test_extending_the_horizon_keeps_earlier_rings(manifest):
    short = randomness_service.rings(manifest, "2", 3.0)
    long = randomness_service.rings(manifest, "2", 30.0)
    assert long[:len(short)] == short
    assert all(t > 3.0 for t in long[len(short):])
    assert long == sorted(long)


def test_zero_horizon_has_no_rings(manifest):
    assert randomness_service.rings(manifest, "", 0.0) == []


def test_uniforms_pass_kolmogorov_smirnov(manifest):
    ball = topology.ball(topology.ROOT, 10)
    values = RandomnessService(manifest).initial_uniforms(ball.addresses)
    assert stats.kstest(values, "uniform").pvalue > 1e-3


def test_clock_gaps_are_exponential(manifest):
    gaps = RandomnessService(manifest).clock("01").increments(4000)
    assert stats.kstest(gaps, "expon").pvalue > 1e-3
    assert abs(gaps.mean() - 1.0) < 0.1


def test_ring_counts_are_poisson():
    counts = [len(randomness_service.rings(SeedManifest(master_seed=seed), "", 4.0)) for seed in range(2000)]
    observed = np.bincount(counts, minlength=16)[:16]
    expected = stats.poisson.pmf(np.arange(16), 4.0) * len(counts)
    keep = expected > 5
    statistic = (((observed[keep] - expected[keep]) ** 2) / expected[keep]).sum()
    assert stats.chi2.sf(statistic, keep.sum() - 1) > 1e-3


def test_resampled_spin_changes_only_that_vertex(manifest):
    resampled = manifest.with_resampled_spin("00")
    base, other = RandomnessService(manifest), RandomnessService(resampled)
    assert base.initial_uniform("00") != other.initial_uniform("00")
    assert base.initial_uniform("01") == other.initial_uniform("01")
    assert base.rings("00", 5.0) == other.rings("00", 5.0)


def test_resampled_clock_changes_only_that_clock(manifest):
    resampled = manifest.with_resampled_clock("1")
    base, other = RandomnessService(manifest), RandomnessService(resampled)
    assert base.rings("1", 5.0) != other.rings("1", 5.0)
    assert base.rings("2", 5.0) == other.rings("2", 5.0)
    assert base.initial_uniform("1") == other.initial_uniform("1")


def test_suppressed_clock_drops_early_rings(manifest):
    suppressed = manifest.with_suppressed_clock("", 2.0)
    full = randomness_service.rings(manifest, "", 6.0)
    kept = randomness_service.rings(suppressed, "", 6.0)
    assert kept == [t for t in full if t > 2.0]


def test_replica_offsets_the_master_seed():
    base = SeedManifest(master_seed=2 ** 64 - 1)
    assert base.replica(1).master_seed == 0


@pytest.mark.parametrize("seed", [-1, 2 ** 64])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        SeedManifest(master_seed=seed)


def test_uniforms_are_flat_under_chi_square(manifest):
    ball = topology.ball(topology.ROOT, 13)
    values = RandomnessService(manifest).initial_uniforms(ball.addresses)
    counts, _ = np.histogram(values, bins=100, range=(0.0, 1.0))
    assert stats.chisquare(counts).pvalue > 1e-3


def test_ring_times_do_not_depend_on_query_order(manifest):
    stepped = RandomnessService(manifest).clock("12")
    stepped.rings(0.5)
    stepped.rings(5.0)
    fresh = RandomnessService(manifest).clock("12")
    assert stepped.rings(60.0) == fresh.rings(60.0)
