import numpy as np
import pytest
from scipy.stats import chi2

from utils.tomography.estimate import linear_reconstruct
from utils.tomography.povm import outcome_probabilities
from utils.tomography.sim import (
    CountVector,
    DistributionError,
    EventStream,
    asymptote_counts,
    sample_counts,
    stream_events,
    validate_distribution,
)

UNIFORM = np.full(4, 0.25)


def chi_square(counts, p):
    expected = counts.sum() * p
    return float(np.sum((counts - expected) ** 2 / expected))


def test_deterministic_outcome():
    np.testing.assert_array_equal(sample_counts([1, 0, 0, 0], 7, seed=1).counts, [7, 0, 0, 0])
    np.testing.assert_array_equal(stream_events([0, 1, 0, 0], 3, seed=1).outcomes, [1, 1, 1])


def test_zero_events():
    counts = sample_counts(UNIFORM, 0, seed=3)
    np.testing.assert_array_equal(counts.counts, [0, 0, 0, 0])
    assert counts.total == 0


def test_same_seed_same_stream():
    a = stream_events(UNIFORM, 1000, seed=42)
    b = stream_events(UNIFORM, 1000, seed=42)
    np.testing.assert_array_equal(a.outcomes, b.outcomes)
    assert not np.array_equal(a.outcomes, stream_events(UNIFORM, 1000, seed=43).outcomes)
    assert not np.array_equal(a.outcomes, stream_events(UNIFORM, 1000, seed=42, index=1).outcomes)


def test_counts_are_the_collapsed_stream():
    p = np.array([0.1, 0.2, 0.3, 0.4])
    stream = stream_events(p, 500, seed=5)
    counts = sample_counts(p, 500, seed=5)
    np.testing.assert_array_equal(np.bincount(stream.outcomes, minlength=4), counts.counts)

    prefix = stream.counts(100)
    assert prefix.total == 100
    np.testing.assert_array_equal(stream.cumulative_counts()[99], prefix.counts)
    assert len(stream.prefix(10)) == 10


def test_uniform_million_within_five_sigma():
    counts = sample_counts(UNIFORM, 10**6, seed=11).counts
    sigma = np.sqrt(10**6 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 250_000) < 5 * sigma)


def test_stream_frequencies_chi_square():
    p = np.array([0.5, 1 / 6, 1 / 6, 1 / 6])
    counts = stream_events(p, 10**5, seed=9).counts().counts
    assert chi_square(counts, p) < chi2.ppf(0.999, df=3)


@pytest.mark.parametrize("qubits", [1, 2])
def test_chi_square_over_many_seeds(qubits, B2, states):
    """Allowed failures: 3 of 100 seeds (0.1 expected at the 99.9% level)."""
    if qubits == 1:
        p = np.array([0.1, 0.2, 0.3, 0.4])
    else:
        p = outcome_probabilities(B2, states["bell_psi_plus"].stokes)
    # outcomes that never fire carry no statistic
    support = np.flatnonzero(p > 0)
    threshold = chi2.ppf(0.999, df=support.size - 1)

    failures = 0
    for seed in range(100):
        counts = sample_counts(p, 20_000, seed=seed).counts
        failures += chi_square(counts[support], p[support]) >= threshold
    assert failures <= 3


def test_invalid_distributions():
    with pytest.raises(DistributionError):
        validate_distribution([0.5, 0.5, 0.5, -0.5])
    with pytest.raises(DistributionError):
        validate_distribution([0.3, 0.3, 0.3, 0.3])
    with pytest.raises(DistributionError):
        validate_distribution([0.5, 0.5, 0.0])
    with pytest.raises(DistributionError):
        sample_counts(UNIFORM, -1, seed=0)


def test_count_vector_invariants():
    with pytest.raises(ValueError):
        CountVector(counts=[1, 2, 3, 4], total=9)
    with pytest.raises(ValueError):
        CountVector.of([1, 2, 3])
    with pytest.raises(ValueError):
        CountVector.of([1, -1, 0, 0])
    with pytest.raises(DistributionError):
        CountVector.of([0, 0, 0, 0]).frequencies


def test_event_stream_rejects_out_of_range():
    with pytest.raises(ValueError):
        EventStream(outcomes=np.array([0, 4]), outcome_count=4, seed=0)


def test_asymptote_counts(B1, states):
    counts = asymptote_counts(states["unpolarized"], B1, 500_000, seed=7)
    assert counts.total == 500_000
    assert linear_reconstruct(counts, B1).bloch_norm < 0.01
    again = asymptote_counts(states["unpolarized"], B1, 500_000, seed=7)
    np.testing.assert_array_equal(counts.counts, again.counts)


def test_large_deterministic_sample():
    counts = sample_counts([1, 0, 0, 0], 500_000, seed=1)
    np.testing.assert_array_equal(counts.counts, [500_000, 0, 0, 0])


def test_small_asymptote_warns(B1, states, caplog):
    with caplog.at_level("WARNING", logger="tetratomo.sim"):
        asymptote_counts(states["unpolarized"], B1, 1000, seed=1)
    assert "recommended" in caplog.text
