import numpy as np
import pytest

from utils.tomography.estimate import (
    EstimationError,
    converge_trace,
    likelihood_region,
    linear_reconstruct,
    log_likelihood,
    project_to_physical,
    project_to_physical_array,
    sphere_grid,
)
from utils.tomography.povm import outcome_probabilities
from utils.tomography.qstate import (
    UnphysicalStateError,
    density_to_stokes,
    hermitian_eigvals,
    stokes_to_density,
)
from utils.tomography.sim import CountVector, sample_counts


def test_uniform_counts_reconstruct_unpolarized(B1):
    s = linear_reconstruct(CountVector.of([5, 5, 5, 5]), B1)
    np.testing.assert_allclose(s.components, [1, 0, 0, 0], atol=1e-12)


def test_single_event_is_unphysical(tetra, B1):
    s = linear_reconstruct(CountVector.of([1, 0, 0, 0]), B1)
    np.testing.assert_allclose(s.components, np.concatenate([[1.0], 3 * tetra.vertices[0]]), atol=1e-12)
    assert s.bloch_norm == pytest.approx(3.0)
    assert not s.is_physical


def test_three_one_one_one(tetra, B1):
    s = linear_reconstruct(CountVector.of([3, 1, 1, 1]), B1)
    np.testing.assert_allclose(s.components[1:], tetra.vertices[0], atol=1e-12)
    assert s.components[0] == pytest.approx(1.0, abs=1e-10)


def test_reconstruct_errors(B1):
    with pytest.raises(EstimationError):
        linear_reconstruct(CountVector.of([0, 0, 0, 0]), B1)
    with pytest.raises(EstimationError):
        linear_reconstruct(CountVector.of(np.ones(16, dtype=int)), B1)


@pytest.mark.parametrize("label", ["unpolarized", "horizontal", "b1r", "minus_b1r", "bell_psi_plus"])
def test_exact_probabilities_invert(label, B1, B2, states):
    state = states[label]
    B = B1 if state.qubit_count == 1 else B2
    p = outcome_probabilities(B, state.stokes)
    np.testing.assert_allclose(B.inverse @ p, state.stokes.components, atol=1e-10)


def test_projection_one_qubit(tetra):
    inside = project_to_physical([1, 0.3, 0, 0])
    np.testing.assert_array_equal(inside.components, [1, 0.3, 0, 0])
    clipped = project_to_physical(np.concatenate([[1.0], 3 * tetra.vertices[0]]))
    np.testing.assert_allclose(clipped.components[1:], tetra.vertices[0], atol=1e-12)


def test_projection_needs_normalized_state():
    with pytest.raises(EstimationError):
        project_to_physical([2, 0, 0, 0])


def test_projection_two_qubit_spectrum(rng):
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    rho = q @ np.diag([0.7, 0.5, -0.1, -0.1]) @ np.conj(q.T)
    rho = 0.5 * (rho + np.conj(rho.T))
    projected = project_to_physical(density_to_stokes(rho))
    spectrum = hermitian_eigvals(stokes_to_density(projected).entries)
    np.testing.assert_allclose(spectrum, [7 / 12, 5 / 12, 0, 0], atol=1e-10)


def test_projection_idempotent_and_physical(rng):
    one = np.hstack([np.ones((300, 1)), rng.normal(scale=1.5, size=(300, 3))])
    once = project_to_physical_array(one)
    np.testing.assert_allclose(project_to_physical_array(once), once, atol=1e-12)
    assert np.all(np.linalg.norm(once[:, 1:], axis=1) <= np.linalg.norm(one[:, 1:], axis=1) + 1e-15)

    two = np.hstack([np.ones((50, 1)), rng.normal(scale=0.6, size=(50, 15))])
    projected = project_to_physical_array(two)
    for s in projected:
        rho = stokes_to_density(s)
        assert rho.is_physical
        assert rho.trace == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_allclose(project_to_physical_array(projected), projected, atol=1e-9)


def test_log_likelihood_examples(B1, states):
    N = 12
    counts = CountVector.of([N, 0, 0, 0])
    assert log_likelihood(counts, states["b1r"].stokes, B1) == pytest.approx(N * np.log(0.5))
    assert log_likelihood(counts, states["minus_b1r"].stokes, B1) == -np.inf
    mixed = CountVector.of([3, 4, 0, 5])
    assert log_likelihood(mixed, states["unpolarized"].stokes, B1) == pytest.approx(-12 * np.log(4))


def test_log_likelihood_rejects_unphysical(B1):
    with pytest.raises(UnphysicalStateError):
        log_likelihood(CountVector.of([1, 0, 0, 0]), [1, 2, 0, 0], B1)


def test_sphere_grid_shape():
    longitudes, latitudes, directions = sphere_grid(16)
    assert directions.shape == (256, 3)
    np.testing.assert_allclose(np.linalg.norm(directions, axis=1), 1.0)
    assert longitudes.min() == 0.0 and longitudes.max() < 360.0
    assert -90.0 < latitudes.min() and latitudes.max() < 90.0


def test_region_peaks_at_b1(tetra, B1):
    resolution = 64
    region = likelihood_region(CountVector.of([40, 0, 0, 0]), B1, resolution, 3.0)
    cell = np.pi / resolution * 2
    angle = np.arccos(np.clip(region.max_point @ tetra.vertices[0], -1, 1))
    assert angle <= cell
    assert region.log_likelihood[region.members].min() >= region.max_log_likelihood - 3.0
    assert region.log_likelihood[~region.members].max() < region.max_log_likelihood - 3.0


def test_empty_counts_flat_region(B1):
    region = likelihood_region(CountVector.of([0, 0, 0, 0]), B1, 16, 3.0)
    assert region.member_count == 256


def test_region_argument_checks(B1, B2):
    counts = CountVector.of([1, 0, 0, 0])
    with pytest.raises(EstimationError):
        likelihood_region(counts, B1, grid_resolution=8)
    with pytest.raises(EstimationError):
        likelihood_region(counts, B1, grid_resolution=0)
    with pytest.raises(EstimationError):
        likelihood_region(counts, B1, threshold_delta=0.0)
    with pytest.raises(EstimationError):
        likelihood_region(CountVector.of(np.eye(16, dtype=int)[0]), B2)


def test_region_shrinks_with_more_events(B1, states):
    """Seed-matched counts at N=10 and N=200; allowed failures: 5 of 100."""
    p = outcome_probabilities(B1, states["b1r"].stokes)
    shrinks = 0
    for seed in range(100):
        small = likelihood_region(sample_counts(p, 10, seed), B1, 32, 3.0)
        large = likelihood_region(sample_counts(p, 200, seed), B1, 32, 3.0)
        shrinks += large.member_count < small.member_count
    assert shrinks >= 95


def test_converge_trace_shape(B1, states):
    trace = converge_trace(states["b1r"], B1, 200, seed=7, grid_resolution=32)
    assert len(trace) == 200
    assert trace.estimates.shape == (200, 4)
    assert np.all(np.linalg.norm(trace.estimates[:, 1:], axis=1) <= 1.0 + 1e-12)
    np.testing.assert_array_equal(trace.member_counts[49], trace.region(50, B1).member_count)


def test_converge_trace_argument_checks(B1, states):
    with pytest.raises(EstimationError):
        converge_trace(states["b1r"], B1, 0, seed=7)
    with pytest.raises(EstimationError):
        converge_trace(states["b1r"], B1, 20, seed=7, grid_resolution=0)


def test_convergence_over_seeds(B1, states):
    member_small, member_large, closer = [], [], 0
    for seed in range(100):
        trace = converge_trace(states["b1r"], B1, 200, seed=seed, grid_resolution=32)
        member_small.append(trace.member_counts[9])
        member_large.append(trace.member_counts[199])
        closer += trace.distances[199] < trace.distances[9]
    assert np.median(member_large) < np.median(member_small)
    assert closer >= 90
