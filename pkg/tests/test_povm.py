import numpy as np
import pytest

from utils.tomography.povm import (
    GeometryError,
    Tetrahedron,
    canonical_tetrahedron,
    default_instrument,
    instrument_matrix,
    outcome_probabilities,
    tetrahedron,
)
from utils.tomography.qstate import SQRT_1_3, SQRT_2_3, UnphysicalStateError, named_state


@pytest.mark.parametrize("factory", [tetrahedron, canonical_tetrahedron])
def test_tetrahedron_invariants(factory):
    t = factory()
    vertices = t.vertices
    np.testing.assert_allclose(np.linalg.norm(vertices, axis=1), 1.0, rtol=0, atol=1e-12)
    gram = vertices @ vertices.T
    off_diagonal = gram[~np.eye(4, dtype=bool)]
    np.testing.assert_allclose(off_diagonal, -1.0 / 3.0, rtol=0, atol=1e-12)
    np.testing.assert_allclose(vertices.sum(axis=0), 0.0, rtol=0, atol=1e-12)
    np.testing.assert_allclose(vertices.T @ vertices, 4.0 / 3.0 * np.eye(3), rtol=0, atol=1e-12)


def test_aligned_vertex_one_is_b1r(tetra):
    np.testing.assert_array_equal(tetra.vertices[0], [SQRT_1_3, SQRT_2_3, 0.0])


def test_rejects_irregular_vertices():
    with pytest.raises(ValueError):
        Tetrahedron(vertices=np.eye(4)[:, :3])


def test_unknown_tetrahedron_kind():
    with pytest.raises(GeometryError):
        tetrahedron("cube")


def test_one_qubit_rows(tetra, B1):
    np.testing.assert_allclose(B1.entries[:, 0], 0.25)
    np.testing.assert_allclose(B1.entries[:, 1:], 0.25 * tetra.vertices)
    np.testing.assert_allclose(B1.entries @ B1.inverse, np.eye(4), atol=1e-10)


def test_unpolarized_maps_to_uniform(B1, B2):
    np.testing.assert_allclose(B1.entries @ [1, 0, 0, 0], 0.25)
    np.testing.assert_allclose(B2.entries @ np.eye(16)[0], 1.0 / 16.0)


def test_inverse_closed_form(tetra, B1):
    s = B1.inverse @ np.array([0.5, 1 / 6, 1 / 6, 1 / 6])
    np.testing.assert_allclose(s, np.concatenate([[1.0], tetra.vertices[0]]), atol=1e-12)


def test_two_qubit_is_kronecker_square(B1, B2):
    expected = np.zeros((16, 16))
    for j in range(4):
        for k in range(4):
            for mu in range(4):
                for nu in range(4):
                    expected[4 * j + k, 4 * mu + nu] = B1.entries[j, mu] * B1.entries[k, nu]
    np.testing.assert_allclose(B2.entries, expected, rtol=0, atol=1e-15)
    assert B2.qubit_count == 2 and B2.outcomes == 16


def test_bell_probabilities(B2, states):
    p = outcome_probabilities(B2, states["bell_psi_plus"].stokes)
    assert np.all(p >= 0.0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_rejects_three_qubits(tetra):
    with pytest.raises(GeometryError):
        instrument_matrix(tetra, 3)


def test_aligned_and_anti_aligned(B1, states):
    np.testing.assert_allclose(outcome_probabilities(B1, states["unpolarized"].stokes), 0.25)
    np.testing.assert_allclose(
        outcome_probabilities(B1, states["b1r"].stokes), [0.5, 1 / 6, 1 / 6, 1 / 6], atol=1e-12
    )
    anti = outcome_probabilities(B1, states["minus_b1r"].stokes)
    np.testing.assert_allclose(anti, [0.0, 1 / 3, 1 / 3, 1 / 3], atol=1e-12)
    assert np.count_nonzero(anti < 1e-12) == 1


def test_rejects_unphysical_state(B1):
    with pytest.raises(UnphysicalStateError):
        outcome_probabilities(B1, [1, -3 * SQRT_1_3, -3 * SQRT_2_3, 0])


def test_rejects_wrong_dimension(B1):
    with pytest.raises(GeometryError):
        outcome_probabilities(B1, named_state("bell_psi_plus").stokes)


def test_random_physical_states(B1, rng):
    directions = rng.normal(size=(1000, 3))
    bloch = directions / np.linalg.norm(directions, axis=1, keepdims=True) * rng.uniform(0, 1, (1000, 1))
    stokes = np.hstack([np.ones((1000, 1)), bloch])
    p = stokes @ B1.entries.T
    assert p.min() >= 0.0
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(p @ B1.inverse.T, stokes, atol=1e-10)


def test_default_instrument_follows_config(monkeypatch):
    import config

    monkeypatch.setattr(config, "TETRAHEDRON", "canonical")
    B = default_instrument()
    np.testing.assert_allclose(B.entries[0, 1:], 0.25 * np.ones(3) / np.sqrt(3))
