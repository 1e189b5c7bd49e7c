"""
Tetrahedron measurement and its instrument matrix.

Four measurement directions b_j on the Poincare sphere form a regular
tetrahedron. The instrument matrix maps a Stokes vector to detector
probabilities, I = B . S, with row j = (1/4) (1, b_j) so an unpolarized input
spreads uniformly over the detectors. Two polarimeters used side by side give
B (x) B, outcome index 4 * j + k.
"""

import logging
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

import config
from utils.tomography.qstate import (
    SQRT_1_3,
    SQRT_2_3,
    StokesVector,
    UnphysicalStateError,
    qubit_count_for_length,
)

logger = logging.getLogger("tetratomo.povm")

GEOMETRY_ATOL = 1e-12
INVERSE_ATOL = 1e-10
PROBABILITY_ATOL = 1e-12


class GeometryError(ValueError):
    pass


class Tetrahedron(BaseModel):
    vertices: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("vertices", mode="before")
    @classmethod
    def _as_regular_tetrahedron(cls, value):
        vertices = np.array(value, dtype=float)
        if vertices.shape != (4, 3):
            raise ValueError(f"tetrahedron needs 4 vertices in 3D, got {vertices.shape}")

        gram = vertices @ vertices.T
        expected = np.full((4, 4), -1.0 / 3.0)
        np.fill_diagonal(expected, 1.0)
        if not np.allclose(gram, expected, rtol=0.0, atol=GEOMETRY_ATOL):
            raise ValueError("vertices are not a regular unit tetrahedron")
        if not np.allclose(vertices.sum(axis=0), 0.0, rtol=0.0, atol=GEOMETRY_ATOL):
            raise ValueError("tetrahedron is not centred on the origin")
        if not np.allclose(
            vertices.T @ vertices, (4.0 / 3.0) * np.eye(3), rtol=0.0, atol=GEOMETRY_ATOL
        ):
            raise ValueError("tetrahedron frame is incomplete")

        vertices.setflags(write=False)
        return vertices


def aligned_tetrahedron() -> Tetrahedron:
    """
    Vertex 1 on b1r = (sqrt(1/3), sqrt(2/3), 0); the other three sit at the
    tetrahedral angle from it, 120 degrees apart around it.
    """
    b1 = np.array([SQRT_1_3, SQRT_2_3, 0.0])
    u = np.array([-SQRT_2_3, SQRT_1_3, 0.0])
    v = np.array([0.0, 0.0, 1.0])
    theta = np.arccos(-1.0 / 3.0)

    vertices = [b1]
    for phi in (0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0):
        vertices.append(
            np.cos(theta) * b1 + np.sin(theta) * (np.cos(phi) * u + np.sin(phi) * v)
        )
    return Tetrahedron(vertices=np.array(vertices))


def canonical_tetrahedron() -> Tetrahedron:
    vertices = np.array(
        [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]
    ) / np.sqrt(3.0)
    return Tetrahedron(vertices=vertices)


TETRAHEDRA = {
    "aligned": aligned_tetrahedron,
    "canonical": canonical_tetrahedron,
}


def tetrahedron(kind: str | None = None) -> Tetrahedron:
    kind = kind or config.TETRAHEDRON
    if kind not in TETRAHEDRA:
        raise GeometryError(f"unknown tetrahedron '{kind}', expected one of {sorted(TETRAHEDRA)}")
    return TETRAHEDRA[kind]()


class InstrumentMatrix(BaseModel):
    entries: np.ndarray
    inverse: np.ndarray
    qubit_count: int

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def outcomes(self) -> int:
        return self.entries.shape[0]


def instrument_matrix(t: Tetrahedron, qubit_count: int = 1) -> InstrumentMatrix:
    if qubit_count not in (1, 2):
        raise GeometryError(f"only 1 or 2 qubits are supported, got {qubit_count}")

    single = 0.25 * np.hstack([np.ones((4, 1)), t.vertices])
    entries = single if qubit_count == 1 else np.kron(single, single)

    inverse = np.linalg.inv(entries)
    residual = np.abs(entries @ inverse - np.eye(entries.shape[0])).max()
    # cannot fail for a valid tetrahedron, a failure means a geometry bug
    assert residual <= INVERSE_ATOL, f"instrument matrix inverse residual {residual:.3e}"

    entries.setflags(write=False)
    inverse.setflags(write=False)
    return InstrumentMatrix(entries=entries, inverse=inverse, qubit_count=qubit_count)


def default_instrument(qubit_count: int = 1, kind: str | None = None) -> InstrumentMatrix:
    return instrument_matrix(tetrahedron(kind), qubit_count)


def outcome_probabilities(
    B: InstrumentMatrix, s: Union[StokesVector, np.ndarray]
) -> np.ndarray:
    """p_j = (B . S)_j for a physical, normalized state."""
    components = s.components if isinstance(s, StokesVector) else np.asarray(s, dtype=float)
    if qubit_count_for_length(components.size) != B.qubit_count:
        raise GeometryError(
            f"state has {components.size} components, instrument expects {B.outcomes}"
        )

    probabilities = B.entries @ components
    if np.any(probabilities < -PROBABILITY_ATOL):
        raise UnphysicalStateError(
            f"state {components.tolist()} gives negative outcome probabilities"
        )
    total = probabilities.sum()
    if abs(total - 1.0) > PROBABILITY_ATOL:
        raise UnphysicalStateError(f"outcome probabilities sum to {total}, state is not normalized")
    return np.clip(probabilities, 0.0, 1.0)
