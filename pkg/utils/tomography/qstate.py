"""
State representations for one and two polarization qubits.

A Stokes vector S (length 4 for one qubit, 16 for two) and a density matrix
are two views of the same state:

    rho = (1 / 2**n) * sum_mu S_mu * sigma_mu

Pauli ordering is (identity, S1, S2, S3) with the matrices written in the
(H, V) basis:

    S1 -> [[1, 0], [0, -1]]    H/V
    S2 -> [[0, 1], [1, 0]]     D/A
    S3 -> [[0, -i], [i, 0]]    R/L

so (1, 1, 0, 0) is horizontal. Two-qubit components are flattened row-major,
index 4 * mu + nu for sigma_mu (x) sigma_nu.

Every function that takes a matrix also takes a stack of them (leading batch
axes), which is how the accuracy model evaluates hundreds of thousands of
reconstructions at once.
"""

import logging
from enum import Enum
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

logger = logging.getLogger("tetratomo.qstate")

HERMITIAN_ATOL = 1e-12
EIGEN_HERMITIAN_ATOL = 1e-10
PHYSICAL_ATOL = 1e-10

JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100


class StateError(ValueError):
    pass


class UnphysicalStateError(StateError):
    pass


####################################
# Pauli basis
####################################

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[1, 0], [0, -1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
    ],
    dtype=complex,
)

PAULI_2Q = np.array(
    [np.kron(PAULI[mu], PAULI[nu]) for mu in range(4) for nu in range(4)]
)


def qubit_count_for_length(length: int) -> int:
    if length == 4:
        return 1
    if length == 16:
        return 2
    raise StateError(f"Stokes vector must have 4 or 16 components, got {length}")


def qubit_count_for_dimension(dimension: int) -> int:
    if dimension == 2:
        return 1
    if dimension == 4:
        return 2
    raise StateError(f"density matrix must be 2x2 or 4x4, got {dimension}x{dimension}")


def pauli_basis(qubit_count: int) -> np.ndarray:
    if qubit_count == 1:
        return PAULI
    if qubit_count == 2:
        return PAULI_2Q
    raise StateError(f"only 1 or 2 qubits are supported, got {qubit_count}")


def _dagger(matrix: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(matrix, -1, -2))


def is_hermitian(matrix: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    matrix = np.asarray(matrix)
    return bool(np.all(np.abs(matrix - _dagger(matrix)) <= atol))


####################################
# Types
####################################


class StokesVector(BaseModel):
    components: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("components", mode="before")
    @classmethod
    def _as_components(cls, value):
        components = np.array(value, dtype=float)
        if components.ndim != 1:
            raise ValueError("Stokes vector must be one-dimensional")
        qubit_count_for_length(components.size)
        components.setflags(write=False)
        return components

    @property
    def qubit_count(self) -> int:
        return qubit_count_for_length(self.components.size)

    @property
    def bloch(self) -> np.ndarray:
        """(S1, S2, S3) of a one-qubit state."""
        if self.qubit_count != 1:
            raise StateError("Bloch vector is only defined for one qubit")
        return self.components[1:4]

    @property
    def bloch_norm(self) -> float:
        return float(np.linalg.norm(self.bloch))

    @property
    def is_physical(self) -> bool:
        # recomputed on every access, never cached
        return stokes_to_density(self).is_physical

    def __len__(self) -> int:
        return self.components.size


class DensityMatrix(BaseModel):
    entries: np.ndarray

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("entries", mode="before")
    @classmethod
    def _as_entries(cls, value):
        entries = np.array(value, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("density matrix must be square")
        qubit_count_for_dimension(entries.shape[0])
        if not is_hermitian(entries):
            raise ValueError("density matrix must be Hermitian")
        entries.setflags(write=False)
        return entries

    @property
    def qubit_count(self) -> int:
        return qubit_count_for_dimension(self.entries.shape[0])

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    @property
    def eigenvalues(self) -> np.ndarray:
        return hermitian_eigvals(self.entries)

    @property
    def is_physical(self) -> bool:
        return bool(np.all(self.eigenvalues >= -PHYSICAL_ATOL))

    @property
    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)


class StateLabel(str, Enum):
    unpolarized = "unpolarized"
    horizontal = "horizontal"
    b1r = "b1r"
    minus_b1r = "minus_b1r"
    bell_psi_plus = "bell_psi_plus"
    custom = "custom"


class NamedState(BaseModel):
    label: StateLabel
    stokes: StokesVector

    model_config = ConfigDict(frozen=True)

    @property
    def qubit_count(self) -> int:
        return self.stokes.qubit_count

    @property
    def name(self) -> str:
        return self.label.value


####################################
# Stokes <-> density
####################################


def _as_stokes_array(s: Union[StokesVector, np.ndarray]) -> np.ndarray:
    if isinstance(s, StokesVector):
        return s.components
    return np.asarray(s, dtype=float)


def _as_matrix_array(m: Union[DensityMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(m, DensityMatrix):
        return m.entries
    return np.asarray(m, dtype=complex)


def stokes_to_density_array(components: np.ndarray) -> np.ndarray:
    """Batched expansion; components has shape (..., 4) or (..., 16)."""
    components = np.asarray(components, dtype=float)
    qubit_count = qubit_count_for_length(components.shape[-1])
    basis = pauli_basis(qubit_count)
    dimension = 2**qubit_count
    return np.einsum("...k,kij->...ij", components, basis) / dimension


def density_to_stokes_array(matrices: np.ndarray) -> np.ndarray:
    """Batched S_mu = tr(rho sigma_mu); matrices has shape (..., d, d)."""
    matrices = np.asarray(matrices, dtype=complex)
    if not is_hermitian(matrices):
        raise StateError("density matrix must be Hermitian")
    qubit_count = qubit_count_for_dimension(matrices.shape[-1])
    basis = pauli_basis(qubit_count)
    return np.einsum("...ij,kji->...k", matrices, basis).real


def stokes_to_density(s: Union[StokesVector, np.ndarray]) -> DensityMatrix:
    components = _as_stokes_array(s)
    if components.ndim != 1:
        raise StateError("expected a single Stokes vector")
    return DensityMatrix(entries=stokes_to_density_array(components))


def density_to_stokes(rho: Union[DensityMatrix, np.ndarray]) -> StokesVector:
    entries = _as_matrix_array(rho)
    if entries.ndim != 2:
        raise StateError("expected a single density matrix")
    return StokesVector(components=density_to_stokes_array(entries))


####################################
# Eigensolver
####################################


def _off_diagonal_norm(a: np.ndarray) -> np.ndarray:
    total = np.sum(np.abs(a) ** 2, axis=(-2, -1))
    diagonal = np.sum(np.abs(np.diagonal(a, axis1=-2, axis2=-1)) ** 2, axis=-1)
    return np.sqrt(np.maximum(total - diagonal, 0.0))


def _rotate(
    a: np.ndarray, v: np.ndarray | None, p: int, q: int, threshold: np.ndarray
) -> None:
    """One complex Givens rotation zeroing a[:, p, q] in place where |a_pq| > threshold."""
    apq = a[:, p, q]
    magnitude = np.abs(apq)
    active = magnitude > threshold
    if not np.any(active):
        return
    safe = np.where(active, magnitude, 1.0)

    phase = np.where(active, np.exp(1j * np.angle(apq)), 1.0)
    theta = np.where(active, (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe), 0.0)
    t = np.where(theta >= 0.0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.hypot(t, 1.0)
    s = t * c

    # G = diag(1, conj(phase)) @ [[c, s], [-s, c]] on the (p, q) plane
    g_pp = c
    g_pq = s
    g_qp = -s * np.conj(phase)
    g_qq = c * np.conj(phase)

    col_p = a[:, :, p].copy()
    col_q = a[:, :, q]
    a[:, :, p] = col_p * g_pp[:, None] + col_q * g_qp[:, None]
    a[:, :, q] = col_p * g_pq[:, None] + col_q * g_qq[:, None]

    row_p = a[:, p, :].copy()
    row_q = a[:, q, :]
    a[:, p, :] = np.conj(g_pp)[:, None] * row_p + np.conj(g_qp)[:, None] * row_q
    a[:, q, :] = np.conj(g_pq)[:, None] * row_p + np.conj(g_qq)[:, None] * row_q

    a[:, p, q] = np.where(active, 0.0, a[:, p, q])
    a[:, q, p] = np.where(active, 0.0, a[:, q, p])

    if v is not None:
        vcol_p = v[:, :, p].copy()
        vcol_q = v[:, :, q]
        v[:, :, p] = vcol_p * g_pp[:, None] + vcol_q * g_qp[:, None]
        v[:, :, q] = vcol_p * g_pq[:, None] + vcol_q * g_qq[:, None]


def _jacobi(m, with_vectors: bool) -> Tuple[np.ndarray, np.ndarray | None]:
    a = np.array(_as_matrix_array(m), dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise StateError(f"expected square matrices, got shape {a.shape}")
    if not is_hermitian(a, atol=EIGEN_HERMITIAN_ATOL):
        raise StateError("matrix is not Hermitian")

    batch_shape = a.shape[:-2]
    dimension = a.shape[-1]
    a = (0.5 * (a + _dagger(a))).reshape(-1, dimension, dimension)
    v = None
    if with_vectors:
        v = np.broadcast_to(np.eye(dimension, dtype=complex), a.shape).copy()

    scale = np.maximum(np.linalg.norm(a, axis=(-2, -1)), np.finfo(float).tiny)
    tolerance = JACOBI_TOL * scale
    # every element below this keeps the off-diagonal norm under tolerance
    element_tolerance = tolerance / dimension
    pairs = [(p, q) for p in range(dimension - 1) for q in range(p + 1, dimension)]

    sweeps = 0
    while True:
        pending = np.flatnonzero(_off_diagonal_norm(a) > tolerance)
        if pending.size == 0:
            break
        if sweeps == JACOBI_MAX_SWEEPS:
            logger.warning(
                "Jacobi did not converge after %d sweeps on %d matrices", sweeps, pending.size
            )
            break
        # converged matrices are left alone
        block = a[pending]
        block_vectors = v[pending] if v is not None else None
        for p, q in pairs:
            _rotate(block, block_vectors, p, q, element_tolerance[pending])
        a[pending] = block
        if v is not None:
            v[pending] = block_vectors
        sweeps += 1
    logger.debug("Jacobi finished after %d sweep(s) on %d matrices", sweeps, a.shape[0])

    eigenvalues = np.diagonal(a, axis1=-2, axis2=-1).real
    order = np.argsort(-eigenvalues, axis=-1, kind="stable")
    eigenvalues = np.take_along_axis(eigenvalues, order, axis=-1)
    eigenvalues = eigenvalues.reshape(batch_shape + (dimension,))
    if v is not None:
        v = np.take_along_axis(v, order[:, None, :], axis=-1)
        v = v.reshape(batch_shape + (dimension, dimension))
    return eigenvalues, v


def hermitian_eigen(m) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a Hermitian matrix (or a stack of them) by cyclic
    Jacobi with complex Givens rotations.

    Returns eigenvalues in descending order (ties keep their original index
    order) and the unitary whose columns are the matching eigenvectors, so
    m = V diag(w) V^dagger.
    """
    eigenvalues, eigenvectors = _jacobi(m, with_vectors=True)
    return eigenvalues, eigenvectors


def hermitian_eigvals(m) -> np.ndarray:
    eigenvalues, _ = _jacobi(m, with_vectors=False)
    return eigenvalues


####################################
# Distance
####################################


def trace_distance(a, b) -> Union[float, np.ndarray]:
    """
    D = 1/2 tr|a - b|, from the eigenvalues of the difference.

    Inputs only need to be Hermitian, unconstrained reconstructions are fine.
    Stacks broadcast against each other and give an array of distances.
    """
    left = _as_matrix_array(a)
    right = _as_matrix_array(b)
    if left.shape[-2:] != right.shape[-2:]:
        raise StateError(
            f"dimension mismatch: {left.shape[-2:]} vs {right.shape[-2:]}"
        )
    eigenvalues = hermitian_eigvals(left - right)
    distance = 0.5 * np.sum(np.abs(eigenvalues), axis=-1)
    if np.ndim(distance) == 0:
        return float(distance)
    return distance


####################################
# Named states
####################################

SQRT_1_3 = np.sqrt(1.0 / 3.0)
SQRT_2_3 = np.sqrt(2.0 / 3.0)


def _bell_psi_plus_stokes() -> np.ndarray:
    # (|HV> + |VH>) / sqrt(2), H = index 0, V = index 1
    psi = np.zeros(4, dtype=complex)
    psi[1] = psi[2] = 1.0 / np.sqrt(2.0)
    return density_to_stokes_array(np.outer(psi, np.conj(psi)))


_NAMED_STOKES = {
    StateLabel.unpolarized: lambda: np.array([1.0, 0.0, 0.0, 0.0]),
    StateLabel.horizontal: lambda: np.array([1.0, 1.0, 0.0, 0.0]),
    StateLabel.b1r: lambda: np.array([1.0, SQRT_1_3, SQRT_2_3, 0.0]),
    StateLabel.minus_b1r: lambda: np.array([1.0, -SQRT_1_3, -SQRT_2_3, 0.0]),
    StateLabel.bell_psi_plus: _bell_psi_plus_stokes,
}

NAMED_LABELS = tuple(label.value for label in _NAMED_STOKES)


def named_state(label: Union[str, StateLabel]) -> NamedState:
    label = StateLabel(label)
    if label is StateLabel.custom:
        raise StateError("custom states need explicit Stokes components")
    return NamedState(label=label, stokes=StokesVector(components=_NAMED_STOKES[label]()))


def custom_state(components) -> NamedState:
    components = np.asarray(components, dtype=float).ravel()
    qubit_count_for_length(components.size)
    stokes = StokesVector(components=components)
    if abs(stokes.components[0] - 1.0) > PHYSICAL_ATOL:
        raise StateError(f"custom state must have S0 = 1, got {stokes.components[0]}")
    if not stokes.is_physical:
        raise UnphysicalStateError(
            f"custom state {stokes.components.tolist()} is not physical"
        )
    return NamedState(label=StateLabel.custom, stokes=stokes)
