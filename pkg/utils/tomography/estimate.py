"""
Count vectors in, state estimates out.

linear_reconstruct is plain inversion of I = B . S and may return an
unphysical Stokes vector; project_to_physical maps it to the nearest physical
state (radial clip for one qubit, clip-and-renormalize of the spectrum for two).
likelihood_region scores a latitude/longitude grid of pure states for the
convergence plots; converge_trace replays one event stream copy by copy.
"""

import logging
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import xlogy

import config
from utils.tomography.povm import PROBABILITY_ATOL, InstrumentMatrix, outcome_probabilities
from utils.tomography.qstate import (
    PHYSICAL_ATOL,
    NamedState,
    StokesVector,
    UnphysicalStateError,
    density_to_stokes_array,
    hermitian_eigen,
    stokes_to_density_array,
    trace_distance,
)
from utils.tomography.sim import CountVector, EventStream, stream_events

logger = logging.getLogger("tetratomo.estimate")

MIN_GRID_RESOLUTION = 16


class EstimationError(ValueError):
    pass


def _components(s: Union[StokesVector, np.ndarray]) -> np.ndarray:
    if isinstance(s, StokesVector):
        return s.components
    return np.asarray(s, dtype=float)


####################################
# Linear inversion
####################################


def linear_reconstruct_array(counts: np.ndarray, B: InstrumentMatrix) -> np.ndarray:
    """Batched S = B^-1 . (counts / total); counts has shape (..., m), totals > 0."""
    counts = np.asarray(counts, dtype=float)
    frequencies = counts / counts.sum(axis=-1, keepdims=True)
    return frequencies @ B.inverse.T


def linear_reconstruct(counts: CountVector, B: InstrumentMatrix) -> StokesVector:
    if counts.total == 0:
        raise EstimationError("cannot reconstruct a state from zero events")
    if counts.outcomes != B.outcomes:
        raise EstimationError(
            f"{counts.outcomes} detector counts for a {B.outcomes}-outcome instrument"
        )
    return StokesVector(components=B.inverse @ counts.frequencies)


####################################
# Nearest physical state
####################################


def project_to_physical_array(components: np.ndarray) -> np.ndarray:
    """Batched projection of normalized Stokes vectors, shape (..., 4) or (..., 16)."""
    components = np.array(components, dtype=float)

    if components.shape[-1] == 4:
        norm = np.linalg.norm(components[..., 1:], axis=-1, keepdims=True)
        scale = np.where(norm > 1.0, 1.0 / np.where(norm > 1.0, norm, 1.0), 1.0)
        components[..., 1:] *= scale
        return components

    rho = stokes_to_density_array(components)
    eigenvalues, eigenvectors = hermitian_eigen(rho)
    needs_projection = np.any(eigenvalues < 0.0, axis=-1)
    if not np.any(needs_projection):
        return components

    clipped = np.clip(eigenvalues, 0.0, None)
    clipped = clipped / clipped.sum(axis=-1, keepdims=True)
    projected = np.einsum(
        "...ik,...k,...jk->...ij", eigenvectors, clipped, np.conj(eigenvectors)
    )
    projected = 0.5 * (projected + np.conj(np.swapaxes(projected, -1, -2)))
    projected_components = density_to_stokes_array(projected)
    return np.where(needs_projection[..., None], projected_components, components)


def project_to_physical(s: Union[StokesVector, np.ndarray]) -> StokesVector:
    components = _components(s)
    if abs(components[0] - 1.0) > PHYSICAL_ATOL:
        raise EstimationError(f"projection needs a normalized state, S0 = {components[0]}")
    return StokesVector(components=project_to_physical_array(components))


####################################
# Likelihood
####################################


def log_likelihood(
    counts: CountVector, s: Union[StokesVector, np.ndarray], B: InstrumentMatrix
) -> float:
    """sum_j n_j log p_j(s), with 0 log 0 = 0 and -inf for an impossible count."""
    stokes = s if isinstance(s, StokesVector) else StokesVector(components=s)
    if not stokes.is_physical:
        raise UnphysicalStateError("likelihood is only defined for physical states")
    probabilities = B.entries @ stokes.components
    probabilities = np.where(probabilities < PROBABILITY_ATOL, 0.0, probabilities)
    return float(np.sum(xlogy(counts.counts, probabilities)))


class LikelihoodRegion(BaseModel):
    longitudes: np.ndarray
    latitudes: np.ndarray
    directions: np.ndarray
    log_likelihood: np.ndarray
    max_point: np.ndarray
    members: np.ndarray
    threshold_delta: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def member_count(self) -> int:
        return int(self.members.sum())

    @property
    def max_log_likelihood(self) -> float:
        return float(self.log_likelihood.max())


def sphere_grid(grid_resolution: int):
    """
    Pure-state grid: grid_resolution longitudes uniform in [0, 360) and
    grid_resolution polar angles at cell centres of [0, 180] degrees.
    Rows run over latitude, longitude varies fastest.
    """
    index = np.arange(grid_resolution)
    longitude = 2.0 * np.pi * index / grid_resolution
    polar = np.pi * (index + 0.5) / grid_resolution

    polar_grid, longitude_grid = np.meshgrid(polar, longitude, indexing="ij")
    polar_grid = polar_grid.ravel()
    longitude_grid = longitude_grid.ravel()
    directions = np.stack(
        [
            np.sin(polar_grid) * np.cos(longitude_grid),
            np.sin(polar_grid) * np.sin(longitude_grid),
            np.cos(polar_grid),
        ],
        axis=-1,
    )
    latitudes = np.degrees(0.5 * np.pi - polar_grid)
    return np.degrees(longitude_grid), latitudes, directions


def likelihood_region(
    counts: CountVector,
    B: InstrumentMatrix,
    grid_resolution: int | None = None,
    threshold_delta: float | None = None,
) -> LikelihoodRegion:
    grid_resolution = config.GRID_RESOLUTION if grid_resolution is None else grid_resolution
    threshold_delta = config.THRESHOLD_DELTA if threshold_delta is None else threshold_delta
    if grid_resolution < MIN_GRID_RESOLUTION:
        raise EstimationError(f"grid resolution must be >= {MIN_GRID_RESOLUTION}")
    if threshold_delta <= 0:
        raise EstimationError("threshold_delta must be positive")
    if B.qubit_count != 1:
        raise EstimationError("likelihood regions are drawn on the one-qubit Poincare sphere")

    longitudes, latitudes, directions = sphere_grid(grid_resolution)
    stokes = np.hstack([np.ones((directions.shape[0], 1)), directions])
    probabilities = np.clip(stokes @ B.entries.T, 0.0, None)
    scores = np.sum(xlogy(counts.counts, probabilities), axis=-1)

    best = int(np.argmax(scores))
    members = scores >= scores[best] - threshold_delta
    logger.debug(
        "likelihood region: N=%d, %d of %d grid points inside",
        counts.total,
        int(members.sum()),
        members.size,
    )
    return LikelihoodRegion(
        longitudes=longitudes,
        latitudes=latitudes,
        directions=directions,
        log_likelihood=scores,
        max_point=directions[best],
        members=members,
        threshold_delta=float(threshold_delta),
    )


####################################
# Cumulative convergence
####################################


class ConvergenceTrace(BaseModel):
    """Per-event estimates for one stream; row i is the state after i + 1 events."""

    stream: EventStream
    estimates: np.ndarray
    distances: np.ndarray
    member_counts: np.ndarray
    grid_resolution: int
    threshold_delta: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def __len__(self) -> int:
        return self.distances.size

    def region(self, n: int, B: InstrumentMatrix) -> LikelihoodRegion:
        return likelihood_region(
            self.stream.counts(n), B, self.grid_resolution, self.threshold_delta
        )


def converge_trace(
    state: NamedState,
    B: InstrumentMatrix,
    events: int,
    seed: int,
    grid_resolution: int | None = None,
    threshold_delta: float | None = None,
    index: int = 0,
) -> ConvergenceTrace:
    """
    Replays one detection stream copy by copy: after every event the counts
    so far are inverted, projected to the nearest physical state and compared
    to the source, and the likelihood region on the grid is sized.
    """
    grid_resolution = config.GRID_RESOLUTION if grid_resolution is None else grid_resolution
    threshold_delta = config.THRESHOLD_DELTA if threshold_delta is None else threshold_delta
    if events < 1:
        raise EstimationError(f"convergence needs at least one event, got {events}")
    if grid_resolution < MIN_GRID_RESOLUTION:
        raise EstimationError(f"grid resolution must be >= {MIN_GRID_RESOLUTION}")
    if B.qubit_count != 1:
        raise EstimationError("convergence traces are one-qubit only")

    stream = stream_events(
        outcome_probabilities(B, state.stokes), events, seed, index, source_state=state
    )
    prefixes = stream.cumulative_counts()

    estimates = project_to_physical_array(linear_reconstruct_array(prefixes, B))
    truth = stokes_to_density_array(state.stokes.components)
    distances = trace_distance(truth, stokes_to_density_array(estimates))

    _, _, directions = sphere_grid(grid_resolution)
    grid_stokes = np.hstack([np.ones((directions.shape[0], 1)), directions])
    grid_probabilities = np.clip(grid_stokes @ B.entries.T, 0.0, None)
    scores = np.sum(xlogy(prefixes[:, None, :], grid_probabilities[None, :, :]), axis=-1)
    members = scores >= scores.max(axis=-1, keepdims=True) - threshold_delta

    logger.debug(
        "converge %s: D(1)=%.4f D(%d)=%.4f",
        state.name,
        distances[0],
        events,
        distances[-1],
    )
    return ConvergenceTrace(
        stream=stream,
        estimates=estimates,
        distances=np.atleast_1d(distances),
        member_counts=members.sum(axis=-1),
        grid_resolution=grid_resolution,
        threshold_delta=float(threshold_delta),
    )
