"""
Accuracy of linear tomography with a finite number of copies.

For N detected copies every partition pattern k = (n_1, ..., n_m) of the
events over the detectors reconstructs to one state S_k. With c_k the number
of detector sequences collapsing to k and p_k the probability of one such
sequence, the average trace distance to the reference is

    D~ = sum_k c_k * p_k * D_k

evaluated exactly by enumeration while the number of patterns is manageable,
and by Monte Carlo otherwise. Multiplicities and probabilities are combined
in log space (N! overflows int64 at N = 21); zero-probability patterns are
skipped, never multiplied.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import Iterable, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import gammaln, xlogy

import config
from schemas import AccuracyCurve, AccuracyPoint, PowerLawFit
from utils.tomography.estimate import linear_reconstruct, linear_reconstruct_array, project_to_physical_array
from utils.tomography.povm import InstrumentMatrix, outcome_probabilities
from utils.tomography.qstate import (
    DensityMatrix,
    NamedState,
    StokesVector,
    stokes_to_density,
    stokes_to_density_array,
    trace_distance,
)
from utils.tomography.sim import (
    asymptote_counts,
    cumulative_counts,
    draw_outcomes,
    substream,
)

logger = logging.getLogger("tetratomo.accuracy")

WEIGHT_ATOL = 1e-10
BRUTE_FORCE_MAX_SEQUENCES = 2**16
CHUNK_ROWS = 2**17

StateLike = Union[NamedState, StokesVector, np.ndarray]


class EnumerationCapExceeded(ValueError):
    pass


class FitError(ValueError):
    pass


class NormalizationError(ValueError):
    pass


def _stokes(state: StateLike) -> StokesVector:
    if isinstance(state, NamedState):
        return state.stokes
    if isinstance(state, StokesVector):
        return state
    return StokesVector(components=state)


def _label(state: StateLike) -> str:
    return state.name if isinstance(state, NamedState) else "custom"


def _reference_matrix(state: StateLike, reference: DensityMatrix | None) -> np.ndarray:
    if reference is None:
        return stokes_to_density(_stokes(state)).entries
    return reference.entries


####################################
# Partition patterns
####################################


def pattern_count(N: int, outcomes: int) -> int:
    return math.comb(N + outcomes - 1, outcomes - 1)


@lru_cache(maxsize=4096)
def _compositions(n: int, parts: int) -> np.ndarray:
    if parts == 1:
        result = np.array([[n]], dtype=np.int64)
    elif parts == 2:
        first = np.arange(n + 1, dtype=np.int64)
        result = np.column_stack([first, n - first])
    else:
        blocks = []
        for first in range(n + 1):
            rest = _compositions(n - first, parts - 1)
            blocks.append(
                np.hstack([np.full((rest.shape[0], 1), first, dtype=np.int64), rest])
            )
        result = np.vstack(blocks)
    result.setflags(write=False)
    return result


def enumerate_patterns(N: int, outcomes: int = 4, cap: int | None = None) -> np.ndarray:
    """
    All compositions of N into `outcomes` non-negative parts, each once, in
    lexicographic order; shape (C(N+m-1, m-1), m).
    """
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    cap = config.PATTERN_CAP if cap is None else cap
    count = pattern_count(N, outcomes)
    if count > cap:
        raise EnumerationCapExceeded(
            f"N={N} over {outcomes} outcomes has {count} patterns (cap {cap}), use Monte Carlo"
        )
    return _compositions(N, outcomes)


class PartitionPattern(BaseModel):
    counts: np.ndarray
    log_multiplicity: float
    log_probability: float
    distance: float

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @property
    def weight(self) -> float:
        return math.exp(self.log_multiplicity + self.log_probability)


class PartitionTable(BaseModel):
    """Column store of the contributing patterns for one (state, N)."""

    counts: np.ndarray
    log_multiplicity: np.ndarray
    log_probability: np.ndarray
    distance: np.ndarray
    skipped: int = 0

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    def __len__(self) -> int:
        return self.counts.shape[0]

    def __getitem__(self, index: int) -> PartitionPattern:
        return PartitionPattern(
            counts=self.counts[index],
            log_multiplicity=float(self.log_multiplicity[index]),
            log_probability=float(self.log_probability[index]),
            distance=float(self.distance[index]),
        )

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_multiplicity + self.log_probability)


def log_multiplicity(patterns: np.ndarray) -> np.ndarray:
    """log(N! / prod n_j!) via log-gamma."""
    patterns = np.asarray(patterns)
    totals = patterns.sum(axis=-1)
    return gammaln(totals + 1.0) - gammaln(patterns + 1.0).sum(axis=-1)


def _distances(
    counts: np.ndarray, B: InstrumentMatrix, reference: np.ndarray, project: bool
) -> np.ndarray:
    distances = np.empty(counts.shape[0])
    for start in range(0, counts.shape[0], CHUNK_ROWS):
        chunk = counts[start:start + CHUNK_ROWS]
        estimates = linear_reconstruct_array(chunk, B)
        if project:
            estimates = project_to_physical_array(estimates)
        distances[start:start + CHUNK_ROWS] = trace_distance(
            reference, stokes_to_density_array(estimates)
        )
    return distances


def partition_table(
    state: StateLike,
    B: InstrumentMatrix,
    N: int,
    reference: DensityMatrix | None = None,
    project: bool = False,
    cap: int | None = None,
) -> PartitionTable:
    patterns = enumerate_patterns(N, B.outcomes, cap)
    probabilities = outcome_probabilities(B, _stokes(state))

    log_probability = np.sum(xlogy(patterns, probabilities), axis=-1)
    contributing = np.isfinite(log_probability)
    patterns = patterns[contributing]

    return PartitionTable(
        counts=patterns,
        log_multiplicity=log_multiplicity(patterns),
        log_probability=log_probability[contributing],
        distance=_distances(patterns, B, _reference_matrix(state, reference), project),
        skipped=int((~contributing).sum()),
    )


def average_trace_distance_exact(
    state: StateLike,
    B: InstrumentMatrix,
    N: int,
    reference: DensityMatrix | None = None,
    project: bool = False,
    cap: int | None = None,
) -> float:
    """
    Multinomial-weighted trace distance averaged over every partition pattern of N events. The reference
    defaults to the true state; reconstructions are unconstrained unless
    project is set.
    """
    table = partition_table(state, B, N, reference, project, cap)
    weights = table.weights

    total = math.fsum(weights)
    if abs(total - 1.0) > WEIGHT_ATOL:
        raise ArithmeticError(f"pattern weights sum to {total!r} at N={N}")

    order = np.argsort(-weights, kind="stable")
    logger.debug("N=%d: %d patterns, %d skipped", N, len(table), table.skipped)
    return math.fsum((weights * table.distance)[order])


def exact_curve(
    state: StateLike,
    B: InstrumentMatrix,
    n_values: Iterable[int],
    reference: DensityMatrix | None = None,
    project: bool = False,
    cap: int | None = None,
) -> AccuracyCurve:
    label = _label(state)
    points = []
    for N in n_values:
        d_avg = average_trace_distance_exact(state, B, N, reference, project, cap)
        logger.debug("exact %s N=%d D=%.12g", label, N, d_avg)
        if points and d_avg > points[-1].d_avg:
            logger.warning(
                "exact curve for %s is not monotone: D(%d)=%.12g > D(%d)=%.12g",
                label,
                N,
                d_avg,
                points[-1].N,
                points[-1].d_avg,
            )
        points.append(AccuracyPoint(N=N, d_avg=d_avg))
    return AccuracyCurve(
        points=points, method="exact", state=label, qubit_count=B.qubit_count
    )


def brute_force_average(
    state: StateLike,
    B: InstrumentMatrix,
    N: int,
    reference: DensityMatrix | None = None,
    project: bool = False,
) -> float:
    """
    Sequence-level oracle: sums over every one of the m^N detector sequences
    with its own product probability, no pattern bookkeeping.
    """
    outcomes = B.outcomes
    if N < 1 or outcomes**N > BRUTE_FORCE_MAX_SEQUENCES:
        raise ValueError(
            f"brute force needs 1 <= N and {outcomes}^N <= {BRUTE_FORCE_MAX_SEQUENCES}, got N={N}"
        )
    probabilities = outcome_probabilities(B, _stokes(state))

    index = np.arange(outcomes**N)
    sequences = (index[:, None] // outcomes ** np.arange(N)) % outcomes
    sequence_probability = np.prod(probabilities[sequences], axis=1)

    counts = np.zeros((index.size, outcomes), dtype=np.int64)
    for event in range(N):
        counts[index, sequences[:, event]] += 1

    possible = sequence_probability > 0.0
    distances = _distances(
        counts[possible], B, _reference_matrix(state, reference), project
    )
    return math.fsum(sequence_probability[possible] * distances)


####################################
# Monte Carlo
####################################


def asymptote_reference(
    state: NamedState, B: InstrumentMatrix, N_large: int, seed: int
) -> DensityMatrix:
    """Unconstrained reconstruction from a very large simulated ensemble."""
    estimate = linear_reconstruct(asymptote_counts(state, B, N_large, seed), B)
    return stokes_to_density(estimate)


def _run_counts(p: np.ndarray, N: int, seed: int, runs: range) -> np.ndarray:
    return np.array(
        [np.bincount(draw_outcomes(p, N, substream(seed, run)), minlength=p.size) for run in runs]
    )


def _run_curves(
    p: np.ndarray,
    B: InstrumentMatrix,
    n_max: int,
    seed: int,
    runs: range,
    reference: np.ndarray,
    project: bool,
) -> np.ndarray:
    curves = []
    for run in runs:
        prefixes = cumulative_counts(draw_outcomes(p, n_max, substream(seed, run)), p.size)
        curves.append(_distances(prefixes, B, reference, project))
    return np.array(curves)


def _split_runs(runs: int, workers: int) -> list[range]:
    size = max(1, math.ceil(runs / max(1, workers)))
    return [range(start, min(start + size, runs)) for start in range(0, runs, size)]


def average_trace_distance_mc(
    state: StateLike,
    B: InstrumentMatrix,
    N: int,
    reference: DensityMatrix | None = None,
    runs: int = 100,
    seed: int | None = None,
    project: bool = False,
    workers: int = 1,
) -> Tuple[float, float]:
    """
    Mean and standard error of D over `runs` simulated count vectors of N
    events. Run r draws from substream r of the master seed, so the result
    does not depend on `workers`.
    """
    if runs < 2:
        raise ValueError(f"Monte Carlo needs at least 2 runs, got {runs}")
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    seed = config.DEFAULT_SEED if seed is None else seed
    p = outcome_probabilities(B, _stokes(state))

    with ThreadPoolExecutor(max_workers=workers) as executor:
        blocks = list(
            executor.map(lambda block: _run_counts(p, N, seed, block), _split_runs(runs, workers))
        )
    distances = _distances(np.vstack(blocks), B, _reference_matrix(state, reference), project)

    d_avg = math.fsum(distances) / runs
    std_error = float(np.std(distances, ddof=1) / math.sqrt(runs))
    return d_avg, std_error


def mc_curve(
    state: StateLike,
    B: InstrumentMatrix,
    n_max: int,
    runs: int,
    seed: int | None = None,
    reference: DensityMatrix | None = None,
    project: bool = False,
    workers: int = 1,
) -> AccuracyCurve:
    """
    Cumulative curve: each run is one stream of n_max events, every prefix
    is reconstructed, and distances are averaged across runs per N.
    """
    if runs < 2:
        raise ValueError(f"Monte Carlo needs at least 2 runs, got {runs}")
    seed = config.DEFAULT_SEED if seed is None else seed
    p = outcome_probabilities(B, _stokes(state))
    reference_matrix = _reference_matrix(state, reference)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        blocks = list(
            executor.map(
                lambda block: _run_curves(p, B, n_max, seed, block, reference_matrix, project),
                _split_runs(runs, workers),
            )
        )
    distances = np.vstack(blocks)

    d_avg = distances.mean(axis=0)
    std_error = distances.std(axis=0, ddof=1) / math.sqrt(runs)
    points = [
        AccuracyPoint(N=N, d_avg=float(d), std_error=float(e))
        for N, d, e in zip(range(1, n_max + 1), d_avg, std_error)
    ]
    return AccuracyCurve(
        points=points, method="monte_carlo", state=_label(state), qubit_count=B.qubit_count
    )


####################################
# Fits and normalization
####################################


def fit_power_law(
    curve: AccuracyCurve, n_min: int | None = None, n_max: int | None = None
) -> PowerLawFit:
    """Least squares of log D against log N: D = a / N^c."""
    n_min = config.FIT_NMIN if n_min is None else n_min
    n_max = config.FIT_NMAX if n_max is None else n_max

    n_values = curve.n_values
    d_values = curve.d_values
    in_range = (n_values >= n_min) & (n_values <= n_max)
    if in_range.sum() < 3:
        raise FitError(f"need at least 3 points in [{n_min}, {n_max}], got {int(in_range.sum())}")
    if np.any(d_values[in_range] <= 0.0):
        raise FitError("power-law fit needs strictly positive distances")

    x = np.log(n_values[in_range].astype(float))
    y = np.log(d_values[in_range])
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (intercept + slope * x)

    return PowerLawFit(
        a=float(np.exp(intercept)),
        c=float(-slope),
        residual_rms=float(np.sqrt(np.mean(residuals**2))),
        n_min=int(n_values[in_range].min()),
        n_max=int(n_values[in_range].max()),
        state=curve.state,
    )


def free_parameters(qubit_count: int) -> int:
    return 4**qubit_count - 1


def normalize_curve(curve: AccuracyCurve, qubit_count: int | None = None) -> AccuracyCurve:
    """Divide by the number of free parameters, 3 for one qubit and 15 for two."""
    if curve.normalized:
        raise NormalizationError(f"curve for {curve.state} is already normalized")
    qubit_count = curve.qubit_count if qubit_count is None else qubit_count
    scale = free_parameters(qubit_count)
    points = [
        AccuracyPoint(N=point.N, d_avg=point.d_avg / scale, std_error=point.std_error / scale)
        for point in curve.points
    ]
    return curve.model_copy(update={"points": points, "normalized": True, "qubit_count": qubit_count})


def curve_ratio(
    numerator: AccuracyCurve, denominator: AccuracyCurve, n_min: int = 1, n_max: int | None = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise d_avg ratio over the N values both curves share inside [n_min, n_max]."""
    shared, left, right = np.intersect1d(
        numerator.n_values, denominator.n_values, return_indices=True
    )
    in_range = shared >= n_min
    if n_max is not None:
        in_range &= shared <= n_max
    if not np.any(in_range):
        raise FitError(f"curves share no N values in [{n_min}, {n_max}]")
    ratio = numerator.d_values[left] / denominator.d_values[right]
    return shared[in_range], ratio[in_range]
