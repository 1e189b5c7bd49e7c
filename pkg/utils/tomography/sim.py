"""
Synthetic detection records.

Every random draw goes through numpy's PCG64 generator seeded from a
SeedSequence. Substream derivation: run index r of master seed s uses
SeedSequence(entropy=s, spawn_key=(r,)); the asymptote estimate uses the
reserved index ASYMPTOTE_STREAM. Results depend only on (inputs, seed, index),
never on thread count or call order.

Counts are always the collapse of an event stream (N sequential categorical
draws by inverse CDF over the fixed outcome order), so cumulative prefixes
and totals agree event by event.
"""

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from utils.tomography.povm import InstrumentMatrix, outcome_probabilities
from utils.tomography.qstate import NamedState

logger = logging.getLogger("tetratomo.sim")

DISTRIBUTION_ATOL = 1e-12
ASYMPTOTE_STREAM = 2**32
RECOMMENDED_ASYMPTOTE_EVENTS = 100_000


class DistributionError(ValueError):
    pass


class CountVector(BaseModel):
    counts: np.ndarray
    total: int

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("counts", mode="before")
    @classmethod
    def _as_counts(cls, value):
        counts = np.array(value)
        if counts.ndim != 1 or counts.size not in (4, 16):
            raise ValueError(f"count vector must have 4 or 16 entries, got shape {counts.shape}")
        if not np.all(np.equal(np.mod(counts, 1), 0)):
            raise ValueError("counts must be integers")
        counts = counts.astype(np.int64)
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        counts.setflags(write=False)
        return counts

    @model_validator(mode="after")
    def _check_total(self):
        if int(self.counts.sum()) != self.total:
            raise ValueError(f"counts sum to {int(self.counts.sum())}, total is {self.total}")
        return self

    @classmethod
    def of(cls, counts) -> "CountVector":
        counts = np.asarray(counts)
        return cls(counts=counts, total=int(np.sum(counts)))

    @property
    def outcomes(self) -> int:
        return self.counts.size

    @property
    def frequencies(self) -> np.ndarray:
        if self.total == 0:
            raise DistributionError("frequencies of an empty count vector")
        return self.counts / self.total


class EventStream(BaseModel):
    outcomes: np.ndarray
    outcome_count: int
    seed: int
    source_state: Optional[NamedState] = None

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @model_validator(mode="after")
    def _check_outcomes(self):
        if self.outcome_count not in (4, 16):
            raise ValueError(f"streams have 4 or 16 outcomes, got {self.outcome_count}")
        if self.outcomes.size and (
            self.outcomes.min() < 0 or self.outcomes.max() >= self.outcome_count
        ):
            raise ValueError("outcome out of range")
        return self

    def __len__(self) -> int:
        return self.outcomes.size

    def prefix(self, n: int) -> "EventStream":
        if not 0 <= n <= len(self):
            raise DistributionError(f"prefix length {n} outside 0..{len(self)}")
        return self.model_copy(update={"outcomes": self.outcomes[:n]})

    def counts(self, n: int | None = None) -> CountVector:
        outcomes = self.outcomes if n is None else self.prefix(n).outcomes
        return CountVector.of(np.bincount(outcomes, minlength=self.outcome_count))

    def cumulative_counts(self) -> np.ndarray:
        """Row i holds the counts after i + 1 events, shape (N, m)."""
        return cumulative_counts(self.outcomes, self.outcome_count)


def cumulative_counts(outcomes: np.ndarray, outcome_count: int) -> np.ndarray:
    one_hot = np.zeros((outcomes.size, outcome_count), dtype=np.int64)
    one_hot[np.arange(outcomes.size), outcomes] = 1
    return np.cumsum(one_hot, axis=0)


def substream(seed: int, index: int = 0) -> np.random.Generator:
    if seed < 0 or index < 0:
        raise DistributionError("seed and stream index must be non-negative")
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))
    )


def validate_distribution(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size not in (4, 16):
        raise DistributionError(f"distribution must have 4 or 16 outcomes, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < -DISTRIBUTION_ATOL):
        raise DistributionError(f"invalid probabilities {p.tolist()}")
    if abs(p.sum() - 1.0) > DISTRIBUTION_ATOL:
        raise DistributionError(f"probabilities sum to {p.sum()}")
    return np.clip(p, 0.0, 1.0)


def draw_outcomes(p: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """n categorical draws by inverse CDF on the fixed outcome order."""
    if n < 0:
        raise DistributionError(f"number of events must be non-negative, got {n}")
    cdf = np.cumsum(p)
    # nothing may land past the last outcome that can actually occur
    cdf[np.flatnonzero(p)[-1]:] = 1.0
    return np.searchsorted(cdf, rng.random(n), side="right").astype(np.int64)


def stream_events(
    p,
    N: int,
    seed: int,
    index: int = 0,
    source_state: NamedState | None = None,
) -> EventStream:
    p = validate_distribution(p)
    outcomes = draw_outcomes(p, N, substream(seed, index))
    return EventStream(
        outcomes=outcomes, outcome_count=p.size, seed=seed, source_state=source_state
    )


def sample_counts(p, N: int, seed: int, index: int = 0) -> CountVector:
    """Multinomial(N, p) sample, the collapse of stream_events(p, N, seed)."""
    return stream_events(p, N, seed, index).counts()


def asymptote_counts(
    state: NamedState, B: InstrumentMatrix, N_large: int, seed: int
) -> CountVector:
    if N_large < RECOMMENDED_ASYMPTOTE_EVENTS:
        logger.warning(
            "asymptote built from %d events, at least %d recommended",
            N_large,
            RECOMMENDED_ASYMPTOTE_EVENTS,
        )
    p = outcome_probabilities(B, state.stokes)
    return sample_counts(p, N_large, seed, index=ASYMPTOTE_STREAM)
