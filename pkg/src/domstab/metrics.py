"""Mean-crowding dominance metrics and classical diversity indices.

For one sample the community is a vector of species abundances m_1..m_n
(zeros allowed, sum must be positive).  With mean abundance ``m`` and
population variance ``V`` (divisor n, not n - 1):

    mean crowding          m_star = m + V / m - 1
    community dominance    D_com  = m_star / m
    dominance distance     D_dist(i) = m_star / m_i        (+inf when m_i = 0)
    species dominance      D_sp(i)   = D_com - D_dist(i)   (-inf when m_i = 0)

Community dominance is linear in the Simpson index:

    D_com = n * simpson - n / total

which ties the crowding view of dominance to the classical indices computed
by :func:`diversity_indices`.  The identity only holds with the population
variance; that is why the divisor is n throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateRegressionError, PreconditionError, ZeroCommunityError

__all__ = [
    "CommunityStats",
    "SpeciesDominance",
    "IndexKind",
    "DiversityIndices",
    "IndexRegression",
    "community_stats",
    "mean_crowding",
    "community_dominance",
    "species_dominance_distance",
    "species_dominance",
    "species_dominances",
    "diversity_indices",
    "simpson_identity_residual",
    "regress_dominance_vs_index",
]


def _as_abundances(values: Sequence[float]) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("abundance vector must be one-dimensional and non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("abundance vector must be finite")
    if np.any(arr < 0):
        raise ValueError("abundance vector must be non-negative")
    if not arr.any():
        raise ZeroCommunityError("all abundances are zero")
    return arr


@dataclass(frozen=True)
class CommunityStats:
    """Per-sample aggregates every dominance quantity derives from."""

    n: int
    total: float
    mean: float
    variance: float          # population variance, divisor n
    mean_crowding: float
    dominance: float         # mean_crowding / mean


@dataclass(frozen=True)
class SpeciesDominance:
    """Dominance quantities for one species in one sample.

    ``distance`` is +inf and ``dominance`` is -inf for a species absent from
    the sample.  ``sentinel_replaced`` is set by the stability layer when the
    -inf dominance has been substituted with the subject-wide floor.
    """

    species_id: str
    abundance: float
    distance: float
    dominance: float
    sentinel_replaced: bool = False


def community_stats(values: Sequence[float]) -> CommunityStats:
    """Compute mean, variance, mean crowding, and dominance for one sample."""
    arr = _as_abundances(values)
    n = arr.size
    total = float(arr.sum())
    mean = total / n
    variance = float(np.mean((arr - mean) ** 2))
    crowding = mean + variance / mean - 1.0
    return CommunityStats(
        n=n,
        total=total,
        mean=mean,
        variance=variance,
        mean_crowding=crowding,
        dominance=crowding / mean,
    )


def mean_crowding(values: Sequence[float]) -> float:
    """Mean number of neighbours an individual shares its unit with."""
    return community_stats(values).mean_crowding


def community_dominance(values: Sequence[float]) -> float:
    """Community dominance: mean crowding scaled by mean abundance."""
    return community_stats(values).dominance


def species_dominance_distance(values: Sequence[float], index: int) -> float:
    """Distance of species ``index`` from community crowding (+inf if absent)."""
    stats = community_stats(values)
    abundance = float(np.asarray(values, dtype=float)[index])
    if abundance == 0.0:
        return math.inf
    return stats.mean_crowding / abundance


def species_dominance(values: Sequence[float], index: int) -> float:
    """Species dominance: community dominance minus the species distance."""
    distance = species_dominance_distance(values, index)
    if math.isinf(distance):
        return -math.inf
    return community_stats(values).dominance - distance


def species_dominances(
    values: Sequence[float], species_ids: Sequence[str]
) -> tuple[SpeciesDominance, ...]:
    """Per-species dominance records for one sample, in roster order."""
    arr = _as_abundances(values)
    if len(species_ids) != arr.size:
        raise ValueError("species_ids length must match abundance vector")
    stats = community_stats(arr)
    out = []
    for sid, abundance in zip(species_ids, arr.tolist()):
        if abundance == 0.0:
            distance, dominance = math.inf, -math.inf
        else:
            distance = stats.mean_crowding / abundance
            dominance = stats.dominance - distance
        out.append(
            SpeciesDominance(
                species_id=str(sid),
                abundance=abundance,
                distance=distance,
                dominance=dominance,
            )
        )
    return tuple(out)


# ---------------------------------------------------------------- indices


class IndexKind(enum.Enum):
    SIMPSON = "simpson"
    SHANNON = "shannon"
    SHANNON_EVENNESS = "shannon-evenness"
    BERGER_PARKER = "berger-parker"
    SIMPSON_EVENNESS = "simpson-evenness"


@dataclass(frozen=True)
class DiversityIndices:
    """Classical indices for one sample.

    ``simpson`` is the probability-of-conspecific-encounter form sum(p_i^2),
    so larger means more dominated.  ``simpson_evenness`` is simpson / n,
    which is deliberately the literal ratio (not 1/(simpson * n)); it pairs
    with the linearity identity and is what the regressions below expect.
    ``shannon_evenness`` is NaN for a single-species roster (0/0).
    """

    simpson: float
    shannon: float
    shannon_evenness: float
    berger_parker: float
    simpson_evenness: float

    def value(self, which: IndexKind) -> float:
        return {
            IndexKind.SIMPSON: self.simpson,
            IndexKind.SHANNON: self.shannon,
            IndexKind.SHANNON_EVENNESS: self.shannon_evenness,
            IndexKind.BERGER_PARKER: self.berger_parker,
            IndexKind.SIMPSON_EVENNESS: self.simpson_evenness,
        }[which]


def diversity_indices(values: Sequence[float]) -> DiversityIndices:
    arr = _as_abundances(values)
    n = arr.size
    p = arr / arr.sum()
    simpson = float(np.sum(p * p))
    positive = p[p > 0]
    shannon = float(-np.sum(positive * np.log(positive)))
    shannon_evenness = shannon / math.log(n) if n > 1 else math.nan
    return DiversityIndices(
        simpson=simpson,
        shannon=shannon,
        shannon_evenness=shannon_evenness,
        berger_parker=float(p.max()),
        simpson_evenness=simpson / n,
    )


def simpson_identity_residual(values: Sequence[float]) -> float:
    """Residual of D_com = n * simpson - n / total (zero up to roundoff)."""
    arr = _as_abundances(values)
    stats = community_stats(arr)
    simpson = diversity_indices(arr).simpson
    n = arr.size
    return stats.dominance - (n * simpson - n / stats.total)


# ---------------------------------------------------------------- regression


@dataclass(frozen=True)
class IndexRegression:
    """OLS of community dominance on a diversity index across samples."""

    index: IndexKind
    slope: float
    intercept: float
    correlation: float
    n: int


def regress_dominance_vs_index(
    dominance: Sequence[float], index_values: Sequence[float], which: IndexKind
) -> IndexRegression:
    """Least-squares line dominance = intercept + slope * index.

    Requires at least three samples and non-zero variance in the index.
    Pearson correlation is reported alongside the coefficients because the
    linearity identity makes simpson regressions come out exactly R = 1.
    """
    y = np.asarray(dominance, dtype=float)
    x = np.asarray(index_values, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("dominance and index series must be 1-d and equal length")
    if x.size < 3:
        raise PreconditionError("index regression needs at least 3 samples")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("index regression input must be finite")
    sxx = float(np.sum((x - x.mean()) ** 2))
    # relative guard: a constant column is rarely an exact float zero
    if sxx <= np.finfo(float).eps * float(np.sum(x * x)):
        raise DegenerateRegressionError(f"index {which.value} has zero variance")
    sxy = float(np.sum((x - x.mean()) * (y - y.mean())))
    syy = float(np.sum((y - y.mean()) ** 2))
    slope = sxy / sxx
    intercept = float(y.mean() - slope * x.mean())
    correlation = sxy / math.sqrt(sxx * syy) if syy > 0.0 else math.nan
    return IndexRegression(
        index=which,
        slope=slope,
        intercept=intercept,
        correlation=correlation,
        n=int(x.size),
    )
