"""Dominance-stability series: relative change of dominance between samples.

Stability at step t is the relative change

    S(t) = (D(t+1) - D(t)) / D(t)

computed on consecutive samples in time order (sampling gaps are ignored;
the index is the sample order, not calendar time).  Steps whose denominator
is within ``eps`` of zero are excluded and surfaced with a reason rather
than silently dropped.

Species dominance can be -inf (absent species).  Before a species stability
series is formed those values are replaced by the sentinel: the minimum
finite species dominance over all species and all samples of the subject.
Replaced entries keep a flag so reports can mark them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import SentinelError
from .ingest import SubjectSeries
from .metrics import SpeciesDominance, community_stats, species_dominances

__all__ = [
    "DominanceRecord",
    "StabilityPoint",
    "ExcludedPoint",
    "StabilitySeries",
    "EPS_DENOMINATOR",
    "dominance_records",
    "sentinel_value",
    "apply_sentinel",
    "community_stability",
    "species_stability",
]

EPS_DENOMINATOR = 1e-9

COMMUNITY_SCOPE = "community"


@dataclass(frozen=True)
class DominanceRecord:
    """Community dominance plus per-species dominance for one sample."""

    sample_id: str
    community: float
    per_species: tuple[SpeciesDominance, ...]


def dominance_records(series: SubjectSeries) -> list[DominanceRecord]:
    """Dominance record for every sample of a subject, in time order."""
    out = []
    for t, sample_id in enumerate(series.sample_ids):
        vector = series.sample_vector(t)
        stats = community_stats(vector)
        out.append(
            DominanceRecord(
                sample_id=sample_id,
                community=stats.dominance,
                per_species=species_dominances(vector, series.species_ids),
            )
        )
    return out


def sentinel_value(records: Sequence[DominanceRecord]) -> float:
    """Minimum finite species dominance across all species and samples."""
    finite = [
        sp.dominance
        for record in records
        for sp in record.per_species
        if math.isfinite(sp.dominance)
    ]
    if not finite:
        raise SentinelError("no finite species dominance value in any sample")
    return min(finite)


def apply_sentinel(records: Sequence[DominanceRecord]) -> list[DominanceRecord]:
    """Replace -inf species dominance with the subject-wide finite minimum.

    Distances stay +inf; only the dominance values are floored.  Idempotent:
    applying twice changes nothing further.
    """
    floor = sentinel_value(records)
    out = []
    for record in records:
        entries = tuple(
            replace(sp, dominance=floor, sentinel_replaced=True)
            if sp.dominance == -math.inf
            else sp
            for sp in record.per_species
        )
        out.append(replace(record, per_species=entries))
    return out


@dataclass(frozen=True)
class StabilityPoint:
    t: int                 # sample index of the step start
    dominance: float       # D(t)
    change_rate: float     # S(t)


@dataclass(frozen=True)
class ExcludedPoint:
    t: int
    dominance: float
    reason: str


@dataclass(frozen=True)
class StabilitySeries:
    """Stability points for one subject and one scope (community or species)."""

    subject_id: str
    scope: str             # COMMUNITY_SCOPE or a species id
    points: tuple[StabilityPoint, ...]
    excluded: tuple[ExcludedPoint, ...] = ()

    @property
    def dominance(self) -> list[float]:
        return [p.dominance for p in self.points]

    @property
    def change_rate(self) -> list[float]:
        return [p.change_rate for p in self.points]


def _stability_points(
    values: Sequence[float], eps: float
) -> tuple[tuple[StabilityPoint, ...], tuple[ExcludedPoint, ...]]:
    points, excluded = [], []
    for t in range(len(values) - 1):
        d_now, d_next = values[t], values[t + 1]
        if not (math.isfinite(d_now) and math.isfinite(d_next)):
            excluded.append(ExcludedPoint(t, d_now, "non-finite dominance"))
            continue
        if abs(d_now) < eps:
            excluded.append(ExcludedPoint(t, d_now, "dominance below eps"))
            continue
        points.append(StabilityPoint(t, d_now, (d_next - d_now) / d_now))
    return tuple(points), tuple(excluded)


def community_stability(
    records: Sequence[DominanceRecord],
    subject_id: str = "",
    eps: float = EPS_DENOMINATOR,
) -> StabilitySeries:
    """Community stability series from consecutive dominance records."""
    values = [record.community for record in records]
    points, excluded = _stability_points(values, eps)
    return StabilitySeries(subject_id, COMMUNITY_SCOPE, points, excluded)


def species_stability(
    records: Sequence[DominanceRecord],
    species_id: str,
    subject_id: str = "",
    eps: float = EPS_DENOMINATOR,
) -> StabilitySeries:
    """Species stability series; records must be sentinel-replaced first."""
    values = []
    for record in records:
        matches = [sp for sp in record.per_species if sp.species_id == species_id]
        if not matches:
            raise KeyError(f"species {species_id!r} not in records")
        sp = matches[0]
        if sp.dominance == -math.inf:
            raise SentinelError(
                f"species {species_id!r} has -inf dominance; apply_sentinel first"
            )
        values.append(sp.dominance)
    points, excluded = _stability_points(values, eps)
    return StabilitySeries(subject_id, species_id, points, excluded)
