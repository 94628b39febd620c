import math

import pytest

from domstab.errors import SentinelError
from domstab.ingest import parse_table, split_subjects
from domstab.stability import (
    EPS_DENOMINATOR,
    apply_sentinel,
    community_stability,
    dominance_records,
    sentinel_value,
    species_stability,
)


def subject_records(text: str):
    (series,) = split_subjects(parse_table(text))
    return series, dominance_records(series)


THREE_SAMPLES = """species_id,400_a,400_b,400_c
OTU1,4,9,2
OTU2,1,3,2
OTU3,0,3,1
"""


def test_records_carry_community_and_species_values():
    series, records = subject_records(THREE_SAMPLES)
    assert [r.sample_id for r in records] == list(series.sample_ids)
    first = records[0]
    assert len(first.per_species) == 3
    ids = [s.species_id for s in first.per_species]
    assert ids == ["OTU1", "OTU2", "OTU3"]
    # absent species in the first sample
    assert first.per_species[2].distance == math.inf
    assert first.per_species[2].dominance == -math.inf


def test_sentinel_is_least_finite_species_dominance():
    _, records = subject_records(THREE_SAMPLES)
    finite = [
        s.dominance
        for r in records
        for s in r.per_species
        if math.isfinite(s.dominance)
    ]
    assert sentinel_value(records) == min(finite)


def test_apply_sentinel_replaces_only_negative_infinities():
    _, records = subject_records(THREE_SAMPLES)
    floor = sentinel_value(records)
    patched = apply_sentinel(records)
    for before, after in zip(records, patched):
        for s_before, s_after in zip(before.per_species, after.per_species):
            if s_before.dominance == -math.inf:
                assert s_after.dominance == floor
                assert s_after.sentinel_replaced
                # the distance stays infinite: only the dominance is floored
                assert s_after.distance == math.inf
            else:
                assert s_after.dominance == s_before.dominance
                assert not s_after.sentinel_replaced


def test_apply_sentinel_is_idempotent():
    _, records = subject_records(THREE_SAMPLES)
    once = apply_sentinel(records)
    twice = apply_sentinel(once)
    assert [
        [(s.dominance, s.sentinel_replaced) for s in r.per_species] for r in once
    ] == [[(s.dominance, s.sentinel_replaced) for s in r.per_species] for r in twice]


def test_sentinel_without_finite_values_raises():
    # single present species gives D_s = D_c - m*/m_s finite, so force the
    # degenerate case through an empty roster stand-in instead
    series, records = subject_records(THREE_SAMPLES)
    stripped = [
        type(r)(sample_id=r.sample_id, community=r.community, per_species=())
        for r in records
    ]
    with pytest.raises(SentinelError):
        sentinel_value(stripped)


def test_community_stability_change_rates():
    _, records = subject_records(THREE_SAMPLES)
    series = community_stability(records, subject_id="400")
    assert series.subject_id == "400"
    dom = [r.community for r in records]
    assert len(series.points) == 2
    for point in series.points:
        expected = (dom[point.t + 1] - dom[point.t]) / dom[point.t]
        assert point.change_rate == pytest.approx(expected, rel=1e-14)
        assert point.dominance == dom[point.t]


def test_stability_reconstruction_identity():
    _, records = subject_records(THREE_SAMPLES)
    series = community_stability(records)
    dom = [r.community for r in records]
    for point in series.points:
        reconstructed = point.dominance * (1.0 + point.change_rate)
        assert reconstructed == pytest.approx(dom[point.t + 1], rel=1e-14)


def test_stability_excludes_near_zero_denominators():
    # middle sample engineered to a perfectly even community: D_c = 1 - 1/m
    # with m=1 gives exactly zero dominance
    text = "species_id,400_a,400_b,400_c\nOTU1,4,1,2\nOTU2,1,1,2\n"
    _, records = subject_records(text)
    assert records[1].community == pytest.approx(0.0, abs=1e-15)
    series = community_stability(records)
    assert [p.t for p in series.points] == [0]
    assert [e.t for e in series.excluded] == [1]
    assert series.excluded[0].reason == "dominance below eps"
    assert EPS_DENOMINATOR == 1e-9


def test_species_stability_uses_sentineled_values():
    _, records = subject_records(THREE_SAMPLES)
    patched = apply_sentinel(records)
    series = species_stability(patched, "OTU3", subject_id="400")
    floor = sentinel_value(records)
    assert series.scope == "OTU3"
    assert series.points[0].dominance == floor


def test_species_stability_rejects_unsentineled_infinities():
    _, records = subject_records(THREE_SAMPLES)
    with pytest.raises(SentinelError):
        species_stability(records, "OTU3")


def test_species_stability_unknown_id():
    _, records = subject_records(THREE_SAMPLES)
    with pytest.raises(KeyError):
        species_stability(apply_sentinel(records), "OTU99")


def test_series_list_properties():
    _, records = subject_records(THREE_SAMPLES)
    series = community_stability(records)
    assert series.dominance == [p.dominance for p in series.points]
    assert series.change_rate == [p.change_rate for p in series.points]
