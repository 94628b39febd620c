"""Read species-by-sample count tables and split them into subject series.

Input layout: a delimited text table whose header row names the samples and
whose first column names the species.  Sample ids follow a configurable rule,
by default ``<subject><sep><token>`` with sep "_"; a 6-digit token is read as
MMDDYY and ordered as YYMMDD, anything else is ordered lexicographically.
Ties keep the original column order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Iterable, TextIO

import numpy as np

from .errors import (
    DuplicateIdError,
    EmptyRosterError,
    IdRuleError,
    ParseError,
)

__all__ = [
    "TableFormat",
    "AbundanceTable",
    "SampleIdRule",
    "SubjectSeries",
    "parse_table",
    "emit_table",
    "split_subjects",
    "filter_low_reads",
]

DEFAULT_MIN_TOTAL_READS = 10


@dataclass(frozen=True)
class TableFormat:
    """Delimiter policy for :func:`parse_table`.  None means auto-detect."""

    delimiter: str | None = None


@dataclass(frozen=True, eq=False)
class AbundanceTable:
    """Whole input table: species x samples count matrix with both id axes."""

    species_ids: tuple[str, ...]
    sample_ids: tuple[str, ...]
    counts: np.ndarray  # shape (len(species_ids), len(sample_ids)), float

    def __post_init__(self):
        if self.counts.shape != (len(self.species_ids), len(self.sample_ids)):
            raise ValueError("counts shape does not match id axes")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, AbundanceTable):
            return NotImplemented
        return (
            self.species_ids == other.species_ids
            and self.sample_ids == other.sample_ids
            and np.array_equal(self.counts, other.counts)
        )


def _detect_delimiter(header_line: str) -> str:
    return "\t" if "\t" in header_line else ","


def parse_table(stream: str | TextIO, fmt: TableFormat = TableFormat()) -> AbundanceTable:
    """Parse a delimited species-by-sample table.

    Raises ParseError for structural problems and bad cells (carrying the
    offending 1-based row number), DuplicateIdError for repeated ids.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    text = stream.read()
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty input", row=0)
    delimiter = fmt.delimiter or _detect_delimiter(lines[0])
    rows = list(csv.reader(lines, delimiter=delimiter))
    header = rows[0]
    if len(header) < 2:
        raise ParseError("header must name at least one sample", row=0)
    sample_ids = tuple(cell.strip() for cell in header[1:])
    if len(set(sample_ids)) != len(sample_ids):
        raise DuplicateIdError("duplicate sample id in header")

    species_ids: list[str] = []
    data: list[list[float]] = []
    for rownum, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # blank line
        if len(row) != len(header):
            raise ParseError(
                f"row {rownum} has {len(row)} fields, expected {len(header)}",
                row=rownum,
            )
        species_ids.append(row[0].strip())
        values = []
        for colnum, cell in enumerate(row[1:], start=1):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"non-numeric count at row {rownum}, column {colnum}: {cell!r}",
                    row=rownum,
                ) from None
            if not np.isfinite(value) or value < 0:
                raise ParseError(
                    f"negative or non-finite count at row {rownum}, column {colnum}",
                    row=rownum,
                )
            values.append(value)
        data.append(values)
    if not data:
        raise ParseError("no species rows", row=1)
    if len(set(species_ids)) != len(species_ids):
        raise DuplicateIdError("duplicate species id")
    counts = np.array(data, dtype=float)
    return AbundanceTable(tuple(species_ids), sample_ids, counts)


def emit_table(table: AbundanceTable, delimiter: str = ",") -> str:
    """Serialize a table back to text.  Round-trips through parse_table."""
    out = io.StringIO()
    writer = csv.writer(out, delimiter=delimiter, lineterminator="\n")
    writer.writerow(["species_id", *table.sample_ids])
    for i, sid in enumerate(table.species_ids):
        writer.writerow([sid, *(_fmt_count(v) for v in table.counts[i])])
    return out.getvalue()


def _fmt_count(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


@dataclass(frozen=True)
class SampleIdRule:
    """How sample ids decompose into subject and time token.

    The token after the last ``separator`` is the time token; everything
    before it is the subject id.  A 6-digit token is treated as MMDDYY and
    sorted as YYMMDD, any other token sorts lexicographically.
    """

    separator: str = "_"

    def parse(self, sample_id: str) -> tuple[str, str]:
        if self.separator not in sample_id:
            raise IdRuleError(
                f"sample id {sample_id!r} has no {self.separator!r} separator"
            )
        subject, _, token = sample_id.rpartition(self.separator)
        if not subject or not token:
            raise IdRuleError(f"sample id {sample_id!r} splits into an empty part")
        return subject, token

    def sort_key(self, token: str) -> str:
        if len(token) == 6 and token.isdigit():
            return token[4:6] + token[0:2] + token[2:4]  # MMDDYY -> YYMMDD
        return token


@dataclass(frozen=True)
class SubjectSeries:
    """All samples of one subject, time-ordered, on a fixed species roster.

    The roster is the union of species observed (non-zero) in any of the
    subject's samples; zeros are retained at the samples where a roster
    species is absent so the community size n stays constant over time.
    """

    subject_id: str
    species_ids: tuple[str, ...]
    sample_ids: tuple[str, ...]
    counts: np.ndarray  # shape (roster, T)
    dropped_species: tuple[str, ...] = field(default_factory=tuple)

    @property
    def n_samples(self) -> int:
        return len(self.sample_ids)

    @property
    def too_short(self) -> bool:
        """True when fewer than two samples exist; no stability series then."""
        return self.n_samples < 2

    def sample_vector(self, t: int) -> np.ndarray:
        return self.counts[:, t]


def split_subjects(
    table: AbundanceTable, rule: SampleIdRule = SampleIdRule()
) -> list[SubjectSeries]:
    """Group samples by subject and time-order them.

    Subjects come back sorted by id; sample order within a subject is by the
    rule's sort key with the original column order breaking ties.
    """
    parsed = [rule.parse(sid) for sid in table.sample_ids]
    subjects = sorted({subject for subject, _ in parsed})
    out = []
    for subject in subjects:
        columns = [i for i, (s, _) in enumerate(parsed) if s == subject]
        columns.sort(key=lambda i: (rule.sort_key(parsed[i][1]), i))
        block = table.counts[:, columns]
        roster = [i for i in range(len(table.species_ids)) if block[i].any()]
        absent = tuple(
            table.species_ids[i] for i in range(len(table.species_ids)) if i not in set(roster)
        )
        out.append(
            SubjectSeries(
                subject_id=subject,
                species_ids=tuple(table.species_ids[i] for i in roster),
                sample_ids=tuple(table.sample_ids[i] for i in columns),
                counts=block[roster, :].copy(),
                dropped_species=absent,
            )
        )
    return out


def filter_low_reads(
    series: SubjectSeries, min_total: float = DEFAULT_MIN_TOTAL_READS
) -> SubjectSeries:
    """Drop roster species whose reads summed over the subject fall below
    ``min_total``.  The dropped ids are recorded on the returned series."""
    totals = series.counts.sum(axis=1)
    keep = [i for i, tot in enumerate(totals) if tot >= min_total]
    if not keep:
        raise EmptyRosterError(
            f"subject {series.subject_id}: no species with >= {min_total} reads"
        )
    dropped = tuple(
        series.species_ids[i] for i in range(len(series.species_ids)) if i not in set(keep)
    )
    return replace(
        series,
        species_ids=tuple(series.species_ids[i] for i in keep),
        counts=series.counts[keep, :].copy(),
        dropped_species=series.dropped_species + dropped,
    )
