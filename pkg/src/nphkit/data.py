"""Dataset model, validation, and CSV ingestion."""
from __future__ import annotations

import csv
import enum
import hashlib
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import (
    EmptyDatasetError,
    IngestError,
    NegativeTimeError,
    SingleArmError,
)

CSV_COLUMNS = ("id", "arm", "time", "event", "entry")


class Arm(str, enum.Enum):
    CONTROL = "C"
    EXPERIMENTAL = "E"

    @classmethod
    def coerce(cls, value) -> "Arm":
        if isinstance(value, Arm):
            return value
        text = str(value).strip()
        for arm in cls:
            if text in (arm.value, arm.name, arm.name.capitalize()):
                return arm
        raise ValueError(f"arm must be one of C, E, Control, Experimental; got {value!r}")


@dataclass(frozen=True, slots=True)
class SubjectRecord:
    """One subject: arm, observed time (months from randomization),
    event indicator (False = censored), and calendar entry time
    (months from study start; 0 when unknown)."""

    arm: Arm
    time: float
    event: bool
    entry: float = 0.0


class SurvivalDataset:
    """Column-oriented, immutable collection of :class:`SubjectRecord`.

    Parameters
    ----------
    records : iterable of SubjectRecord

    The array constructor :meth:`from_arrays` is the cheap path used by
    the simulator; both constructors produce identical objects.
    """

    __slots__ = ("time", "event", "is_experimental", "entry")

    def __init__(self, records: Iterable[SubjectRecord]):
        recs = list(records)
        time = np.array([r.time for r in recs], dtype=float)
        event = np.array([r.event for r in recs], dtype=bool)
        is_exp = np.array([Arm.coerce(r.arm) is Arm.EXPERIMENTAL for r in recs], dtype=bool)
        entry = np.array([r.entry for r in recs], dtype=float)
        self._bind(time, event, is_exp, entry)

    def _bind(self, time, event, is_exp, entry) -> None:
        for arr in (time, event, is_exp, entry):
            arr.flags.writeable = False
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "event", event)
        object.__setattr__(self, "is_experimental", is_exp)
        object.__setattr__(self, "entry", entry)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def from_arrays(cls, time, event, arm, entry=None) -> "SurvivalDataset":
        """Build from parallel arrays; ``arm`` holds booleans or 0/1
        integers (truthy = experimental) or the strings "C"/"E"."""
        time = np.ascontiguousarray(time, dtype=float)
        event = np.ascontiguousarray(event, dtype=bool)
        arm = np.asarray(arm)
        if arm.dtype.kind == "b":
            is_exp = arm.copy()
        elif arm.dtype.kind in "iu":
            if not np.isin(arm, (0, 1)).all():
                raise ValueError("integer arm values must be 0 (control) or 1 (experimental)")
            is_exp = arm.astype(bool)
        else:
            is_exp = np.array([Arm.coerce(a) is Arm.EXPERIMENTAL for a in arm], dtype=bool)
        if entry is None:
            entry = np.zeros_like(time)
        else:
            entry = np.ascontiguousarray(entry, dtype=float)
        n = len(time)
        if not (len(event) == len(is_exp) == len(entry) == n):
            raise ValueError("time, event, arm, entry must have equal length")
        obj = cls.__new__(cls)
        obj._bind(time, event, is_exp, entry)
        return obj

    @property
    def n(self) -> int:
        return len(self.time)

    @property
    def n_experimental(self) -> int:
        return int(self.is_experimental.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_experimental

    @property
    def n_events(self) -> int:
        return int(self.event.sum())

    def records(self) -> Iterator[SubjectRecord]:
        for i in range(self.n):
            yield SubjectRecord(
                arm=Arm.EXPERIMENTAL if self.is_experimental[i] else Arm.CONTROL,
                time=float(self.time[i]),
                event=bool(self.event[i]),
                entry=float(self.entry[i]),
            )

    def __len__(self) -> int:
        return self.n


class ValidatedDataset(SurvivalDataset):
    """A :class:`SurvivalDataset` that passed :func:`validate`: records
    sorted by time, finite non-negative times, arm composition known."""

    __slots__ = ("single_arm", "_table_cache")

    @property
    def max_time(self) -> float:
        return float(self.time[-1])

    def require_two_arms(self) -> None:
        if self.single_arm:
            raise SingleArmError("operation needs records in both arms")

    def with_swapped_arms(self) -> "ValidatedDataset":
        """Relabel arms (E becomes C and vice versa); order preserved."""
        return _validated_from_sorted(self.time, self.event, ~self.is_experimental, self.entry)

    def with_inverted_events(self) -> "ValidatedDataset":
        """Flip event flags; used for censoring-distribution estimation."""
        return _validated_from_sorted(self.time, ~self.event, self.is_experimental, self.entry)


def _validated_from_sorted(time, event, is_exp, entry) -> ValidatedDataset:
    obj = ValidatedDataset.__new__(ValidatedDataset)
    obj._bind(time.copy(), event.copy(), is_exp.copy(), entry.copy())
    n_exp = int(is_exp.sum())
    object.__setattr__(obj, "single_arm", n_exp == 0 or n_exp == len(time))
    object.__setattr__(obj, "_table_cache", None)
    return obj


def validate(dataset: SurvivalDataset) -> ValidatedDataset:
    """Check dataset invariants and return a time-sorted copy.

    Raises
    ------
    EmptyDatasetError
        No records at all.
    NegativeTimeError
        Any time or entry that is negative, NaN, or infinite.

    A single-arm dataset is accepted and flagged; only two-sample
    operations reject it later.
    """
    if isinstance(dataset, ValidatedDataset):
        return dataset
    if dataset.n == 0:
        raise EmptyDatasetError("dataset has no records")
    if not np.all(np.isfinite(dataset.time)) or np.any(dataset.time < 0):
        bad = int(np.flatnonzero(~np.isfinite(dataset.time) | (dataset.time < 0))[0])
        raise NegativeTimeError(f"record {bad}: time must be a finite non-negative number")
    if not np.all(np.isfinite(dataset.entry)) or np.any(dataset.entry < 0):
        bad = int(np.flatnonzero(~np.isfinite(dataset.entry) | (dataset.entry < 0))[0])
        raise NegativeTimeError(f"record {bad}: entry must be a finite non-negative number")
    order = np.argsort(dataset.time, kind="stable")
    return _validated_from_sorted(
        dataset.time[order], dataset.event[order], dataset.is_experimental[order], dataset.entry[order]
    )


def arm_subset_arrays(dataset: ValidatedDataset, experimental: bool):
    """Sorted (time, event) arrays of one arm."""
    mask = dataset.is_experimental == experimental
    return dataset.time[mask], dataset.event[mask]


def read_dataset_csv(path) -> SurvivalDataset:
    """Read a dataset from CSV with header ``id,arm,time,event,entry``.

    ``arm`` is C or E, ``event`` is 0 or 1, and the ``entry`` column is
    optional (defaults to 0). Malformed rows raise :class:`IngestError`
    naming the 1-based line number.
    """
    times, events, arms, entries = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError("line 1: missing header") from None
        header = [h.strip().lower() for h in header]
        if header not in (list(CSV_COLUMNS), list(CSV_COLUMNS[:4])):
            raise IngestError(
                f"line 1: header must be {','.join(CSV_COLUMNS)} (entry optional); got {','.join(header)}"
            )
        has_entry = len(header) == 5
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise IngestError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            _, arm_raw, time_raw, event_raw, *rest = row
            try:
                arms.append(Arm.coerce(arm_raw))
            except ValueError as exc:
                raise IngestError(f"line {lineno}: {exc}") from None
            try:
                times.append(float(time_raw))
            except ValueError:
                raise IngestError(f"line {lineno}: time {time_raw!r} is not a number") from None
            if event_raw.strip() not in ("0", "1"):
                raise IngestError(f"line {lineno}: event must be 0 or 1, got {event_raw!r}")
            events.append(event_raw.strip() == "1")
            if has_entry:
                try:
                    entries.append(float(rest[0]) if rest[0].strip() else 0.0)
                except ValueError:
                    raise IngestError(f"line {lineno}: entry {rest[0]!r} is not a number") from None
            else:
                entries.append(0.0)
    if not times:
        raise IngestError("no data rows")
    return SurvivalDataset.from_arrays(
        np.array(times), np.array(events), np.array([a is Arm.EXPERIMENTAL for a in arms]), np.array(entries)
    )


def _write_rows(dataset: SurvivalDataset, handle) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for i in range(dataset.n):
        writer.writerow(
            [
                i + 1,
                "E" if dataset.is_experimental[i] else "C",
                repr(float(dataset.time[i])),
                int(dataset.event[i]),
                repr(float(dataset.entry[i])),
            ]
        )


def write_dataset_csv(dataset: SurvivalDataset, path) -> None:
    """Write a dataset in the ingestion format (deterministic bytes)."""
    with open(path, "w", newline="") as fh:
        _write_rows(dataset, fh)


def dataset_sha256(source) -> str:
    """SHA-256 fingerprint of a dataset file or of a dataset's content.

    Given a path, hashes the file bytes. Given a dataset, hashes its
    canonical serialization, which equals the file hash after
    :func:`write_dataset_csv` of the same (ordered) records.
    """
    digest = hashlib.sha256()
    if isinstance(source, SurvivalDataset):
        buffer = io.StringIO()
        _write_rows(source, buffer)
        digest.update(buffer.getvalue().encode("utf-8"))
        return digest.hexdigest()
    with open(source, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()
