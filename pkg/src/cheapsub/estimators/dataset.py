"""Two-interval longitudinal records with explicit missingness.

Schema (one row per subject, in temporal order):

    W0  baseline covariate, real
    A0  baseline treatment, 0/1
    C1  interval-1 censoring indicator, 1 = uncensored
    Y1  interval-1 event indicator, 0/1, missing when censored
    W1  time-varying covariate, real, present only when at risk (C1=1, Y1=0)
    A1  interval-2 treatment, 0/1, present only when at risk
    C2  interval-2 censoring indicator; 0 whenever C1=0, missing after an
        interval-1 event
    Y2  interval-2 event indicator; 1 whenever Y1=1 (the event is
        absorbing), missing when censored in interval 2

Missing cells are NaN in memory and empty fields in CSV.  Missingness is
monotone: once a subject is censored (or the event has occurred) all later
variables are structurally missing, and validation rejects any record that
breaks the pattern.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, fields

import numpy as np

from ..errors import DataError

COLUMNS = ("W0", "A0", "C1", "Y1", "W1", "A1", "C2", "Y2")

_INDICATORS = ("A0", "C1", "Y1", "A1", "C2", "Y2")


def _is01(arr, mask) -> bool:
    vals = arr[mask]
    return bool(np.all((vals == 0.0) | (vals == 1.0)))


def _first_bad(mask) -> int:
    return int(np.flatnonzero(mask)[0])


@dataclass
class LongitudinalDataset:
    W0: np.ndarray
    A0: np.ndarray
    C1: np.ndarray
    Y1: np.ndarray
    W1: np.ndarray
    A1: np.ndarray
    C2: np.ndarray
    Y2: np.ndarray

    def __post_init__(self):
        for f in fields(self):
            setattr(self, f.name,
                    np.ascontiguousarray(getattr(self, f.name), dtype=np.float64))
        lengths = {len(getattr(self, c)) for c in COLUMNS}
        if len(lengths) != 1:
            raise DataError(f"columns have unequal lengths: {sorted(lengths)}")

    def __len__(self) -> int:
        return len(self.W0)

    def columns(self) -> dict[str, np.ndarray]:
        return {c: getattr(self, c) for c in COLUMNS}

    def take_rows(self, indices) -> "LongitudinalDataset":
        return LongitudinalDataset(*(getattr(self, c)[indices] for c in COLUMNS))

    def validate(self) -> "LongitudinalDataset":
        """Check value ranges and monotone missingness; raise DataError
        naming the first offending row otherwise."""
        if len(self) == 0:
            raise DataError("dataset is empty")
        if not np.all(np.isfinite(self.W0)):
            raise DataError("W0 must be present and finite for every record")
        for name in ("A0", "C1"):
            col = getattr(self, name)
            if not (np.all(np.isfinite(col)) and _is01(col, slice(None))):
                raise DataError(f"{name} must be 0 or 1 for every record")

        censored1 = self.C1 == 0.0
        for name in ("Y1", "W1", "A1", "Y2"):
            bad = censored1 & ~np.isnan(getattr(self, name))
            if bad.any():
                raise DataError(f"row {_first_bad(bad)}: {name} must be missing "
                                "when C1=0")
        bad = censored1 & (self.C2 != 0.0)
        if bad.any():
            raise DataError(f"row {_first_bad(bad)}: C2 must be recorded as 0 "
                            "when C1=0")

        uncensored1 = ~censored1
        if np.isnan(self.Y1[uncensored1]).any() or not _is01(self.Y1, uncensored1):
            bad = uncensored1 & (np.isnan(self.Y1) | ~np.isin(self.Y1, (0.0, 1.0)))
            raise DataError(f"row {_first_bad(bad)}: Y1 must be 0 or 1 when C1=1")

        event1 = uncensored1 & (self.Y1 == 1.0)
        for name in ("W1", "A1", "C2"):
            bad = event1 & ~np.isnan(getattr(self, name))
            if bad.any():
                raise DataError(f"row {_first_bad(bad)}: {name} must be missing "
                                "after an interval-1 event")
        bad = event1 & (self.Y2 != 1.0)
        if bad.any():
            raise DataError(f"row {_first_bad(bad)}: Y2 must be 1 after an "
                            "interval-1 event (events are absorbing)")

        at_risk = uncensored1 & (self.Y1 == 0.0)
        if np.isnan(self.W1[at_risk]).any() or not np.all(np.isfinite(self.W1[at_risk])):
            bad = at_risk & ~np.isfinite(self.W1)
            raise DataError(f"row {_first_bad(bad)}: W1 must be present for "
                            "at-risk records")
        for name in ("A1", "C2"):
            col = getattr(self, name)
            bad = at_risk & (np.isnan(col) | ~np.isin(col, (0.0, 1.0)))
            if bad.any():
                raise DataError(f"row {_first_bad(bad)}: {name} must be 0 or 1 "
                                "for at-risk records")

        censored2 = at_risk & (self.C2 == 0.0)
        bad = censored2 & ~np.isnan(self.Y2)
        if bad.any():
            raise DataError(f"row {_first_bad(bad)}: Y2 must be missing when C2=0")
        followed2 = at_risk & (self.C2 == 1.0)
        bad = followed2 & (np.isnan(self.Y2) | ~np.isin(self.Y2, (0.0, 1.0)))
        if bad.any():
            raise DataError(f"row {_first_bad(bad)}: Y2 must be 0 or 1 when C2=1")
        return self

    @classmethod
    def from_columns(cls, columns: dict) -> "LongitudinalDataset":
        missing = [c for c in COLUMNS if c not in columns]
        if missing:
            raise DataError(f"missing columns: {missing}")
        return cls(*(np.asarray(columns[c], dtype=np.float64)
                     for c in COLUMNS)).validate()

    @classmethod
    def from_csv(cls, path) -> "LongitudinalDataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            if tuple(h.strip() for h in header) != COLUMNS:
                raise DataError(f"{path}: expected header {','.join(COLUMNS)}, "
                                f"got {','.join(header)}")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(COLUMNS):
                    raise DataError(f"{path}:{lineno}: expected "
                                    f"{len(COLUMNS)} fields, got {len(row)}")
                try:
                    rows.append([float(v) if v.strip() != "" else np.nan
                                 for v in row])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
        if not rows:
            raise DataError(f"{path}: no data rows")
        arr = np.array(rows, dtype=np.float64)
        return cls(*(arr[:, j] for j in range(len(COLUMNS)))).validate()

    def to_csv(self, path_or_stream) -> None:
        if hasattr(path_or_stream, "write"):
            self._write_csv(path_or_stream)
        else:
            with open(path_or_stream, "w", newline="") as fh:
                self._write_csv(fh)

    def _write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        cols = [getattr(self, c) for c in COLUMNS]
        for i in range(len(self)):
            row = []
            for name, col in zip(COLUMNS, cols):
                v = col[i]
                if np.isnan(v):
                    row.append("")
                elif name in _INDICATORS:
                    row.append(str(int(v)))
                else:
                    row.append(repr(float(v)))
            writer.writerow(row)
