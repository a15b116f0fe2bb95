"""Binary panel data and its long-format CSV representation.

The CSV has one row per (individual, wave)::

    id,t,d,x1,x2
    a,1,0,0.31,-1.2
    a,2,1,0.75,-0.4

Waves are numbered 1..T with no gaps, every individual has the same T, and
covariate columns (if any) are named x1..xk.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .errors import DuplicateRow, NonBinaryOutcome, RaggedPanel, SchemaError, WrongHorizon

SUPPORTED_HORIZONS = (2, 3)


@dataclass(frozen=True, eq=False)
class PanelData:
    """Outcomes ``d[i, t]`` and optional covariates ``x[i, t, :]``."""

    outcomes: np.ndarray
    covariates: np.ndarray | None = None
    ids: tuple[str, ...] | None = None

    def __post_init__(self):
        d = np.asarray(self.outcomes)
        if d.ndim != 2:
            raise SchemaError(f"outcomes must be an n x T matrix, got shape {d.shape}")
        if d.shape[1] not in SUPPORTED_HORIZONS:
            raise WrongHorizon(f"horizon T={d.shape[1]} is not supported; expected one of {SUPPORTED_HORIZONS}")
        if d.size and not np.isin(d, (0, 1)).all():
            raise NonBinaryOutcome("outcomes must be 0 or 1")
        object.__setattr__(self, "outcomes", d.astype(np.int8))
        if self.covariates is not None:
            x = np.asarray(self.covariates, dtype=float)
            if x.ndim == 2:
                x = x[:, :, None]
            if x.ndim != 3 or x.shape[:2] != d.shape:
                raise SchemaError(f"covariates must have shape (n, T, k) = {d.shape} + (k,), got {x.shape}")
            if x.shape[2] == 0:
                x = None
            object.__setattr__(self, "covariates", x)
        if self.ids is not None:
            ids = tuple(str(i) for i in self.ids)
            if len(ids) != d.shape[0]:
                raise SchemaError(f"{len(ids)} ids for {d.shape[0]} individuals")
            object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]

    @property
    def T(self) -> int:
        return self.outcomes.shape[1]

    @property
    def k(self) -> int:
        return 0 if self.covariates is None else self.covariates.shape[2]

    def row_ids(self) -> tuple[str, ...]:
        return self.ids if self.ids is not None else tuple(str(i + 1) for i in range(self.n))

    def pattern_counts(self) -> dict[tuple[int, ...], int]:
        """Number of individuals with each observed outcome sequence."""
        patterns, counts = np.unique(self.outcomes, axis=0, return_counts=True)
        return {tuple(int(v) for v in p): int(c) for p, c in zip(patterns, counts)}

    @classmethod
    def from_pattern_counts(cls, counts: dict[Iterable[int], int]) -> "PanelData":
        """Expand pattern counts into an individual-level panel (no covariates)."""
        rows = [tuple(p) for p, c in counts.items() for _ in range(int(c))]
        if not rows:
            horizon = len(next(iter(counts))) if counts else 2
            return cls(np.zeros((0, horizon), dtype=np.int8))
        return cls(np.array(rows, dtype=np.int8))


def _header(fields: list[str]) -> int:
    fields = [f.strip() for f in fields]
    if fields[:3] != ["id", "t", "d"]:
        raise SchemaError(f"header must start with id,t,d; got {','.join(fields)}")
    extra = fields[3:]
    expected = [f"x{j + 1}" for j in range(len(extra))]
    if extra != expected:
        raise SchemaError(f"covariate columns must be named {','.join(expected) or '(none)'}; got {','.join(extra)}")
    return len(extra)


def parse_panel_csv(stream: IO[str]) -> PanelData:
    """Read and validate a long-format panel.

    Raises
    ------
    SchemaError
        Bad header, wrong column count or unparseable numbers.
    NonBinaryOutcome
        An outcome other than 0 or 1 (the message names the line).
    RaggedPanel
        Missing waves, or individuals observed for different horizons.
    DuplicateRow
        The same (id, t) appears twice.
    """
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty input: missing header id,t,d[,x1..xk]") from None
    k = _header(header)

    records: dict[str, dict[int, tuple[int, list[float]]]] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 3 + k:
            raise SchemaError(f"line {line}: expected {3 + k} fields, got {len(row)}")
        ident, t_raw, d_raw = (c.strip() for c in row[:3])
        if not ident:
            raise SchemaError(f"line {line}: empty id")
        try:
            t = int(t_raw)
        except ValueError:
            raise SchemaError(f"line {line}: wave t={t_raw!r} is not an integer") from None
        try:
            d = int(d_raw)
        except ValueError:
            raise SchemaError(f"line {line}: outcome d={d_raw!r} is not an integer") from None
        if d not in (0, 1):
            raise NonBinaryOutcome(f"line {line}: outcome d={d} is not 0 or 1")
        try:
            x = [float(c) for c in row[3:]]
        except ValueError:
            raise SchemaError(f"line {line}: non-numeric covariate in {row[3:]}") from None
        if not all(math.isfinite(v) for v in x):
            raise SchemaError(f"line {line}: covariates must be finite")
        waves = records.setdefault(ident, {})
        if t in waves:
            raise DuplicateRow(f"line {line}: duplicate row for id={ident!r}, t={t}")
        waves[t] = (d, x)

    if not records:
        raise SchemaError("panel has no rows")
    horizon = None
    for ident, waves in records.items():
        observed = sorted(waves)
        if observed != list(range(1, len(observed) + 1)):
            raise RaggedPanel(f"id={ident!r}: waves {observed} are not 1..T contiguous")
        if horizon is None:
            horizon = len(observed)
        elif len(observed) != horizon:
            raise RaggedPanel(f"id={ident!r}: {len(observed)} waves, others have {horizon}")

    ids = tuple(records)
    d = np.array([[records[i][t][0] for t in range(1, horizon + 1)] for i in ids], dtype=np.int8)
    x = None
    if k:
        x = np.array([[records[i][t][1] for t in range(1, horizon + 1)] for i in ids], dtype=float)
    return PanelData(d, x, ids)


def read_panel_csv(path) -> PanelData:
    with open(path, newline="") as fh:
        return parse_panel_csv(fh)


def write_panel_csv(panel: PanelData, stream: IO[str]) -> None:
    """Write ``panel`` in long format; floats use ``repr`` so nothing is lost."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["id", "t", "d"] + [f"x{j + 1}" for j in range(panel.k)])
    for i, ident in enumerate(panel.row_ids()):
        for t in range(panel.T):
            row = [ident, t + 1, int(panel.outcomes[i, t])]
            if panel.k:
                row += [repr(float(v)) for v in panel.covariates[i, t]]
            writer.writerow(row)


def panel_to_csv_text(panel: PanelData) -> str:
    buf = io.StringIO()
    write_panel_csv(panel, buf)
    return buf.getvalue()
