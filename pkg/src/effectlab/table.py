"""Column-schema'd sample tables.

A :class:`SampleTable` is the exchange format between the generators, the
estimators, and the service layer: a dense float matrix (rows = samples)
plus a per-column schema carrying the column kind (continuous or
categorical) and its role (plain covariate, treatment, or outcome).
Categorical cells hold non-negative class indices stored as floats.
"""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"

ROLE_COVARIATE = "covariate"
ROLE_TREATMENT = "treatment"
ROLE_OUTCOME = "outcome"

_KINDS = (CONTINUOUS, CATEGORICAL)
_ROLES = (ROLE_COVARIATE, ROLE_TREATMENT, ROLE_OUTCOME)


@dataclass(frozen=True)
class Column:
    """Schema entry for one table column."""

    name: str
    kind: str = CONTINUOUS
    categories: int | None = None
    role: str = ROLE_COVARIATE

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ContractError(f"unknown column kind {self.kind!r}")
        if self.role not in _ROLES:
            raise ContractError(f"unknown column role {self.role!r}")
        if self.kind == CATEGORICAL:
            if self.categories is None or self.categories < 2:
                raise ContractError(
                    f"categorical column {self.name!r} needs categories >= 2"
                )
        elif self.categories is not None:
            raise ContractError(
                f"continuous column {self.name!r} must not declare categories"
            )


class SampleTable:
    """Dense numeric table with a column schema.

    Parameters
    ----------
    columns : sequence of Column
        Schema, one entry per data column.
    data : ndarray, shape (n_rows, n_columns)
        Row-major numeric storage. Stored as float64.
    meta : dict, optional
        Free-form provenance (never serialized to CSV).
    """

    def __init__(self, columns: Sequence[Column], data: np.ndarray, meta: dict | None = None, validate: bool = True):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 2:
            raise ContractError("table data must be 2-dimensional")
        if data.shape[1] != len(columns):
            raise ContractError(
                f"data has {data.shape[1]} columns but schema has {len(columns)}"
            )
        names = [c.name for c in columns]
        if len(set(names)) != len(names):
            raise ContractError("duplicate column names")
        self.columns: tuple[Column, ...] = tuple(columns)
        self.data = data
        self.meta = dict(meta) if meta else {}
        self._index = {c.name: i for i, c in enumerate(self.columns)}
        if validate:
            self._validate()

    def _validate(self):
        n_treat = sum(1 for c in self.columns if c.role == ROLE_TREATMENT)
        n_out = sum(1 for c in self.columns if c.role == ROLE_OUTCOME)
        if n_treat > 1 or n_out > 1:
            raise ContractError("at most one treatment and one outcome column allowed")
        if not np.all(np.isfinite(self.data)):
            raise ContractError("table contains non-finite values")
        for i, c in enumerate(self.columns):
            if c.kind == CATEGORICAL:
                col = self.data[:, i]
                if col.size and (
                    np.any(col != np.round(col))
                    or np.any(col < 0)
                    or np.any(col >= c.categories)
                ):
                    raise ContractError(
                        f"column {c.name!r} holds values outside its {c.categories} categories"
                    )

    # ---- basic accessors -------------------------------------------------

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_columns(self) -> int:
        return self.data.shape[1]

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        return self.columns[self.index(name)]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ContractError(f"no column named {name!r}") from None

    def values(self, name: str) -> np.ndarray:
        """1-d value array of one column (a view into the storage)."""
        return self.data[:, self.index(name)]

    def role_column(self, role: str) -> str | None:
        """Name of the unique column with the given role, or None."""
        for c in self.columns:
            if c.role == role:
                return c.name
        return None

    # ---- derived tables --------------------------------------------------

    def select(self, names: Iterable[str]) -> "SampleTable":
        names = list(names)
        idx = [self.index(n) for n in names]
        return SampleTable([self.columns[i] for i in idx], self.data[:, idx].copy(), validate=False)

    def take_rows(self, rows) -> "SampleTable":
        rows = np.asarray(rows)
        return SampleTable(self.columns, self.data[rows].copy(), validate=False)

    def with_roles(self, **roles: str) -> "SampleTable":
        """Return a copy with the named columns reassigned to new roles.

        ``with_roles(T="treatment", Y="outcome")`` marks T/Y; any column not
        named keeps its role.
        """
        cols = []
        for c in self.columns:
            if c.name in roles:
                cols.append(replace(c, role=roles[c.name]))
            else:
                cols.append(c)
        missing = set(roles) - {c.name for c in self.columns}
        if missing:
            raise ContractError(f"no such columns: {sorted(missing)}")
        return SampleTable(cols, self.data.copy(), meta=self.meta)

    def with_kind(self, name: str, kind: str, categories: int | None = None) -> "SampleTable":
        cols = list(self.columns)
        i = self.index(name)
        if kind == CATEGORICAL and categories is None:
            col = self.data[:, i]
            categories = max(2, int(col.max()) + 1) if col.size else 2
        cols[i] = replace(cols[i], kind=kind, categories=categories if kind == CATEGORICAL else None)
        return SampleTable(cols, self.data.copy(), meta=self.meta)

    def append_columns(self, columns: Sequence[Column], data: np.ndarray) -> "SampleTable":
        data = np.asarray(data, dtype=np.float64)
        if data.ndim == 1:
            data = data[:, None]
        return SampleTable(
            list(self.columns) + list(columns),
            np.hstack([self.data, data]),
            meta=self.meta,
        )

    # ---- CSV -------------------------------------------------------------

    def to_csv(self, path=None) -> str | None:
        """Write the table as CSV with a header row.

        Continuous cells use shortest round-trip float formatting;
        categorical cells are written as bare non-negative integers.
        Returns the CSV text when ``path`` is None.
        """
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.column_names)
        cat = [c.kind == CATEGORICAL for c in self.columns]
        for row in self.data:
            writer.writerow(
                [str(int(v)) if is_cat else repr(float(v)) for v, is_cat in zip(row, cat)]
            )
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, source, kinds: dict[str, str] | None = None,
                 roles: dict[str, str] | None = None) -> "SampleTable":
        """Parse a CSV with a header row into a table.

        Column kinds are taken from ``kinds`` when given, otherwise inferred
        via :func:`infer_column_kind`. Parse failures raise
        :class:`~effectlab.errors.ContractError` with the row/column location.
        """
        if hasattr(source, "read"):
            text = source.read()
        elif isinstance(source, os.PathLike) or (
            isinstance(source, str) and "\n" not in source and source.endswith(".csv")
        ):
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        else:
            text = source
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise ContractError("empty CSV: no header row") from None
        header = [h.strip() for h in header]
        if any(not h for h in header):
            raise ContractError("blank column name in CSV header")
        rows = []
        for r, raw in enumerate(reader):
            if not raw or (len(raw) == 1 and raw[0].strip() == ""):
                continue
            if len(raw) != len(header):
                raise ContractError(
                    f"row {r + 2}: expected {len(header)} cells, got {len(raw)}"
                )
            parsed = []
            for c, cell in enumerate(raw):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ContractError(
                        f"row {r + 2}, column {header[c]!r}: cannot parse {cell!r} as a number"
                    ) from None
            rows.append(parsed)
        if not rows:
            raise ContractError("CSV has a header but no data rows")
        data = np.asarray(rows, dtype=np.float64)
        kinds = kinds or {}
        roles = roles or {}
        columns = []
        for i, name in enumerate(header):
            kind = kinds.get(name)
            if kind is None:
                kind, categories = infer_column_kind(data[:, i])
            elif kind == CATEGORICAL:
                categories = max(2, int(data[:, i].max()) + 1)
            else:
                categories = None
            columns.append(
                Column(name, kind, categories, roles.get(name, ROLE_COVARIATE))
            )
        return cls(columns, data)


def infer_column_kind(values: np.ndarray, max_categories: int = 10) -> tuple[str, int | None]:
    """Heuristic column-kind inference for ingested data.

    Integer-valued, non-negative columns with at most ``max_categories``
    distinct values are treated as categorical (class indices); everything
    else is continuous.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return CONTINUOUS, None
    if np.all(values == np.round(values)) and values.min() >= 0:
        if np.unique(values).size <= max_categories:
            return CATEGORICAL, max(2, int(values.max()) + 1)
    return CONTINUOUS, None
