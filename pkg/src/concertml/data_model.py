"""Concert table schema, CSV ingestion, imputation, dummy encoding and splits.

The on-disk interchange format is a UTF-8 CSV with a mandatory header whose
column names match :data:`CONCERT_COLUMNS` exactly (see docs/schema.md).
Missing values are written as an empty cell or the literal ``NA``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CONTINUOUS = "continuous"
DUMMY = "dummy"
ORDINAL = "ordinal"

GENRES = (
    "alternative", "blues", "classic-rock", "classical", "country",
    "electronic", "folk", "hip-hop", "hard-rock", "indie", "jazz", "latin",
    "punk", "pop", "rap", "reggae", "rnb", "rock", "soul", "techno",
)
DAYS = ("Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat")

PRICE_COLUMN = "average_price"
CLASS_COLUMN = "Class"

MISSING_MARKERS = ("", "NA")


@dataclass(frozen=True)
class ColumnSpec:
    """Name, value kind, and numeric-ness of one schema column."""

    name: str
    kind: str  # continuous | dummy | ordinal
    numeric: bool = True


def _concert_columns() -> tuple[ColumnSpec, ...]:
    cols = [
        ColumnSpec(PRICE_COLUMN, CONTINUOUS),
        ColumnSpec("latitude", CONTINUOUS),
        ColumnSpec("longitude", CONTINUOUS),
        ColumnSpec("concert_popularity", CONTINUOUS),
        ColumnSpec("playcount", CONTINUOUS),
        ColumnSpec("Population_Estimate_2017", CONTINUOUS),
        ColumnSpec("market_heat", CONTINUOUS),
        ColumnSpec("Estimated_per_capita_income", CONTINUOUS),
        ColumnSpec("Population_density", CONTINUOUS),
        ColumnSpec(CLASS_COLUMN, ORDINAL),
    ]
    cols += [ColumnSpec(g, DUMMY) for g in GENRES]
    cols += [
        ColumnSpec("genres_num", CONTINUOUS),
        ColumnSpec("venue_concert_count", CONTINUOUS),
        ColumnSpec("venue_type", ORDINAL),
    ]
    cols += [ColumnSpec(d, DUMMY) for d in DAYS]
    return tuple(cols)


CONCERT_SCHEMA: tuple[ColumnSpec, ...] = _concert_columns()
CONCERT_COLUMNS: tuple[str, ...] = tuple(c.name for c in CONCERT_SCHEMA)
COLUMN_KINDS: dict[str, str] = {c.name: c.kind for c in CONCERT_SCHEMA}

# City-level columns are excluded from the location task: the class label is
# derived from them, and latitude/longitude identify the city outright.
CITY_LEVEL_COLUMNS = (
    "latitude", "longitude", "Population_Estimate_2017",
    "Estimated_per_capita_income", "Population_density",
)

REGRESSION_FEATURES: tuple[str, ...] = tuple(
    n for n in CONCERT_COLUMNS if n != PRICE_COLUMN
)
CLASSIFICATION_FEATURES: tuple[str, ...] = tuple(
    n for n in CONCERT_COLUMNS
    if n != CLASS_COLUMN and n not in CITY_LEVEL_COLUMNS
)

assert len(REGRESSION_FEATURES) == 39
assert len(CLASSIFICATION_FEATURES) == 34


class SchemaError(ValueError):
    """Input does not match the declared column schema."""


@dataclass(frozen=True)
class RawTable:
    """Header plus rows of optional text cells; ``None`` marks a missing value."""

    columns: tuple[str, ...]
    cells: tuple[tuple[str | None, ...], ...]

    def __post_init__(self) -> None:
        for i, row in enumerate(self.cells):
            if len(row) != len(self.columns):
                raise SchemaError(
                    f"row {i} has {len(row)} cells, header has {len(self.columns)}"
                )

    @property
    def n_rows(self) -> int:
        return len(self.cells)

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise SchemaError(f"unknown column: {name}") from None

    def column_values(self, name: str) -> tuple[str | None, ...]:
        j = self.column_index(name)
        return tuple(row[j] for row in self.cells)

    def replace_column(self, name: str, values: tuple[str | None, ...]) -> "RawTable":
        j = self.column_index(name)
        rows = tuple(
            row[:j] + (values[i],) + row[j + 1:] for i, row in enumerate(self.cells)
        )
        return RawTable(self.columns, rows)


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense numeric design matrix with per-column names and kind tags."""

    values: np.ndarray
    column_names: tuple[str, ...]
    column_kinds: tuple[str, ...]

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        if vals.shape[1] != len(self.column_names):
            raise ValueError("column_names length does not match matrix width")
        if len(self.column_kinds) != len(self.column_names):
            raise ValueError("column_kinds length does not match column_names")
        if not np.all(np.isfinite(vals)):
            raise ValueError("feature matrix contains missing or non-finite cells")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.column_names.index(name)
        except ValueError:
            raise SchemaError(f"unknown column: {name}") from None
        return self.values[:, j]

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(values, self.column_names, self.column_kinds)

    def select_rows(self, indices: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            self.values[indices], self.column_names, self.column_kinds
        )


def as_matrix(X: "FeatureMatrix | np.ndarray") -> FeatureMatrix:
    """Wrap a bare array as an all-continuous FeatureMatrix."""
    if isinstance(X, FeatureMatrix):
        return X
    X = np.atleast_2d(np.asarray(X, dtype=float))
    names = tuple(f"x{j}" for j in range(X.shape[1]))
    return FeatureMatrix(X, names, (CONTINUOUS,) * X.shape[1])


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class ConcertRecord:
    """One validated concert row (fields mirror the CSV schema)."""

    average_price: float | None
    latitude: float
    longitude: float
    concert_popularity: float
    playcount: float
    population_estimate_2017: float
    market_heat: float
    estimated_per_capita_income: float
    population_density: float
    class_label: int
    genre_flags: tuple[int, ...]  # aligned with GENRES
    genres_num: float
    venue_concert_count: float
    venue_type: int
    day_flags: tuple[int, ...]  # aligned with DAYS

    def __post_init__(self) -> None:
        if self.average_price is not None and not self.average_price > 0:
            raise ValueError("average_price must be positive when present")
        if self.class_label not in (0, 1, 2, 3, 4):
            raise ValueError(f"class_label {self.class_label} outside 0..4")
        if self.venue_type not in (1, 2, 3):
            raise ValueError(f"venue_type {self.venue_type} outside 1..3")
        for flags, what in ((self.genre_flags, "genre"), (self.day_flags, "day")):
            if any(f not in (0, 1) for f in flags):
                raise ValueError(f"{what} flags must be 0/1")
        if sum(self.day_flags) != 1:
            raise ValueError("exactly one day flag must be set")

    @classmethod
    def from_row(cls, table: RawTable, i: int) -> "ConcertRecord":
        row = dict(zip(table.columns, table.cells[i]))

        def num(name: str) -> float:
            cell = row[name]
            if cell is None:
                raise ValueError(f"row {i}: missing value in {name}")
            return float(cell)

        price = row[PRICE_COLUMN]
        return cls(
            average_price=None if price is None else float(price),
            latitude=num("latitude"),
            longitude=num("longitude"),
            concert_popularity=num("concert_popularity"),
            playcount=num("playcount"),
            population_estimate_2017=num("Population_Estimate_2017"),
            market_heat=num("market_heat"),
            estimated_per_capita_income=num("Estimated_per_capita_income"),
            population_density=num("Population_density"),
            class_label=int(num(CLASS_COLUMN)),
            genre_flags=tuple(int(num(g)) for g in GENRES),
            genres_num=num("genres_num"),
            venue_concert_count=num("venue_concert_count"),
            venue_type=int(num("venue_type")),
            day_flags=tuple(int(num(d)) for d in DAYS),
        )


def _normalise_cell(text: str, numeric: bool) -> str | None:
    stripped = text.strip()
    if stripped in MISSING_MARKERS:
        return None
    if numeric:
        try:
            float(stripped)
        except ValueError:
            return None  # unparseable numeric cells become missing, not failures
    return stripped


def load_csv(path: str | Path, schema: tuple[ColumnSpec, ...] = CONCERT_SCHEMA) -> RawTable:
    """Read a schema-conformant CSV snapshot into a RawTable.

    The header must contain every schema column (order-independent); missing
    and unexpected names are listed in the raised SchemaError.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, header row required") from None
        rows = list(reader)

    wanted = [c.name for c in schema]
    missing = [n for n in wanted if n not in header]
    extra = [n for n in header if n not in wanted]
    if missing or extra:
        parts = []
        if missing:
            parts.append("missing columns: " + ", ".join(missing))
        if extra:
            parts.append("unexpected columns: " + ", ".join(extra))
        raise SchemaError(f"{path}: header/schema mismatch ({'; '.join(parts)})")

    order = [header.index(n) for n in wanted]
    numeric = {c.name: c.numeric for c in schema}
    cells = []
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        cells.append(tuple(_normalise_cell(row[j], numeric[wanted[k]]) for k, j in enumerate(order)))
    return RawTable(tuple(wanted), tuple(cells))


def write_csv(table: RawTable, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.columns)
        for row in table.cells:
            writer.writerow(["" if c is None else c for c in row])


def impute_most_frequent(table: RawTable, column: str) -> RawTable:
    """Fill missing cells in one column with its modal observed value.

    Ties break to the smallest value for numeric-looking columns, else to the
    lexicographically first.
    """
    values = table.column_values(column)
    observed = [v for v in values if v is not None]
    if not observed:
        raise ValueError(f"column {column} is entirely missing, no mode exists")
    if len(observed) == len(values):
        return table

    freq: dict[str, int] = {}
    for v in observed:
        freq[v] = freq.get(v, 0) + 1
    top = max(freq.values())
    candidates = [v for v, n in freq.items() if n == top]
    try:
        mode = min(candidates, key=lambda v: (float(v), v))
    except ValueError:
        mode = min(candidates)

    filled = tuple(mode if v is None else v for v in values)
    return table.replace_column(column, filled)


def impute_all(table: RawTable) -> tuple[RawTable, dict[str, int]]:
    """Impute every column that has missing cells; returns per-column fill counts."""
    counts: dict[str, int] = {}
    for name in table.columns:
        missing = sum(1 for v in table.column_values(name) if v is None)
        if missing:
            table = impute_most_frequent(table, name)
            counts[name] = missing
    return table, counts


@dataclass(frozen=True)
class DummyEncoding:
    """Per-column category vocabularies fixed at fit time (sorted order)."""

    vocabularies: dict[str, tuple[str, ...]] = field(default_factory=dict)


def fit_dummies(table: RawTable, categorical_columns: tuple[str, ...]) -> DummyEncoding:
    vocab = {}
    for name in categorical_columns:
        observed = sorted({v for v in table.column_values(name) if v is not None})
        if not observed:
            raise ValueError(f"categorical column {name} has no observed values")
        vocab[name] = tuple(observed)
    return DummyEncoding(vocab)


def apply_dummies(table: RawTable, encoding: DummyEncoding) -> FeatureMatrix:
    """Expand fitted categorical columns to 0/1 indicators; pass the rest through.

    No reference level is dropped. Pass-through columns must be fully numeric
    (impute first); an unseen category raises a SchemaError naming it.
    """
    names: list[str] = []
    kinds: list[str] = []
    cols: list[np.ndarray] = []
    n = table.n_rows

    for name in table.columns:
        if name in encoding.vocabularies:
            vocab = encoding.vocabularies[name]
            values = table.column_values(name)
            for cat in vocab:
                names.append(f"{name}={cat}")
                kinds.append(DUMMY)
                cols.append(np.array([1.0 if v == cat else 0.0 for v in values]))
            for i, v in enumerate(values):
                if v is not None and v not in vocab:
                    raise SchemaError(
                        f"unseen category in column {name}: {v!r} (row {i})"
                    )
        else:
            values = table.column_values(name)
            out = np.empty(n)
            for i, v in enumerate(values):
                if v is None:
                    raise ValueError(
                        f"column {name} has a missing cell at row {i}; impute before encoding"
                    )
                out[i] = float(v)
            names.append(name)
            kinds.append(COLUMN_KINDS.get(name, CONTINUOUS))
            cols.append(out)

    values = np.column_stack(cols) if cols else np.empty((n, 0))
    return FeatureMatrix(values, tuple(names), tuple(kinds))


def encode_dummies(table: RawTable, categorical_columns: tuple[str, ...] = ()) -> FeatureMatrix:
    """Fit vocabularies on ``table`` and encode it in one step."""
    return apply_dummies(table, fit_dummies(table, categorical_columns))


def _task_columns(task: str) -> tuple[tuple[str, ...], str]:
    if task == "price":
        return REGRESSION_FEATURES, PRICE_COLUMN
    if task == "location":
        return CLASSIFICATION_FEATURES, CLASS_COLUMN
    raise ValueError(f"unknown task: {task!r} (expected 'price' or 'location')")


def build_features(table: RawTable, task: str) -> FeatureMatrix:
    """Covariate matrix for one task: 39 columns for price, 34 for location."""
    feature_names, _ = _task_columns(task)
    n = table.n_rows
    cols = []
    for name in feature_names:
        values = table.column_values(name)
        out = np.empty(n)
        for i, v in enumerate(values):
            if v is None:
                raise ValueError(f"column {name} has a missing cell at row {i}")
            out[i] = float(v)
        cols.append(out)
    return FeatureMatrix(
        np.column_stack(cols) if n else np.empty((0, len(feature_names))),
        feature_names,
        tuple(COLUMN_KINDS[n_] for n_ in feature_names),
    )


def build_design_matrix(table: RawTable, task: str) -> tuple[FeatureMatrix, np.ndarray]:
    """Covariates plus the task target (average_price / class label)."""
    _, target = _task_columns(task)
    X = build_features(table, task)
    n = table.n_rows

    raw_target = table.column_values(target)
    y = np.empty(n)
    for i, v in enumerate(raw_target):
        if v is None:
            raise ValueError(f"target column {target} has a missing cell at row {i}")
        y[i] = float(v)
    if task == "price" and np.any(y <= 0):
        bad = int(np.argmax(y <= 0))
        raise ValueError(f"average_price must be positive (row {bad}: {y[bad]})")
    if task == "location":
        if np.any((y < 0) | (y > 4) | (y != np.round(y))):
            raise ValueError("class labels must be integers in 0..4")
        y = y.astype(int)
    return X, y


@dataclass(frozen=True)
class SplitResult:
    x_train: FeatureMatrix
    y_train: np.ndarray
    x_test: FeatureMatrix
    y_test: np.ndarray
    train_indices: np.ndarray
    test_indices: np.ndarray


def train_test_split(X: FeatureMatrix, y: np.ndarray, spec: SplitSpec) -> SplitResult:
    """Seeded uniform-permutation split; train gets floor(M*(1-f)) rows."""
    y = np.asarray(y)
    if X.n_rows != len(y):
        raise ValueError("X row count does not match target length")
    m = X.n_rows
    if m < 2:
        raise ValueError("need at least 2 rows to split")
    rng = np.random.default_rng(spec.seed)
    perm = rng.permutation(m)
    n_train = math.floor(m * (1.0 - spec.test_fraction))
    train_idx, test_idx = perm[:n_train], perm[n_train:]
    return SplitResult(
        x_train=X.select_rows(train_idx),
        y_train=y[train_idx],
        x_test=X.select_rows(test_idx),
        y_test=y[test_idx],
        train_indices=train_idx,
        test_indices=test_idx,
    )
