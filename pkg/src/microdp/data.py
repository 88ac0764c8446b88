"""Tabular data model: attribute schemas, bounded domains, CSV ingestion.

Datasets are column oriented and immutable. Numeric columns are float64
arrays with a closed domain [lower, upper]; categorical columns are label
tuples whose domain is a taxonomy. All value-level invariants are
enforced when a dataset is loaded from CSV.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .taxonomy import Taxonomy, TaxonomyError, load_taxonomy

NUMERIC = "numeric"
CATEGORICAL = "categorical"
DEFAULT_BOUND_FACTOR = 1.5
_NUMERIC_FORMAT = "{:.6f}"


class SchemaError(ValueError):
    """Malformed schema, schema file, or domain declaration."""


class DataError(ValueError):
    """CSV contents that violate the schema contract."""


@dataclass(frozen=True)
class AttributeSchema:
    """Declaration of one attribute: kind plus its domain.

    Numeric attributes need finite bounds with lower < upper before they
    can back a dataset; bounds may instead be inferred at load time from
    `bound_factor` (domain [0, factor * max]). Categorical attributes
    reference a taxonomy by name.
    """

    name: str
    kind: str
    lower: float | None = None
    upper: float | None = None
    taxonomy_ref: str | None = None
    bound_factor: float | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("attribute name must be non-empty")
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == NUMERIC:
            if self.taxonomy_ref is not None:
                raise SchemaError(f"attribute {self.name!r}: numeric attributes take no taxonomy")
            if (self.lower is None) != (self.upper is None):
                raise SchemaError(f"attribute {self.name!r}: give both bounds or neither")
            if self.lower is not None and self.upper is not None:
                if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
                    raise SchemaError(f"attribute {self.name!r}: bounds must be finite")
                if not self.lower < self.upper:
                    raise SchemaError(
                        f"attribute {self.name!r}: lower {self.lower} must be < upper {self.upper}"
                    )
            if self.bound_factor is not None and self.bound_factor <= 0:
                raise SchemaError(f"attribute {self.name!r}: bound_factor must be positive")
        else:
            if self.lower is not None or self.upper is not None or self.bound_factor is not None:
                raise SchemaError(f"attribute {self.name!r}: categorical attributes take no bounds")
            if not self.taxonomy_ref:
                raise SchemaError(f"attribute {self.name!r}: categorical attributes need a taxonomy")

    @property
    def is_resolved(self) -> bool:
        """True once the domain is concrete (bounds known, or categorical)."""
        return self.kind == CATEGORICAL or self.lower is not None

    @property
    def sensitivity(self) -> float:
        """Width of the domain: upper - lower for numeric, 1 for categorical."""
        if self.kind == CATEGORICAL:
            return 1.0
        if not self.is_resolved:
            raise SchemaError(f"attribute {self.name!r}: bounds not resolved yet")
        return float(self.upper) - float(self.lower)


@dataclass(frozen=True)
class Schema:
    """Ordered attribute declarations plus the taxonomies they reference."""

    attributes: tuple[AttributeSchema, ...]
    taxonomies: Mapping[str, Taxonomy] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.taxonomies is None:
            object.__setattr__(self, "taxonomies", {})
        names = [a.name for a in self.attributes]
        if len(names) != len(set(names)):
            raise SchemaError("duplicate attribute names")
        for attr in self.attributes:
            if attr.kind == CATEGORICAL and attr.taxonomy_ref not in self.taxonomies:
                raise SchemaError(
                    f"attribute {attr.name!r}: taxonomy {attr.taxonomy_ref!r} is not loaded"
                )

    def __iter__(self):
        return iter(self.attributes)

    def __len__(self) -> int:
        return len(self.attributes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def attribute(self, name: str) -> AttributeSchema:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        raise SchemaError(f"no attribute named {name!r}")

    def taxonomy_for(self, name: str) -> Taxonomy:
        attr = self.attribute(name)
        if attr.kind != CATEGORICAL:
            raise SchemaError(f"attribute {name!r} is not categorical")
        return self.taxonomies[attr.taxonomy_ref]

    def subset(self, names: Sequence[str]) -> Schema:
        """Schema restricted to `names`, in the order given."""
        attrs = tuple(self.attribute(n) for n in names)
        refs = {a.taxonomy_ref for a in attrs if a.taxonomy_ref}
        taxes = {ref: tax for ref, tax in self.taxonomies.items() if ref in refs}
        return Schema(attrs, taxes)


def load_schema(source: str | Path) -> Schema:
    """Read a schema file: one INI section per attribute.

    Recognized keys are `kind`, `lower`, `upper`, `taxonomy` (a path
    relative to the schema file) and `bound_factor`. Section order fixes
    the attribute order.
    """
    path = Path(source)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with path.open(encoding="utf-8") as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as exc:
        raise SchemaError(f"cannot read schema {path}: {exc}") from exc
    attributes: list[AttributeSchema] = []
    taxonomies: dict[str, Taxonomy] = {}
    for section in parser.sections():
        fields = dict(parser.items(section))
        unknown = set(fields) - {"kind", "lower", "upper", "taxonomy", "bound_factor"}
        if unknown:
            raise SchemaError(f"attribute {section!r}: unknown keys {sorted(unknown)}")
        kind = fields.get("kind", "")
        lower = upper = factor = None
        ref = fields.get("taxonomy")
        try:
            if "lower" in fields:
                lower = float(fields["lower"])
            if "upper" in fields:
                upper = float(fields["upper"])
            if "bound_factor" in fields:
                factor = float(fields["bound_factor"])
        except ValueError as exc:
            raise SchemaError(f"attribute {section!r}: {exc}") from exc
        attributes.append(
            AttributeSchema(
                name=section, kind=kind, lower=lower, upper=upper,
                taxonomy_ref=ref, bound_factor=factor,
            )
        )
        if ref is not None and ref not in taxonomies:
            tax_path = Path(ref)
            if not tax_path.is_absolute():
                tax_path = path.parent / tax_path
            try:
                taxonomies[ref] = load_taxonomy(tax_path)
            except (OSError, TaxonomyError) as exc:
                raise SchemaError(f"attribute {section!r}: taxonomy {ref!r}: {exc}") from exc
    if not attributes:
        raise SchemaError(f"schema {path} declares no attributes")
    return Schema(tuple(attributes), taxonomies)


def infer_numeric_bounds(column: Sequence[float] | np.ndarray, factor: float) -> tuple[float, float]:
    """Domain for a non-negative column: (0, factor * max).

    Raises if the column is empty, holds negative values (explicit bounds
    are required then), or would get a degenerate upper bound of zero.
    """
    values = np.asarray(column, dtype=float)
    if values.size == 0:
        raise SchemaError("cannot infer bounds from an empty column")
    if factor <= 0:
        raise SchemaError("bound factor must be positive")
    low = float(values.min())
    if low < 0:
        raise SchemaError("negative values require explicit bounds")
    upper = factor * float(values.max())
    if upper <= 0.0:
        raise SchemaError("degenerate domain: inferred upper bound is 0")
    return 0.0, upper


class Dataset:
    """Immutable column-oriented table tied to a resolved schema."""

    __slots__ = ("schema", "columns")

    def __init__(self, schema: Schema, columns: Sequence[np.ndarray | tuple]) -> None:
        if len(columns) != len(schema):
            raise DataError(f"expected {len(schema)} columns, got {len(columns)}")
        sizes = set()
        stored: list[np.ndarray | tuple] = []
        for attr, col in zip(schema, columns):
            if not attr.is_resolved:
                raise SchemaError(f"attribute {attr.name!r}: bounds not resolved")
            if attr.kind == NUMERIC:
                arr = np.array(col, dtype=float)
                arr.flags.writeable = False
                stored.append(arr)
                sizes.add(arr.shape[0] if arr.ndim == 1 else -1)
            else:
                vals = tuple(str(v) for v in col)
                stored.append(vals)
                sizes.add(len(vals))
        if len(sizes) > 1 or -1 in sizes:
            raise DataError("columns must be one-dimensional and equally long")
        self.schema = schema
        self.columns = tuple(stored)

    @property
    def n(self) -> int:
        if not self.columns:
            return 0
        first = self.columns[0]
        return len(first)

    @property
    def m(self) -> int:
        return len(self.schema)

    def column(self, name: str) -> np.ndarray | tuple:
        for attr, col in zip(self.schema, self.columns):
            if attr.name == name:
                return col
        raise DataError(f"no column named {name!r}")

    def record(self, index: int) -> tuple:
        return tuple(col[index] for col in self.columns)

    def records(self) -> Iterable[tuple]:
        return (self.record(i) for i in range(self.n))

    def with_columns(self, columns: Sequence) -> Dataset:
        """Same schema, new contents. Used by release mechanisms."""
        return Dataset(self.schema, columns)

    def replace_record(self, index: int, values: Sequence) -> Dataset:
        if not 0 <= index < self.n:
            raise DataError(f"record index {index} out of range")
        if len(values) != self.m:
            raise DataError(f"expected {self.m} values, got {len(values)}")
        new_cols = []
        for attr, col, value in zip(self.schema, self.columns, values):
            if attr.kind == NUMERIC:
                arr = np.array(col)
                arr[index] = float(value)
                new_cols.append(arr)
            else:
                vals = list(col)
                vals[index] = str(value)
                new_cols.append(tuple(vals))
        return Dataset(self.schema, new_cols)

    def subset(self, names: Sequence[str]) -> Dataset:
        sub = self.schema.subset(names)
        return Dataset(sub, [self.column(n) for n in names])


@dataclass(frozen=True)
class NeighborPair:
    """Two datasets differing in exactly one record, for DP probes."""

    base: Dataset
    modified: Dataset
    changed_index: int

    def __post_init__(self) -> None:
        if self.base.schema is not self.modified.schema and self.base.schema != self.modified.schema:
            raise DataError("neighbor datasets must share a schema")
        if self.base.n != self.modified.n:
            raise DataError("neighbor datasets must have the same record count")
        differing = [
            i for i in range(self.base.n)
            if self.base.record(i) != self.modified.record(i)
        ]
        if differing != [self.changed_index]:
            raise DataError(
                f"datasets must differ exactly at record {self.changed_index}, differ at {differing}"
            )


def neighbor_pair(data: Dataset, index: int, record: Sequence) -> NeighborPair:
    """Build a NeighborPair by swapping one record for `record`."""
    modified = data.replace_record(index, record)
    return NeighborPair(base=data, modified=modified, changed_index=index)


def _read_text(source: str | Path | bytes | IO) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    text = source.read()
    if isinstance(text, bytes):
        return text.decode("utf-8")
    return text


def load_dataset(csv_source: str | Path | bytes | IO, schema: Schema) -> Dataset:
    """Parse and validate a CSV against `schema`.

    The file needs a header row naming every schema attribute (extra
    columns are ignored). Values are validated eagerly: numeric cells
    must parse, be finite and lie inside the attribute domain; labels
    must be taxonomy nodes; empty cells are rejected. Numeric attributes
    without explicit bounds get them inferred from the column.
    """
    text = _read_text(csv_source)
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DataError("empty CSV: missing header row")
    header = rows[0]
    positions: dict[str, int] = {}
    for attr in schema:
        if attr.name not in header:
            raise DataError(f"column {attr.name!r} missing from CSV header")
        positions[attr.name] = header.index(attr.name)
    raw: dict[str, list[str]] = {name: [] for name in schema.names}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"row {lineno}: expected {len(header)} cells, got {len(row)}")
        for name, pos in positions.items():
            raw[name].append(row[pos])

    columns: list[np.ndarray | tuple] = []
    resolved: list[AttributeSchema] = []
    for attr in schema:
        cells = raw[attr.name]
        if attr.kind == NUMERIC:
            values = np.empty(len(cells), dtype=float)
            for i, cell in enumerate(cells):
                lineno = i + 2
                if cell.strip() == "":
                    raise DataError(f"row {lineno}, column {attr.name!r}: missing value")
                try:
                    values[i] = float(cell)
                except ValueError:
                    raise DataError(
                        f"row {lineno}, column {attr.name!r}: cannot parse {cell!r} as a number"
                    ) from None
                if not math.isfinite(values[i]):
                    raise DataError(f"row {lineno}, column {attr.name!r}: non-finite value")
            if attr.is_resolved:
                final = attr
            else:
                factor = attr.bound_factor if attr.bound_factor is not None else DEFAULT_BOUND_FACTOR
                try:
                    low, high = infer_numeric_bounds(values, factor)
                except SchemaError as exc:
                    raise SchemaError(f"attribute {attr.name!r}: {exc}") from None
                final = replace(attr, lower=low, upper=high)
            bad = np.flatnonzero((values < final.lower) | (values > final.upper))
            if bad.size:
                i = int(bad[0])
                raise DataError(
                    f"row {i + 2}, column {attr.name!r}: value {values[i]} outside "
                    f"[{final.lower}, {final.upper}]"
                )
            columns.append(values)
            resolved.append(final)
        else:
            tax = schema.taxonomies[attr.taxonomy_ref]
            for i, cell in enumerate(cells):
                if cell.strip() == "":
                    raise DataError(f"row {i + 2}, column {attr.name!r}: missing value")
                if cell not in tax:
                    raise DataError(
                        f"row {i + 2}, column {attr.name!r}: label {cell!r} not in taxonomy"
                    )
            columns.append(tuple(cells))
            resolved.append(attr)
    final_schema = Schema(tuple(resolved), dict(schema.taxonomies))
    return Dataset(final_schema, columns)


def write_dataset(data: Dataset, sink: str | Path | IO[str]) -> None:
    """Write a dataset as UTF-8 CSV with a header row.

    Numeric values use a fixed six-decimal format so that write/load
    round trips are byte stable.
    """
    owned = isinstance(sink, (str, Path))
    handle = open(sink, "w", encoding="utf-8", newline="") if owned else sink
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(data.schema.names)
        formatted = []
        for attr, col in zip(data.schema, data.columns):
            if attr.kind == NUMERIC:
                formatted.append([_NUMERIC_FORMAT.format(v) for v in col])
            else:
                formatted.append(list(col))
        for i in range(data.n):
            writer.writerow([column[i] for column in formatted])
    finally:
        if owned:
            handle.close()
