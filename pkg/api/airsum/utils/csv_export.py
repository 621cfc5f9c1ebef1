import csv
import io
import logging
import math
from typing import Any, Iterator, List, NamedTuple, Sequence

logger = logging.getLogger(__name__)


class ResultTable(NamedTuple):
    columns: List[str]
    rows: List[List[Any]]


def format_value(value: Any) -> str:
    """
    Helper to format values for CSV.

    Floats keep 12 significant digits; None becomes an empty cell and
    non-finite floats are written as nan, inf or -inf.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".12g")
    return str(value)


def generate_csv_rows(table: ResultTable) -> Iterator[str]:
    """Yield the header, then one chunk per data row."""
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")

    writer.writerow(table.columns)
    yield output.getvalue()
    output.seek(0)
    output.truncate(0)

    for row in table.rows:
        if len(row) != len(table.columns):
            raise ValueError(f"Row has {len(row)} values for {len(table.columns)} columns")
        writer.writerow([format_value(value) for value in row])
        yield output.getvalue()
        output.seek(0)
        output.truncate(0)


def render_csv(table: ResultTable) -> str:
    return "".join(generate_csv_rows(table))


def write_csv(table: ResultTable, path: str) -> int:
    """Write table to path and return the number of data rows."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        for chunk in generate_csv_rows(table):
            handle.write(chunk)
    logger.info(f"Wrote {len(table.rows)} rows to {path}")
    return len(table.rows)


def columns_of(table: ResultTable, *names: str) -> List[Sequence[Any]]:
    """Column-wise view of selected columns, in the order given."""
    positions = [table.columns.index(name) for name in names]
    return [[row[p] for row in table.rows] for p in positions]
