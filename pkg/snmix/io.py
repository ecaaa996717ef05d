"""Reading samples from CSV files and writing draws."""
import io
import logging
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from snmix.errors import InputError

logger = logging.getLogger(__name__)


def _is_number(text) -> bool:
    try:
        float(text)
    except (TypeError, ValueError):
        return False
    return True


def _select_column(frame: pd.DataFrame, column: Optional[Union[str, int]]) -> str:
    if column is None:
        for name in frame.columns:
            if frame[name].map(_is_number).all():
                return name
        raise InputError("no numeric column found")
    if column in frame.columns:
        return column
    if isinstance(column, str) and column.lstrip("-").isdigit():
        column = int(column)
    if isinstance(column, int) and 0 <= column < frame.shape[1]:
        return frame.columns[column]
    raise InputError(f"column {column!r} not found, available: {list(frame.columns)}")


def read_column(source, column: Optional[Union[str, int]] = None) -> np.ndarray:
    """
    Read one numeric column of a CSV file.

    The header row is optional and detected from its content: a first row with a non-numeric cell is a header.
    Without ``column`` the first column whose cells are all numeric is used.

    :param source: path or text stream
    :param column: column name or zero-based position
    :return: float array of the column values
    :raises InputError: unreadable or empty file, unknown column, non-numeric rows (reported with line numbers)
    """
    try:
        raw = pd.read_csv(source, header=None, dtype=str, skip_blank_lines=False, keep_default_na=False)
    except FileNotFoundError as e:
        raise InputError(f"cannot read {source}: {e.strerror or e}") from e
    except pd.errors.EmptyDataError:
        raise InputError(f"{source} is empty") from None
    except (OSError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise InputError(f"cannot parse {source}: {e}") from e
    raw = raw.fillna("")
    raw.index = np.arange(1, len(raw) + 1)  # file line numbers
    raw = raw[~(raw.apply(lambda row: row.str.strip() == "", axis=1).all(axis=1))]
    if raw.empty:
        raise InputError(f"{source} contains no data")
    first = raw.iloc[0]
    if not first.map(_is_number).all():
        raw.columns = [str(c).strip() for c in first]
        raw = raw.iloc[1:]
        if raw.empty:
            raise InputError(f"{source} has a header but no data rows")
    name = _select_column(raw, column)
    values = pd.to_numeric(raw[name].str.strip(), errors="coerce")
    bad = values.index[~np.isfinite(values.to_numpy(dtype=float))]
    if len(bad):
        lines = ", ".join(str(i) for i in bad[:10])
        raise InputError(f"non-numeric or non-finite values in column {name!r} on line(s) {lines}", int(bad[0]))
    logger.debug("read %d values from column %r of %s", len(values), name, source)
    return values.to_numpy(dtype=float)


def format_values(values: Sequence[float]) -> str:
    """One value per line at full precision, no header."""
    buffer = io.StringIO()
    pd.Series(np.asarray(values, dtype=float)).to_csv(
        buffer, header=False, index=False, float_format="%.17g", lineterminator="\n"
    )
    return buffer.getvalue()


def write_values(values: Sequence[float], path: Optional[str] = None) -> Optional[str]:
    text = format_values(values)
    if path is None:
        return text
    try:
        with open(path, "w") as f:
            f.write(text)
    except OSError as e:
        raise InputError(f"cannot write {path}: {e.strerror or e}") from e
    return None
