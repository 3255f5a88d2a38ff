"""Delimited text tables with an explicit schema version.

Every stage output starts with ``# schema-version: 1`` followed by a
comma-separated header and data rows.  Floats print at 10 significant
digits with a ``.`` decimal mark regardless of locale, so identical inputs
produce byte-identical files.
"""

from __future__ import annotations

import os
from typing import IO, Iterable, Sequence

from .config import format_float
from .errors import SchemaError

SCHEMA_VERSION = 1
_PREFIX = "# schema-version:"


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int,)) and not isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format_float(value)
    if value is None:
        return "nan"
    return str(value)


def write_table(
    destination: str | os.PathLike | IO[str],
    header: Sequence[str],
    rows: Iterable[Sequence],
) -> None:
    handle, owned = (
        (open(destination, "w", newline="", encoding="utf-8"), True)
        if isinstance(destination, (str, os.PathLike))
        else (destination, False)
    )
    try:
        handle.write(f"{_PREFIX} {SCHEMA_VERSION}\n")
        handle.write(",".join(header) + "\n")
        for row in rows:
            if len(row) != len(header):
                raise ValueError(
                    f"row width {len(row)} does not match header width {len(header)}"
                )
            handle.write(",".join(format_cell(v) for v in row) + "\n")
    finally:
        if owned:
            handle.close()


def read_table(
    source: str | os.PathLike | IO[str], expect_columns: Sequence[str] | None = None
) -> tuple[list[str], list[list[str]]]:
    """Read a versioned table; wrong or missing version is a schema error."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as handle:
            text = handle.read()
    else:
        text = source.read()
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_PREFIX):
        raise SchemaError("missing '# schema-version' line")
    version_text = lines[0][len(_PREFIX) :].strip()
    try:
        version = int(version_text)
    except ValueError:
        raise SchemaError(f"bad schema version {version_text!r}") from None
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"schema version {version} unsupported (expected {SCHEMA_VERSION})"
        )
    body = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
    if not body:
        raise SchemaError("table has no header row")
    header = body[0].split(",")
    if expect_columns is not None:
        missing = [c for c in expect_columns if c not in header]
        if missing:
            raise SchemaError(f"table lacks required column(s) {missing}")
    rows = [ln.split(",") for ln in body[1:]]
    return header, rows


def column(
    header: list[str], rows: list[list[str]], name: str, kind=float
) -> list:
    """Extract one typed column from read_table output."""
    try:
        i = header.index(name)
    except ValueError:
        raise SchemaError(f"no column {name!r} in table") from None
    return [kind(row[i]) for row in rows]
