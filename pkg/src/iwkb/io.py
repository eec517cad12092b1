"""Plain-text input/output: configs, tables, CSV and key/value records.

All numeric output uses %.17g (full double precision) and LF line
endings, so identical inputs produce byte-identical files.
"""

import numpy as np

from .errors import ConfigError

__all__ = [
    "parse_config_text",
    "load_config",
    "load_table",
    "write_csv",
    "write_kv",
    "format_value",
]


def parse_config_text(text, source="<config>"):
    """Parse line-oriented ``key = value`` text with ``#`` comments.

    Returns an ordered dict of string values.  Raises ConfigError with
    the offending line number on malformed lines or duplicate keys.
    """
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def load_table(path):
    """Load a two-column numeric table (whitespace- or comma-separated)."""
    rows = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.replace(",", " ").split()
                if len(parts) != 2:
                    raise ConfigError(
                        f"{path}:{lineno}: expected two columns, got {raw!r}"
                    )
                try:
                    rows.append((float(parts[0]), float(parts[1])))
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read table {path}: {exc}") from exc
    if not rows:
        raise ConfigError(f"{path}: empty table")
    arr = np.asarray(rows, dtype=float)
    return arr[:, 0], arr[:, 1]


def format_value(value):
    """Render a value for text output (%.17g for floats)."""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def write_csv(fileobj, header, columns):
    """Write columns as CSV with a leading ``# format=1`` line."""
    cols = [np.atleast_1d(np.asarray(col)) for col in columns]
    n = cols[0].size
    if any(col.size != n for col in cols):
        raise ValueError("CSV columns have unequal lengths")
    fileobj.write("# format=1\n")
    fileobj.write(",".join(header) + "\n")
    for i in range(n):
        fileobj.write(",".join(format_value(col[i]) for col in cols) + "\n")


def write_kv(fileobj, record):
    """Write a flat mapping as ``key = value`` lines (insertion order)."""
    for key, value in record.items():
        fileobj.write(f"{key} = {format_value(value)}\n")
