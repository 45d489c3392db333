"""
CSV and JSON-lines writers/readers with a provenance header.

Files open with ``#``-prefixed header lines; the one starting with
``# timestamp:`` is the only line that changes between identical runs.
Angular frequencies are written in cyclic units (Hz) and labelled.
"""

import csv
import hashlib
import io
import json
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigError
from .spectra import Spectrum

TWO_PI = 2 * np.pi
AXIS_EXPORT = {  # name -> (unit label, factor from internal value)
    "probe_two_photon_detuning": ("Hz", 1 / TWO_PI),
    "mw_detuning": ("Hz", 1 / TWO_PI),
    "mw_power_dBm": ("dBm", 1.0),
}
AXIS_IMPORT = {"Hz": TWO_PI, "kHz": TWO_PI * 1e3, "MHz": TWO_PI * 1e6, "rad/s": 1.0,
               "dBm": 1.0}


def config_hash(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def provenance_header(version, digest, extra=(), timestamp=None):
    """Header lines; ``extra`` is a sequence of (key, value) pairs."""
    ts = timestamp or datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    lines = [f"# deltacpt {version}", f"# config-sha256: {digest}", f"# timestamp: {ts}"]
    lines += [f"# {k}: {v}" for k, v in extra]
    return lines


def _fmt(x):
    return repr(float(x))


def _write(path, header, columns, rows):
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(r)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def spectrum_header(s):
    return [("axis", s.axis_name), ("observable", s.observable), ("backend", s.backend)] + [
        (f"param {k}", json.dumps(v, sort_keys=True)) for k, v in sorted(s.provenance.items())]


def write_spectrum_csv(s, path, header=()):
    unit, factor = AXIS_EXPORT[s.axis_name]
    rows = [(_fmt(x * factor), _fmt(y)) for x, y in zip(s.axis, s.values)]
    _write(path, list(header) + [f"# {k}: {v}" for k, v in spectrum_header(s)],
           [f"{s.axis_name}[{unit}]", s.observable], rows)


def _header_record(header):
    """``# key: value`` header lines as one leading JSON record."""
    meta = {}
    for line in header:
        key, _, value = line.lstrip("#").strip().partition(": ")
        if key.startswith("deltacpt "):
            key, value = "deltacpt", key.split(" ", 1)[1]
        meta[key] = value
    return json.dumps({"provenance": meta}, sort_keys=True) + "\n"


def write_spectrum_jsonl(s, path, header=()):
    """One record per point, preceded by a provenance record when ``header`` is given."""
    unit, factor = AXIS_EXPORT[s.axis_name]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(_header_record(list(header) + [f"# {k}: {v}"
                                                    for k, v in spectrum_header(s)[:3]]))
        for x, y in zip(s.axis, s.values):
            rec = {"axis": s.axis_name, "x": float(x * factor), "unit": unit,
                   "observable": s.observable, "y": float(y), "backend": s.backend}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_table_csv(path, columns, rows, header=()):
    _write(path, list(header), columns, [[_cell(v) for v in r] for r in rows])


def write_table_jsonl(path, columns, rows, header=()):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            fh.write(_header_record(header))
        for r in rows:
            fh.write(json.dumps(dict(zip(columns, [_json(v) for v in r])), sort_keys=True) + "\n")


def _cell(v):
    if isinstance(v, bool) or isinstance(v, str):
        return str(v)
    return _fmt(v)


def _json(v):
    if isinstance(v, (bool, str)):
        return v
    v = float(v)
    return v if np.isfinite(v) else str(v)


def read_spectrum_csv(path, observable):
    """Read a two-column spectrum written by :func:`write_spectrum_csv`.

    The axis column is ``name[unit]``; the observable column must be named
    ``observable``. Raises ConfigError with the offending row on malformed
    input.
    """
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    start = 0
    while start < len(lines) and (lines[start].startswith("#") or not lines[start].strip()):
        start += 1
    if start == len(lines):
        raise ConfigError(f"{path}: no header row")
    reader = csv.reader(lines[start:])
    header = next(reader)
    if observable not in header:
        raise ConfigError(f"{path}: observable column {observable!r} missing "
                          f"(columns: {', '.join(header)})")
    axis_col = next((i for i, h in enumerate(header) if "[" in h and h.endswith("]")), None)
    if axis_col is None:
        raise ConfigError(f"{path}: no axis column of the form name[unit]")
    name, unit = header[axis_col][:-1].split("[", 1)
    if unit not in AXIS_IMPORT:
        raise ConfigError(f"{path}: unsupported axis unit {unit!r}")
    y_col = header.index(observable)
    xs, ys = [], []
    for lineno, row in enumerate(reader, start=start + 2):
        if not row:
            continue
        try:
            xs.append(float(row[axis_col]) * AXIS_IMPORT[unit])
            ys.append(float(row[y_col]))
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"{path}: line {lineno}: malformed row {row!r}") from exc
    xs, ys = np.array(xs), np.array(ys)
    if len(xs) < 5:
        raise ConfigError(f"{path}: need at least 5 data rows, found {len(xs)}")
    bad = np.nonzero(np.diff(xs) <= 0)[0]
    if bad.size:
        raise ConfigError(f"{path}: line {start + 3 + bad[0]}: axis is not strictly increasing")
    if not np.all(np.isfinite(ys)):
        raise ConfigError(f"{path}: non-finite observable value")
    return Spectrum(xs, ys, axis_name=name.strip(), observable=observable, backend="observed")
