"""CSV ingestion, seasonal/diurnal preprocessing and result persistence."""

import csv
import datetime as dt
import hashlib
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .denoise import DenoiseResult
from .exceptions import CsvFormatError, ZeroVarianceError
from .grid import Curve, CurveSeries, make_grid

DAYS_IN_YEAR = 365


@dataclass(frozen=True)
class RawPanel:
    """Daily curves: ``matrix[i]`` holds the values observed on ``dates[i]``."""

    dates: tuple
    matrix: np.ndarray
    column_labels: tuple

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != len(self.dates) or m.shape[1] != len(self.column_labels):
            raise ValueError("panel matrix does not match dates and column labels")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "column_labels", tuple(self.column_labels))


@dataclass(frozen=True)
class PreprocessReport:
    seasonal_mean: np.ndarray
    hourly_mean: Curve
    scale: float


def _parse_date(text, line):
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise CsvFormatError(
            f"line {line}: cannot parse date {text!r}", kind="parse-error", line=line, date=text
        ) from None


def _parse_float(text, line, date):
    if text is None or text.strip() == "":
        raise CsvFormatError(
            f"line {line}: missing value on {date}", kind="missing-cell", line=line, date=date
        )
    try:
        v = float(text)
    except ValueError:
        raise CsvFormatError(
            f"line {line}: cannot parse number {text!r}", kind="parse-error", line=line, date=date
        ) from None
    if not math.isfinite(v):
        raise CsvFormatError(
            f"line {line}: missing value on {date}", kind="missing-cell", line=line, date=date
        )
    return v


def _check_dates(dates, lines):
    for i in range(1, len(dates)):
        if dates[i] == dates[i - 1]:
            raise CsvFormatError(
                f"line {lines[i]}: duplicate date {dates[i]}",
                kind="duplicate-key", line=lines[i], date=dates[i].isoformat(),
            )
        if dates[i] < dates[i - 1]:
            raise CsvFormatError(
                f"line {lines[i]}: date {dates[i]} precedes {dates[i - 1]}",
                kind="non-monotone-dates", line=lines[i], date=dates[i].isoformat(),
            )


def _load_wide(reader):
    header = next(reader, None)
    if not header or len(header) < 2 or header[0].strip() != "date":
        raise CsvFormatError("line 1: expected header 'date,v0,...'", kind="parse-error", line=1)
    labels = [h.strip() for h in header[1:]]
    dates, rows, lines = [], [], []
    for line, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        date = _parse_date(rec[0], line)
        cells = rec[1:] + [""] * (len(labels) - len(rec) + 1)
        if len(rec) - 1 > len(labels):
            raise CsvFormatError(f"line {line}: too many cells", kind="parse-error", line=line,
                                 date=date.isoformat())
        rows.append([_parse_float(c, line, date.isoformat()) for c in cells[: len(labels)]])
        dates.append(date)
        lines.append(line)
    _check_dates(dates, lines)
    return dates, rows, labels


def _load_long(reader):
    header = next(reader, None)
    if not header or [h.strip() for h in header[:3]] != ["date", "position", "value"]:
        raise CsvFormatError("line 1: expected header 'date,position,value'",
                             kind="parse-error", line=1)
    cells = {}
    positions = set()
    first_line = {}
    for line, rec in enumerate(reader, start=2):
        if not rec or all(not c.strip() for c in rec):
            continue
        if len(rec) < 3:
            raise CsvFormatError(f"line {line}: expected 3 cells", kind="parse-error", line=line)
        date = _parse_date(rec[0], line)
        try:
            pos = int(rec[1])
        except ValueError:
            raise CsvFormatError(f"line {line}: bad position {rec[1]!r}", kind="parse-error",
                                 line=line, date=date.isoformat()) from None
        key = (date, pos)
        if key in cells:
            raise CsvFormatError(f"line {line}: duplicate entry for {date} position {pos}",
                                 kind="duplicate-key", line=line, date=date.isoformat())
        cells[key] = _parse_float(rec[2], line, date.isoformat())
        positions.add(pos)
        first_line.setdefault(date, line)
    dates = sorted(first_line)
    cols = sorted(positions)
    rows = []
    for date in dates:
        row = []
        for pos in cols:
            if (date, pos) not in cells:
                raise CsvFormatError(f"missing value on {date} position {pos}",
                                     kind="missing-cell", line=first_line[date],
                                     date=date.isoformat())
            row.append(cells[(date, pos)])
        rows.append(row)
    return dates, rows, [str(p) for p in cols]


def load_csv(path, layout="wide"):
    """Read a daily curve panel from a UTF-8 CSV file.

    ``wide``: header ``date,v0,...,v{N-1}``, one row per day, dates strictly
    increasing.  ``long``: header ``date,position,value``, pivoted to wide
    and sorted by date.
    """
    if layout not in ("wide", "long"):
        raise ValueError(f"layout must be 'wide' or 'long', got {layout!r}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        dates, rows, labels = (_load_wide if layout == "wide" else _load_long)(reader)
    if not rows:
        raise CsvFormatError("file contains no data rows", kind="parse-error", line=2)
    return RawPanel(tuple(d.isoformat() for d in dates), np.array(rows, dtype=float), tuple(labels))


def save_panel(panel, path):
    """Write a panel in the wide layout with 17 significant digits."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date"] + [f"v{i}" for i in range(panel.matrix.shape[1])])
        for date, row in zip(panel.dates, panel.matrix):
            w.writerow([date] + [fmt(v) for v in row])


def fmt(v):
    return format(float(v), ".17g")


def day_of_year(date):
    """Day index 0..364; Feb 29 shares the index of Feb 28."""
    d = dt.date.fromisoformat(date) if isinstance(date, str) else date
    if d.month == 2 and d.day == 29:
        d = d.replace(day=28)
    return dt.date(2001, d.month, d.day).timetuple().tm_yday - 1


def seasonal_weights(bandwidth_days):
    """``W[i, j]``: Gaussian weight of day-of-year ``j`` for target day ``i``.

    Distances are circular and the kernel is untruncated.  Normalization to
    unit sum over the observed days happens in :func:`seasonal_means`.
    """
    k = np.arange(DAYS_IN_YEAR)
    diff = np.abs(k[:, None] - k[None, :])
    dist = np.minimum(diff, DAYS_IN_YEAR - diff)
    return np.exp(-0.5 * (dist / float(bandwidth_days)) ** 2)


def seasonal_means(daily, doy, bandwidth_days):
    """Kernel-smoothed average daily mean for each of the 365 days of year."""
    W = seasonal_weights(bandwidth_days)
    sums = np.bincount(doy, weights=daily, minlength=DAYS_IN_YEAR)
    counts = np.bincount(doy, minlength=DAYS_IN_YEAR).astype(float)
    num = W @ sums
    den = W @ counts
    return num / den


def preprocess(panel, bandwidth_days=15.0, grid=None):
    """Remove the seasonal cycle and the mean curve, then scale to unit variance.

    1. For each day of year, the Gaussian-kernel weighted average daily mean
       over all years is subtracted from every value of that day.
    2. The per-position sample mean is subtracted.
    3. Everything is divided by the global sample standard deviation.
    """
    if not bandwidth_days > 0:
        raise ValueError("bandwidth must be positive")
    M = panel.matrix
    doy = np.array([day_of_year(d) for d in panel.dates])
    seasonal = seasonal_means(M.mean(axis=1), doy, bandwidth_days)
    Z = M - seasonal[doy][:, None]
    hourly = Z.mean(axis=0)
    Z = Z - hourly
    scale = float(np.std(Z, ddof=1)) if Z.size > 1 else 0.0
    if not scale > 1e-12 * max(1.0, float(np.max(np.abs(M)))):
        raise ZeroVarianceError("preprocessed panel has zero variance")
    Z = Z / scale
    grid = grid or make_grid(0.0, 1.0, M.shape[1])
    return CurveSeries(Z, grid), PreprocessReport(seasonal, Curve(hourly, grid), scale)


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def write_json(obj, path):
    """JSON with floats printed to 17 significant digits."""
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")


def write_curves(series, path, dates=None):
    labels = dates or [str(t) for t in range(series.n)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date"] + [f"v{i}" for i in range(series.grid.N)])
        for lab, row in zip(labels, series.data):
            w.writerow([lab] + [fmt(v) for v in row])


def write_rows(rows, path):
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for r in rows:
            w.writerow([fmt(r[k]) if isinstance(r.get(k), float) else r.get(k, "") for k in keys])


def read_rows(path):
    """Read a table written by :func:`write_rows`; numeric cells become floats."""
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: _maybe_float(v) for k, v in r.items()} for r in csv.DictReader(fh)]


def _maybe_float(text):
    try:
        return float(text)
    except (TypeError, ValueError):
        return text


def denoise_summary(result):
    """Scalar summary of a denoising run."""
    diag = result.diagnostics
    return {
        "method": result.method,
        "lambda_hat": result.lambda_hat,
        "lambda_trace": result.lambda_trace,
        "d_hat": diag.get("d_hat"),
        "d_eps": diag.get("d_eps"),
        "d_par": diag.get("d_par"),
        "d_perp": diag.get("d_perp"),
        "mise_min": result.mise_min_estimate,
        "removed": diag.get("removed"),
        "remaining": diag.get("remaining"),
        "removed_proportion": diag.get("removed_proportion"),
        "variance_y": diag.get("variance_y"),
        "test_trace": diag.get("test_trace", []),
    }


def save_results(result, dir_path, extra=None, dates=None):
    """Write tables as CSV, scalars as JSON and a manifest with SHA-256 hashes.

    Returns the manifest dictionary (also written to ``manifest.json``).
    """
    os.makedirs(dir_path, exist_ok=True)
    data_files = []
    if isinstance(result, DenoiseResult):
        summary = denoise_summary(result)
        path = os.path.join(dir_path, "denoised.csv")
        write_curves(result.denoised, path, dates)
        data_files.append("denoised.csv")
    else:
        summary = {"name": result.name, "meta": result.meta, "aggregates": result.aggregate()}
        if result.rows:
            write_rows(result.rows, os.path.join(dir_path, "runs.csv"))
            write_rows(result.aggregate(), os.path.join(dir_path, "summary.csv"))
            data_files += ["runs.csv", "summary.csv"]
    if extra:
        summary.update(extra)
    write_json(summary, os.path.join(dir_path, "summary.json"))
    files = {f: _sha256(os.path.join(dir_path, f)) for f in data_files + ["summary.json"]}
    manifest = {"data_files": data_files, "files": files}
    write_json(manifest, os.path.join(dir_path, "manifest.json"))
    return manifest
