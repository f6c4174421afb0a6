"""CSV/JSON export and re-import of sweep tables with reproducibility metadata."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Optional, Union

from . import __version__
from .optimizer import SweepResult, SweepRow

BASE_COLUMNS = ("rho", "r_m", "alpha", "beta", "P", "T_us", "D", "Q")
MC_COLUMNS = ("P_ci_lo", "P_ci_hi", "T_se_us", "trials")
SIG_DIGITS = 12

PathLike = Union[str, Path]


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def round_sig(value: Any) -> Any:
    if isinstance(value, float) and math.isfinite(value):
        return float(f"{value:.{SIG_DIGITS}g}")
    return value


def columns_for(result: SweepResult) -> tuple[str, ...]:
    return BASE_COLUMNS + MC_COLUMNS if result.engine == "montecarlo" else BASE_COLUMNS


def metadata(result: SweepResult, **extra) -> dict:
    failed = [
        {"rho": row.rho, "r_m": row.r_m, "alpha": row.alpha, "beta": row.beta, "error": row.error}
        for row in result.rows
        if row.failed
    ]
    return {
        "tool": "v2vquality",
        "version": __version__,
        **result.provenance,
        "engine": result.engine,
        "failed_rows": failed,
        **extra,
    }


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")


def _open_for_write(path: Path):
    try:
        return path.open("w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_table(rows: list[dict], columns: tuple[str, ...], path: PathLike, meta: dict) -> None:
    """Write dict rows as CSV plus a ``.meta.json`` sidecar."""
    path = Path(path)
    with _open_for_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([fmt(row.get(c)) for c in columns])
    with _open_for_write(sidecar_path(path)) as fh:
        json.dump(meta, fh, indent=2, default=str)
        fh.write("\n")


def write_json(rows: list[dict], columns: tuple[str, ...], path: PathLike, meta: dict) -> None:
    path = Path(path)
    doc = {
        "metadata": meta,
        "columns": list(columns),
        "rows": [{c: round_sig(row.get(c)) for c in columns} for row in rows],
    }
    with _open_for_write(path) as fh:
        json.dump(doc, fh, indent=2, default=str)
        fh.write("\n")


def export(result: SweepResult, path: PathLike, format: str = "csv", **extra_meta) -> None:
    """Write a sweep table as ``csv`` (with sidecar metadata) or ``json``."""
    columns = columns_for(result)
    rows = [asdict(row) for row in result.rows]
    meta = metadata(result, **extra_meta)
    if format == "csv":
        write_table(rows, columns, path, meta)
    elif format == "json":
        write_json(rows, columns, path, meta)
    else:
        raise ValueError(f"unknown format {format!r}")


def _parse(value: str, name: str) -> Optional[float]:
    if value == "":
        return None
    if name == "trials":
        return int(value)
    return float(value)


def _row_from(record: dict) -> SweepRow:
    known = {f.name for f in fields(SweepRow)}
    return SweepRow(**{k: v for k, v in record.items() if k in known})


def read_csv(path: PathLike) -> SweepResult:
    """Re-import a CSV written by :func:`export`, metadata included if present."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        rows = [_row_from({k: _parse(v, k) for k, v in rec.items()}) for rec in reader]
    meta: dict = {}
    if sidecar_path(path).exists():
        meta = json.loads(sidecar_path(path).read_text())
    return SweepResult(rows, meta.get("engine", "analytic"), meta)


def read_json(path: PathLike) -> SweepResult:
    doc = json.loads(Path(path).read_text())
    rows = [_row_from(rec) for rec in doc["rows"]]
    meta = doc.get("metadata", {})
    return SweepResult(rows, meta.get("engine", "analytic"), meta)


def read_result(path: PathLike) -> SweepResult:
    return read_json(path) if str(path).endswith(".json") else read_csv(path)
