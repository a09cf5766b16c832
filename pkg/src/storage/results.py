"""Sweep result files: CSV, JSON and XLSX emission and loading."""

import csv
import json
from pathlib import Path
from typing import List, Sequence

from openpyxl import Workbook, load_workbook
from openpyxl.styles import Font

from ..harness.models import SweepRecord
from ..utils.config import OUTPUT_FORMATS, RECORD_COLUMNS
from ..utils.errors import ConfigError, ResultWriteError


def _row(record: SweepRecord) -> dict:
    return record.model_dump(mode="json")


def _write_csv(records: Sequence[SweepRecord], path: Path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=RECORD_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for record in records:
            row = _row(record)
            if row["crb_trace"] is None:
                row["crb_trace"] = ""
            writer.writerow(row)


def _write_json(records: Sequence[SweepRecord], path: Path):
    rows = [_row(record) for record in records]
    with open(path, "w", encoding="utf-8") as f:
        json.dump(rows, f, indent=2)
        f.write("\n")


def _write_xlsx(records: Sequence[SweepRecord], path: Path):
    wb = Workbook()
    ws = wb.active
    ws.title = "records"

    header_font = Font(bold=True)
    for col, header in enumerate(RECORD_COLUMNS, 1):
        cell = ws.cell(row=1, column=col, value=header)
        cell.font = header_font

    for record in records:
        row = _row(record)
        ws.append([row[column] for column in RECORD_COLUMNS])

    wb.save(path)


WRITERS = {
    "csv": _write_csv,
    "json": _write_json,
    "xlsx": _write_xlsx,
}


def emit(records: Sequence[SweepRecord], fmt: str, path: str) -> Path:
    """
    Write sweep records to a file.

    Args:
        records: Non-empty list of records, written in the given order
        fmt: One of csv, json, xlsx
        path: Output file path; parent directories are created

    Returns:
        The written path

    Raises:
        ConfigError: If fmt is unknown
        ResultWriteError: If records is empty or the path is not writable
    """
    if fmt not in OUTPUT_FORMATS:
        raise ConfigError(f"Unknown output format: {fmt} (expected one of {', '.join(OUTPUT_FORMATS)})")
    if not records:
        raise ResultWriteError(path, "no records to write")

    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        WRITERS[fmt](records, target)
    except OSError as e:
        raise ResultWriteError(str(path), e.strerror or str(e)) from e
    return target


def _parse_csv_row(row: dict) -> dict:
    row = dict(row)
    if row["crb_trace"] == "":
        row["crb_trace"] = None
    return row


def load_records(path: str) -> List[SweepRecord]:
    """Read records back from a csv, json or xlsx file (format from the suffix)."""
    target = Path(path)
    suffix = target.suffix.lower().lstrip(".")

    if suffix == "csv":
        with open(target, newline="", encoding="utf-8") as f:
            return [SweepRecord.model_validate(_parse_csv_row(row)) for row in csv.DictReader(f)]

    if suffix == "json":
        with open(target, encoding="utf-8") as f:
            return [SweepRecord.model_validate(row) for row in json.load(f)]

    if suffix == "xlsx":
        wb = load_workbook(target, read_only=True, data_only=True)
        try:
            rows = list(wb.active.iter_rows(values_only=True))
        finally:
            wb.close()
        header = list(rows[0])
        return [SweepRecord.model_validate(dict(zip(header, values))) for values in rows[1:]]

    raise ConfigError(f"Cannot infer result format from {path}")
