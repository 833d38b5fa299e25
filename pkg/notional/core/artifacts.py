import csv
import io
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd
from pydantic import BaseModel

from notional.config import settings
from notional.core.exceptions import ConfigurationError, SchemaError


class ArtifactEnvelope(BaseModel):
    """Standardized wrapper for JSON artifacts"""
    success: bool
    message: str
    data: Optional[Any] = None
    meta: Optional[Dict[str, Any]] = None


def header_meta(seed: int, with_timestamp: bool = True) -> Dict[str, Any]:
    """Provenance fields recorded in every artifact"""
    meta: Dict[str, Any] = {"seed": seed}
    if with_timestamp:
        meta["created"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        meta["version"] = settings.VERSION
    return meta


def header_line(meta: Dict[str, Any]) -> str:
    return "# " + " ".join(f"{key}={value}" for key, value in meta.items())


def write_json(
    path: Path,
    data: Any,
    message: str = "Operation successful",
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write a JSON artifact wrapped in the envelope
    """
    envelope = ArtifactEnvelope(success=True, message=message, data=data, meta=meta)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(envelope.model_dump(exclude_none=True), sort_keys=True, indent=1)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_json(path: Path) -> ArtifactEnvelope:
    return ArtifactEnvelope.model_validate_json(path.read_text(encoding="utf-8"))


def write_tsv(
    path: Path,
    columns: List[str],
    rows: Iterable[Iterable[Any]],
    meta: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Write a TSV artifact: optional '#' header line, column header, rows
    """
    frame = pd.DataFrame([[format_cell(value) for value in row] for row in rows], columns=columns)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        if meta is not None:
            handle.write(header_line(meta) + "\n")
        frame.to_csv(handle, sep="\t", index=False, quoting=csv.QUOTE_NONE, lineterminator="\n")
    return path


def format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.2f}"
    return str(value)


def tsv_body(path: Path) -> str:
    """File text without leading '#' lines"""
    lines = path.read_text(encoding="utf-8").splitlines(keepends=True)
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        start += 1
    return "".join(lines[start:])


def read_tsv(path: Path, required: Iterable[str] = ()) -> pd.DataFrame:
    """
    Read a TSV artifact as strings, skipping the '#' header line
    """
    body = tsv_body(path)
    if not body.strip():
        raise SchemaError("<header>", f"{path} has no column header")
    frame = pd.read_csv(
        io.StringIO(body),
        sep="\t",
        dtype=str,
        keep_default_na=False,
        quoting=csv.QUOTE_NONE,
    )
    for column in required:
        if column not in frame.columns:
            raise SchemaError(column, f"missing from {path.name}")
    return frame


def read_table(text: str, name: str, width: int) -> pd.DataFrame:
    """
    Headerless tab separated lexicon table; '#' starts a comment
    """
    try:
        frame = pd.read_csv(
            io.StringIO(text),
            sep="\t",
            header=None,
            comment="#",
            dtype=str,
            keep_default_na=False,
            quoting=csv.QUOTE_NONE,
        )
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=range(width), dtype=str)
    except pd.errors.ParserError as exc:
        raise ConfigurationError(f"{name}: {exc}")
    frame = frame.fillna("").apply(lambda column: column.str.strip())
    frame = frame[(frame != "").any(axis=1)].reset_index(drop=True)
    if frame.shape[1] != width or (frame == "").to_numpy().any():
        raise ConfigurationError(f"{name}: expected {width} tab separated fields on every line")
    return frame
