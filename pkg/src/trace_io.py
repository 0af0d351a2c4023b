"""
Versioned on-disk formats for traces and run summaries.

A trace is newline-delimited JSON with one record per timestep; a batch file
is newline-delimited JSON with one run summary per line. Every record carries
a ``schema_version`` so readers can refuse files they do not understand.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Optional

from config import SUMMARY_SCHEMA_VERSION, TRACE_SCHEMA_VERSION
from utils import canonical_json, read_jsonl, write_jsonl


class TraceWriter:
    """
    Streams trace records to a JSONL file.

    Usage:
        with TraceWriter(path) as writer:
            writer.write(record)
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self.count = 0
        self._file = None

    def __enter__(self) -> "TraceWriter":
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file = open(self.path, 'w', encoding='utf-8')
        return self

    def write(self, record: Dict[str, Any]) -> None:
        if self._file is None:
            raise RuntimeError("TraceWriter is not open")
        self._file.write(canonical_json(record))
        self._file.write("\n")
        self.count += 1

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def __exit__(self, exc_type, exc, tb):
        self.close()
        return False


def _check_version(record: Dict[str, Any], expected: int, path: Path) -> Dict[str, Any]:
    version = record.get("schema_version")
    if version != expected:
        raise ValueError(f"{path}: unsupported schema_version {version!r} (expected {expected})")
    return record


def write_trace(path: Path, records: Iterable[Dict[str, Any]]) -> int:
    """Write trace records; returns the number written."""
    return write_jsonl(path, records)


def read_trace(path: Path) -> Iterator[Dict[str, Any]]:
    """
    Yield trace records from a JSONL file.

    Raises:
        ValueError: On malformed lines or an unsupported schema version
    """
    path = Path(path)
    for record in read_jsonl(path):
        yield _check_version(record, TRACE_SCHEMA_VERSION, path)


def write_summaries(path: Path, summaries: Iterable[Dict[str, Any]]) -> int:
    """Write run summary dictionaries, one per line; returns the number written."""
    return write_jsonl(path, summaries)


def read_summaries(path: Path, config_hash: Optional[str] = None) -> List[Dict[str, Any]]:
    """
    Load run summary dictionaries from a batch file.

    Args:
        path: Batch JSONL file
        config_hash: If given, keep only summaries of this config

    Raises:
        ValueError: On malformed lines or an unsupported schema version
    """
    path = Path(path)
    summaries = [_check_version(r, SUMMARY_SCHEMA_VERSION, path) for r in read_jsonl(path)]
    if config_hash is not None:
        summaries = [s for s in summaries if s.get("config_hash") == config_hash]
    return summaries
