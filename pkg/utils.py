"""
Utility functions for the swarm encapsulation simulator.
"""

import json
import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List

from config import LOG_LEVEL

# Configure logging
logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format='[%(levelname)s] %(message)s'
)

logger = logging.getLogger(__name__)


def set_verbose(verbose: bool) -> None:
    """
    Switch the shared logger between INFO and DEBUG.

    Args:
        verbose: If True, show per-step debug output
    """
    logging.getLogger().setLevel(logging.DEBUG if verbose else getattr(logging, LOG_LEVEL, logging.INFO))


def validate_input_path(input_path: str) -> Path:
    """
    Validate that an input file exists and is a regular file.

    Args:
        input_path: Path to the file (absolute or relative)

    Returns:
        Resolved Path object

    Raises:
        FileNotFoundError: If the file doesn't exist
        ValueError: If the path is not a file
    """
    path = Path(input_path).resolve()
    if not path.exists():
        raise FileNotFoundError(f"File not found: {input_path}")
    if not path.is_file():
        raise ValueError(f"Path is not a file: {input_path}")
    return path


def ensure_directory(directory: str) -> Path:
    """
    Ensure a directory exists, create if it doesn't.

    Args:
        directory: Path to the directory

    Returns:
        Path object of the directory
    """
    path = Path(directory)
    path.mkdir(parents=True, exist_ok=True)
    return path


def canonical_json(data: Any) -> str:
    """
    Serialize to a canonical single-line JSON string (sorted keys, no spaces).

    Identical inputs always give byte-identical output, which the trace
    determinism contract relies on.
    """
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(data: Dict[str, Any]) -> str:
    """
    Compute the SHA-256 hash of a configuration dictionary.

    Args:
        data: Plain (JSON-compatible) configuration dictionary

    Returns:
        Hex digest of the canonical JSON encoding
    """
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def load_json(path: Path) -> Any:
    """
    Load a JSON document.

    Args:
        path: File to read

    Returns:
        Parsed document

    Raises:
        ValueError: If the file is not valid JSON
    """
    with open(path, 'r', encoding='utf-8') as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON in {path}: {e}") from e


def save_json(path: Path, data: Any) -> Path:
    """
    Write a JSON document with stable key order.

    Args:
        path: Destination file
        data: JSON-compatible data

    Returns:
        Path that was written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_jsonl(path: Path, records: Iterable[Dict[str, Any]]) -> int:
    """
    Write newline-delimited JSON records in canonical form.

    Returns:
        Number of records written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, 'w', encoding='utf-8') as f:
        for record in records:
            f.write(canonical_json(record))
            f.write("\n")
            count += 1
    return count


def read_jsonl(path: Path) -> Iterator[Dict[str, Any]]:
    """Yield records from a newline-delimited JSON file, skipping blank lines."""
    with open(path, 'r', encoding='utf-8') as f:
        for line_number, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                yield json.loads(line)
            except json.JSONDecodeError as e:
                raise ValueError(f"{path}:{line_number}: invalid record: {e}") from e


def parse_seed_range(text: str) -> List[int]:
    """
    Parse a seed specification.

    Accepts a single seed ("7"), an inclusive range ("0..49") or a
    comma-separated mix ("1,4,10..12").

    Args:
        text: Seed specification

    Returns:
        List of seeds in the given order (duplicates preserved)

    Raises:
        ValueError: If the specification is malformed or a range is reversed
    """
    seeds: List[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            start_text, end_text = part.split("..", 1)
            start, end = int(start_text), int(end_text)
            if end < start:
                raise ValueError(f"Seed range is reversed: {part}")
            seeds.extend(range(start, end + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise ValueError(f"No seeds in specification: {text!r}")
    return seeds


def format_seed_range(seeds: Iterable[int]) -> str:
    """
    Format seeds compactly, the inverse of parse_seed_range.

    Consecutive runs collapse to "a..b"; other seeds are comma-separated in
    the given order.
    """
    seeds = list(seeds)
    parts: List[str] = []
    start = 0
    for i in range(1, len(seeds) + 1):
        if i < len(seeds) and seeds[i] == seeds[i - 1] + 1:
            continue
        first, last = seeds[start], seeds[i - 1]
        parts.append(str(first) if first == last else f"{first}..{last}")
        start = i
    return ",".join(parts)
