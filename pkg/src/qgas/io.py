"""Deterministic file export: CSV tables, JSON documents and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__

TOOL_VERSION_PREFIX = "# tool-version:"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def config_hash(obj) -> str:
    """First 16 hex digits of sha256 over the canonical JSON form."""
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def format_value(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def render_csv(
    columns: Mapping[str, Sequence],
    meta: Mapping[str, object],
    notes: Iterable[str] = (),
) -> str:
    """CSV text with '#' header lines followed by a header row and the data."""
    lengths = {len(v) for v in columns.values()}
    if len(lengths) > 1:
        raise ValueError(f"columns have unequal lengths {sorted(lengths)}")
    buf = io.StringIO()
    buf.write(f"{TOOL_VERSION_PREFIX} qgas {__version__}\n")
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    for note in notes:
        buf.write(f"# note: {note}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(columns))
    for row in zip(*columns.values()):
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def write_csv(path: Path, columns, meta, notes=()) -> Path:
    return write_text(path, render_csv(columns, meta, notes))


def read_csv(path: Path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Inverse of :func:`write_csv` for numeric tables: (meta, columns)."""
    meta: dict[str, str] = {}
    body = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                meta.setdefault(key.strip(), value.strip())
            else:
                body.append(line)
    rows = list(csv.reader(body))
    header, data = rows[0], rows[1:]
    cols = {}
    for i, name in enumerate(header):
        values = [r[i] for r in data]
        try:
            cols[name] = np.array([float(v) for v in values])
        except ValueError:
            cols[name] = np.array(values, dtype=object)
    return meta, cols


def strip_tool_version(text: str) -> str:
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith(TOOL_VERSION_PREFIX))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def render_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path: Path, obj) -> Path:
    return write_text(path, render_json(obj))


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, files: Sequence[Path], seed: int, extra: Mapping | None = None) -> Path:
    """manifest.json listing each file with its sha256; no timestamps so reruns are identical."""
    out_dir = Path(out_dir)
    entries = [
        {"path": Path(f).relative_to(out_dir).as_posix(), "sha256": sha256_file(f)}
        for f in sorted(set(map(Path, files)))
    ]
    doc = {"tool": f"qgas {__version__}", "seed": seed, "files": entries}
    if extra:
        doc.update(_jsonable(dict(extra)))
    return write_json(out_dir / "manifest.json", doc)
