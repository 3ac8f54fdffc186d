"""Small shared helpers: ranking, hashing, deterministic JSON."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np


def midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks of `values`, ties replaced by the mean rank of the tie group."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    n = len(values)
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        # positions i..j (0-based) share the average of ranks i+1..j+1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def sha256_file(path: Path | str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def dump_json(obj, path: Path | str) -> None:
    """Write JSON with a stable key order and layout (byte-reproducible)."""
    text = json.dumps(obj, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_json(path: Path | str):
    return json.loads(Path(path).read_text(encoding="utf-8"))
