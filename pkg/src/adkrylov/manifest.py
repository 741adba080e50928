"""Bundled list of the nonsymmetric Bai matrices used by the benchmark."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

__all__ = ["MatrixManifestEntry", "load_manifest", "lookup", "select"]

DEFAULT_MAX_DIM = 1000


@dataclass(frozen=True)
class MatrixManifestEntry:
    id: int
    name: str
    group: str
    rows: int
    cols: int
    nonzeros: int
    kind: str
    year: int


@lru_cache(maxsize=None)
def load_manifest() -> tuple:
    text = resources.files("adkrylov").joinpath("data/bai_manifest.csv").read_text()
    entries = []
    for row in csv.DictReader(io.StringIO(text)):
        entries.append(MatrixManifestEntry(
            int(row["id"]), row["name"], row["group"], int(row["rows"]), int(row["cols"]),
            int(row["nonzeros"]), row["kind"], int(row["year"])))
    return tuple(entries)


def lookup(name):
    """Manifest entry for ``name`` or None."""
    for e in load_manifest():
        if e.name == name:
            return e
    return None


def select(names=None, max_dim=DEFAULT_MAX_DIM):
    """Entries matching ``names`` (all if None) with rows and cols <= max_dim.

    ``max_dim=None`` disables the size filter.
    """
    entries = load_manifest()
    if names is not None:
        wanted = set(names)
        entries = [e for e in entries if e.name in wanted]
    if max_dim is not None:
        entries = [e for e in entries if e.rows <= max_dim and e.cols <= max_dim]
    return list(entries)
