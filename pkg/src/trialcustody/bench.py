"""Import/hash/download timing harness.

Generates files of configured sizes, stores them in a fresh in-process
cluster, and records wall times for import (add_blob), hashing, and download
(get_blob) as CSV.  Absolute numbers are machine-local; the useful signal is
the shape: times should grow with size on a quiet host.
"""

from __future__ import annotations

import csv
import io
import os
import time
from dataclasses import dataclass
from typing import List, Optional, TextIO

from .blobstore import Cluster, ContentId
from .integrity import hash_file

CSV_FIELDS = ["size_bytes", "import_ms", "hash_ms", "download_ms"]

_UNITS = {
    "": 1,
    "B": 1,
    "KB": 1000,
    "MB": 1000**2,
    "GB": 1000**3,
    "KIB": 1024,
    "MIB": 1024**2,
    "GIB": 1024**3,
}


def parse_size(text: str) -> int:
    """'8MiB' -> 8388608; accepts B/KB/MB/GB and KiB/MiB/GiB suffixes."""
    text = text.strip()
    digits = text
    suffix = ""
    for i, ch in enumerate(text):
        if not (ch.isdigit() or ch == "."):
            digits, suffix = text[:i], text[i:]
            break
    unit = _UNITS.get(suffix.strip().upper())
    if unit is None or not digits:
        raise ValueError(f"cannot parse size {text!r}")
    return int(float(digits) * unit)


def parse_sizes(spec: str) -> List[int]:
    return [parse_size(part) for part in spec.split(",") if part.strip()]


@dataclass(frozen=True)
class BenchRow:
    size_bytes: int
    import_ms: float
    hash_ms: float
    download_ms: float

    def as_csv_row(self) -> dict:
        return {
            "size_bytes": self.size_bytes,
            "import_ms": f"{self.import_ms:.3f}",
            "hash_ms": f"{self.hash_ms:.3f}",
            "download_ms": f"{self.download_ms:.3f}",
        }


def _best_of(repeat: int, fn) -> float:
    best = None
    for _ in range(max(1, repeat)):
        start = time.perf_counter()
        fn()
        elapsed = (time.perf_counter() - start) * 1000.0
        best = elapsed if best is None else min(best, elapsed)
    return best


def run_bench(
    sizes: List[int],
    repeat: int = 1,
    cluster: Optional[Cluster] = None,
) -> List[BenchRow]:
    """One row per size, operations timed serially, best of `repeat` runs."""
    cluster = cluster or Cluster.create(3)
    rows = []
    for size in sizes:
        data = os.urandom(size)
        cid = ContentId.for_bytes(data)

        import_ms = None
        for _ in range(max(1, repeat)):
            if cid.hex in cluster.pin_set:  # deduplication would skip the store
                cluster.unpin("peer-0", cid)
            start = time.perf_counter()
            cluster.add_blob(data)
            elapsed = (time.perf_counter() - start) * 1000.0
            import_ms = elapsed if import_ms is None else min(import_ms, elapsed)

        hash_ms = _best_of(repeat, lambda: hash_file(data))
        download_ms = _best_of(repeat, lambda: cluster.get_blob(cid))
        rows.append(
            BenchRow(
                size_bytes=size,
                import_ms=import_ms,
                hash_ms=hash_ms,
                download_ms=download_ms,
            )
        )
        # unpin between sizes so memory does not accumulate
        cluster.unpin("peer-0", cid)
    return rows


def write_csv(rows: List[BenchRow], out: TextIO) -> None:
    writer = csv.DictWriter(out, fieldnames=CSV_FIELDS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_csv_row())


def rows_to_csv(rows: List[BenchRow]) -> str:
    buf = io.StringIO()
    write_csv(rows, buf)
    return buf.getvalue()
