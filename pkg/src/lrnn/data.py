"""Dataset loading and minibatch iteration.

Supported containers:

- IDX image files (big endian): i32 magic 0x00000803 | i32 count |
  i32 rows | i32 cols | u8 pixels, row-wise.  Pixels are scaled by 1/255.
- CIFAR-10 binary batches: 3073-byte records, 1 label byte followed by
  1024 R + 1024 G + 1024 B pixel bytes.  Labels are discarded, pixels
  scaled by 1/255.
- Delimiter-separated numeric tables (UCI-style), optionally with a
  header row and a label column to drop.  ``?`` or empty cells are
  treated as missing and imputed with the column mean.
- A JSON manifest mapping dataset names to loader settings.
"""

from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

IDX_IMAGE_MAGIC = 0x00000803
CIFAR_RECORD_BYTES = 3073  # 1 label byte + 3 * 1024 pixel bytes

_MISSING_CELLS = {"", "?"}


@dataclass(frozen=True)
class Dataset:
    """An in-memory instances-by-attributes matrix plus its provenance."""

    x: np.ndarray
    source: str

    @property
    def instance_count(self) -> int:
        return self.x.shape[0]

    @property
    def attribute_count(self) -> int:
        return self.x.shape[1]


def load_idx(images_path) -> Dataset:
    """Load an IDX3 image file into a (count, rows*cols) matrix scaled to [0, 1]."""
    path = Path(images_path)
    raw = path.read_bytes()
    if len(raw) < 16:
        raise ValueError(f"{path}: truncated IDX header ({len(raw)} bytes)")
    magic, count, rows, cols = struct.unpack(">iiii", raw[:16])
    if magic != IDX_IMAGE_MAGIC:
        raise ValueError(f"{path}: bad IDX magic 0x{magic:08x}, expected 0x{IDX_IMAGE_MAGIC:08x}")
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise ValueError(f"{path}: truncated IDX file, {len(raw)} bytes < {expected}")
    pixels = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16)
    x = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    return Dataset(x=x, source=f"{path} (idx)")


def load_cifar10(batch_paths) -> Dataset:
    """Load and concatenate CIFAR-10 binary batches; labels are dropped."""
    if isinstance(batch_paths, (str, Path)):
        batch_paths = [batch_paths]
    if not batch_paths:
        raise ValueError("no CIFAR-10 batch files given")
    parts = []
    for p in batch_paths:
        path = Path(p)
        raw = path.read_bytes()
        if len(raw) == 0 or len(raw) % CIFAR_RECORD_BYTES != 0:
            raise ValueError(
                f"{path}: size {len(raw)} is not a multiple of {CIFAR_RECORD_BYTES}"
            )
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR_RECORD_BYTES)
        parts.append(records[:, 1:])
    x = np.concatenate(parts, axis=0).astype(np.float64) / 255.0
    source = ", ".join(str(p) for p in batch_paths)
    return Dataset(x=x, source=f"{source} (cifar10)")


def load_csv(
    path,
    delimiter: str = ",",
    has_header: bool = False,
    label_column: int | None = None,
) -> Dataset:
    """Parse a rectangular numeric table; values are returned unnormalized.

    ``label_column`` indexes the raw row (negative indices allowed) and is
    dropped before numeric conversion, so non-numeric class labels are fine.
    Missing cells (empty or ``?``) are imputed with their column mean.
    """
    path = Path(path)
    rows: list[list[float]] = []
    width: int | None = None
    with open(path, newline="") as f:
        reader = csv.reader(f, delimiter=delimiter)
        for line_no, record in enumerate(reader, start=1):
            if not record or all(cell.strip() == "" for cell in record):
                continue
            if has_header and not rows and width is None:
                width = -1  # header consumed; real width set by first data row
                continue
            if label_column is not None:
                record = list(record)
                try:
                    del record[label_column]
                except IndexError:
                    raise ValueError(
                        f"{path}:{line_no}: no column {label_column} in row of "
                        f"width {len(record)}"
                    ) from None
            if width in (None, -1):
                width = len(record)
            elif len(record) != width:
                raise ValueError(
                    f"{path}:{line_no}: ragged row of width {len(record)}, expected {width}"
                )
            parsed = []
            for col, cell in enumerate(record):
                cell = cell.strip()
                if cell in _MISSING_CELLS:
                    parsed.append(math.nan)
                    continue
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}:{line_no}: non-numeric cell {cell!r} in column {col}"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    x = np.array(rows, dtype=np.float64)
    nan_cols = np.flatnonzero(np.all(np.isnan(x), axis=0))
    if nan_cols.size:
        raise ValueError(f"{path}: column(s) {nan_cols.tolist()} have no values at all")
    if np.isnan(x).any():
        means = np.nanmean(x, axis=0)
        idx = np.where(np.isnan(x))
        x[idx] = means[idx[1]]
    return Dataset(x=x, source=f"{path} (csv)")


def normalize_unit_interval(d: Dataset) -> Dataset:
    """Linearly map each column onto [0, 1]; constant columns map to 0."""
    x = d.x
    mins = x.min(axis=0)
    spans = x.max(axis=0) - mins
    out = np.zeros_like(x)
    nonconst = spans > 0.0
    out[:, nonconst] = (x[:, nonconst] - mins[nonconst]) / spans[nonconst]
    return Dataset(x=out, source=d.source + " normalized")


def iter_minibatches(
    d,
    batch_size: int,
    seed: int | np.random.Generator | None = None,
    shuffle: bool = False,
) -> Iterator[np.ndarray]:
    """Yield ceil(D / batch_size) row slices covering every instance once.

    Without shuffling the slices are contiguous rows in dataset order and
    the last batch may be short.  With ``shuffle`` the rows are permuted by
    the seeded generator first; passing a ``Generator`` lets a caller drive
    distinct permutations across epochs from one stream.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    x = d.x if isinstance(d, Dataset) else np.asarray(d, dtype=np.float64)
    n = x.shape[0]
    if shuffle:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        x = x[rng.permutation(n)]
    for start in range(0, n, batch_size):
        yield x[start : start + batch_size]


def load_dataset(
    path,
    fmt: str,
    *,
    delimiter: str = ",",
    has_header: bool = False,
    label_column: int | None = None,
    normalize: bool = True,
) -> Dataset:
    """Dispatch on format and return a training-ready dataset in [0, 1].

    IDX and CIFAR pixels are already scaled by the loaders; CSV tables are
    column-normalized unless ``normalize`` is disabled.
    ``fmt="cifar"`` accepts a single file, a directory (all ``*.bin`` files,
    sorted), or a list of files.
    """
    if fmt == "idx":
        return load_idx(path)
    if fmt == "cifar":
        if isinstance(path, (str, Path)) and Path(path).is_dir():
            batches = sorted(Path(path).glob("*.bin"))
            if not batches:
                raise ValueError(f"no *.bin batch files under {path}")
            path = batches
        return load_cifar10(path)
    if fmt == "csv":
        d = load_csv(path, delimiter=delimiter, has_header=has_header, label_column=label_column)
        return normalize_unit_interval(d) if normalize else d
    raise ValueError(f"unknown dataset format {fmt!r}")


def load_manifest(path) -> dict[str, dict]:
    """Read a manifest: JSON object mapping name -> loader settings.

    Each entry needs ``path`` and ``format`` and may add ``delimiter``,
    ``label_column`` and ``header``.  Relative paths are resolved against
    the manifest's directory.
    """
    path = Path(path)
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, dict) or not raw:
        raise ValueError(f"{path}: manifest must be a non-empty JSON object")
    entries: dict[str, dict] = {}
    for name, entry in raw.items():
        if not isinstance(entry, dict) or "path" not in entry or "format" not in entry:
            raise ValueError(f"{path}: entry {name!r} needs at least 'path' and 'format'")
        entry = dict(entry)
        p = Path(entry["path"])
        if not p.is_absolute():
            p = path.parent / p
        entry["path"] = p
        entries[name] = entry
    return entries


def load_manifest_entry(manifest_path, name: str) -> Dataset:
    """Load one named dataset from a manifest file."""
    entries = load_manifest(manifest_path)
    if name not in entries:
        known = ", ".join(sorted(entries))
        raise ValueError(f"dataset {name!r} not in manifest (has: {known})")
    e = entries[name]
    return load_dataset(
        e["path"],
        e["format"],
        delimiter=e.get("delimiter", ","),
        has_header=bool(e.get("header", False)),
        label_column=e.get("label_column"),
    )
