"""On-disk formats: controller caches, state-space controller files, CSV reports.

The controller cache is an ``.npz`` holding a JSON metadata header (plant
hash, grid exponent, gamma, radius, provenance) next to the raw complex
samples; round-trips are bit exact.  All text outputs format floats with 17
significant digits so identical runs produce byte-identical files, and every
writer goes through an atomic temp-file + rename.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile

import numpy as np

from .errors import GridMismatch, ParseError
from .model import FrequencyGrid, batched_resolvent

__all__ = [
    "atomic_write_bytes",
    "save_controller_cache",
    "load_controller_cache",
    "sample_state_space_controller",
    "write_csv",
    "fmt",
]

CACHE_FORMAT = "drro-controller-v1"


def fmt(x) -> str:
    """Fixed 17-significant-digit float formatting for deterministic text output."""
    return format(float(x), ".17g")


def atomic_write_bytes(path, data: bytes):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_controller_cache(
    path,
    controller,
    *,
    plant_hash: str | None = None,
    r: float | None = None,
):
    """Write a controller's samples plus provenance header; bit-exact on reload."""
    import io as _io

    meta = {
        "format": CACHE_FORMAT,
        "plant_hash": plant_hash,
        "grid_k": controller.K.grid.k,
        "gamma": controller.gamma_used,
        "r": r,
        "provenance": controller.provenance,
    }
    buf = _io.BytesIO()
    np.savez(buf, meta=np.array(json.dumps(meta, sort_keys=True)), samples=controller.K.values)
    atomic_write_bytes(path, buf.getvalue())


def load_controller_cache(path, *, expect_grid: FrequencyGrid | None = None):
    """Read a cache file; returns ``(meta dict, samples array)``."""
    try:
        with np.load(path, allow_pickle=False) as archive:
            meta = json.loads(str(archive["meta"]))
            samples = np.array(archive["samples"])
    except FileNotFoundError as exc:
        raise ParseError(f"controller cache not found: {path}") from exc
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot parse controller cache {path}: {exc}") from exc
    if meta.get("format") != CACHE_FORMAT:
        raise ParseError(f"unsupported cache format in {path}: {meta.get('format')!r}")
    if expect_grid is not None and meta.get("grid_k") != expect_grid.k:
        raise GridMismatch(
            f"cache {path} holds grid k={meta.get('grid_k')}, working grid k={expect_grid.k}"
        )
    if samples.ndim != 3:
        raise ParseError(f"cache {path} samples must be (N, d, p), got {samples.shape}")
    return meta, samples


def sample_state_space_controller(path, grid: FrequencyGrid) -> np.ndarray:
    """Sample K(z) = C_c (z I - A_c)^(-1) B_c + D_c from a JSON state-space file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ParseError(f"controller file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot parse controller file {path}: {exc}") from exc
    missing = [k for k in ("A_c", "B_c", "C_c", "D_c") if k not in raw]
    if missing:
        raise ParseError(f"controller file missing keys: {', '.join(missing)}")
    try:
        A = np.asarray(raw["A_c"], dtype=float)
        B = np.asarray(raw["B_c"], dtype=float)
        C = np.asarray(raw["C_c"], dtype=float)
        D = np.asarray(raw["D_c"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"controller matrices are not numeric: {exc}") from exc
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ParseError("A_c must be square")
    return C @ batched_resolvent(grid.z, A, B) + D


def write_csv(path, header: list, rows: list):
    """Atomic CSV writer; cells may be strings or floats (formatted via fmt)."""
    import io as _io

    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([cell if isinstance(cell, str) else fmt(cell) for cell in row])
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))
