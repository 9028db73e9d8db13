"""File formats: SGT1 binary tensors, factor CSVs, and run manifests.

SGT1 layout (all little-endian):

===========  =======================================
bytes        content
===========  =======================================
4            magic ``b"SGT1"``
4            u32 K (number of modes)
4*K          u32 extents ``d_1 ... d_K``
8*d          f64 values, first index fastest
===========  =======================================

Datasets (N samples of a common shape) are stored as a single SGT1 tensor
with one extra trailing mode of extent N, so each sample occupies a
contiguous block of the file.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Sequence

import numpy as np

from .tensors import fold, vec

MAGIC = b"SGT1"


def save_tensor(path: str | Path, x: np.ndarray) -> None:
    """Write a tensor to ``path`` in SGT1 format."""
    x = np.asarray(x, dtype=float)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", x.ndim))
        fh.write(struct.pack(f"<{x.ndim}I", *x.shape))
        fh.write(vec(x).astype("<f8").tobytes())


def load_tensor(path: str | Path) -> np.ndarray:
    """Read an SGT1 tensor from ``path``."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"{path}: not an SGT1 file (magic {magic!r})")
        (k,) = struct.unpack("<I", fh.read(4))
        if k == 0:
            raise ValueError(f"{path}: zero-mode tensor")
        shape = struct.unpack(f"<{k}I", fh.read(4 * k))
        d = int(np.prod(shape))
        data = np.frombuffer(fh.read(8 * d), dtype="<f8")
        if data.size != d:
            raise ValueError(f"{path}: truncated payload ({data.size} of {d} values)")
    return fold(data.astype(float), shape)


def save_dataset(path: str | Path, samples: np.ndarray) -> None:
    """Write samples of shape ``(N, d_1, ..., d_K)`` as one SGT1 tensor.

    The sample index becomes the trailing (slowest) mode.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim < 2:
        raise ValueError("dataset must have shape (N, d_1, ..., d_K)")
    save_tensor(path, np.moveaxis(samples, 0, -1))


def load_dataset(path: str | Path, n_modes: int | None = None) -> np.ndarray:
    """Read a dataset written by :func:`save_dataset`; returns ``(N, ...)``.

    If ``n_modes`` is given and the stored tensor has exactly ``n_modes``
    modes, it is interpreted as a single sample (N = 1).
    """
    x = load_tensor(path)
    if n_modes is not None and x.ndim == n_modes:
        return x[None, ...]
    return np.moveaxis(x, -1, 0)


def save_factor_csv(path: str | Path, m: np.ndarray) -> None:
    """Write a matrix as dense CSV, one row per line."""
    np.savetxt(path, np.atleast_2d(np.asarray(m, dtype=float)), delimiter=",", fmt="%.17g")


def load_factor_csv(path: str | Path) -> np.ndarray:
    """Read a dense CSV matrix."""
    m = np.loadtxt(path, delimiter=",", dtype=float)
    return np.atleast_2d(m)


def save_factors(out_dir: str | Path, factors: Sequence[np.ndarray], stem: str = "psi") -> list[str]:
    """Write one CSV per factor (``{stem}_1.csv``, ...); returns file names."""
    out_dir = Path(out_dir)
    names = []
    for k, psi in enumerate(factors):
        name = f"{stem}_{k + 1}.csv"
        save_factor_csv(out_dir / name, psi)
        names.append(name)
    return names


def load_factors(paths: Sequence[str | Path]) -> list[np.ndarray]:
    """Read a list of factor CSVs."""
    return [load_factor_csv(p) for p in paths]


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    out_dir: str | Path,
    command: str,
    config: dict,
    inputs: Sequence[str | Path] = (),
    outputs: Sequence[str | Path] = (),
    name: str = "manifest.json",
) -> Path:
    """Write a reproducibility manifest next to a command's outputs.

    Records the package version, the full configuration (including seeds),
    and SHA-256 hashes of all input and output files.
    """
    from . import __version__

    out_dir = Path(out_dir)
    manifest = {
        "tool": "sgpalm",
        "version": __version__,
        "command": command,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {Path(p).name: sha256_file(p) for p in outputs},
    }
    path = out_dir / name
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
