"""Samples of unit vectors, RNG streams, and CSV I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DomainError

__all__ = [
    "SampleSet",
    "as_points",
    "replicate_rng",
    "uniform_points",
    "sample_uniform",
    "read_csv",
    "write_csv",
    "CSVFormatError",
]

UNIT_TOL = 1e-12


class CSVFormatError(ValueError):
    """Malformed or non-unit input rows; ``rows`` holds 1-based data-row numbers (header excluded)."""

    def __init__(self, message: str, rows: list[int]):
        super().__init__(message)
        self.rows = rows


@dataclass(frozen=True)
class SampleSet:
    """An ``n x p`` array of unit vectors (rows on S^{p-1}).

    The array is copied and marked read-only on construction.
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise DomainError(f"points must be a 2-D array, got shape {pts.shape}")
        n, p = pts.shape
        if n < 1 or p < 2:
            raise DomainError(f"need n >= 1 and p >= 2, got n={n}, p={p}")
        err = np.abs(np.linalg.norm(pts, axis=1) - 1.0)
        if np.any(err > UNIT_TOL):
            raise DomainError(f"rows are not unit vectors (max |norm - 1| = {err.max():.3g})")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def p(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n


def as_points(sample) -> np.ndarray:
    """Return the ``(n, p)`` point array of a :class:`SampleSet` or array-like."""
    if isinstance(sample, SampleSet):
        return sample.points
    return SampleSet(sample).points


def replicate_rng(seed: int, replicate: int, stream: tuple[int, ...] = ()) -> np.random.Generator:
    """Independent generator for Monte Carlo replicate ``replicate`` under ``seed``.

    Streams depend only on ``(seed, stream, replicate)``, never on scheduling.
    ``stream`` separates unrelated uses of one seed (null draws, each
    alternative, ...).
    """
    key = tuple(int(s) for s in stream) + (int(replicate),)
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def uniform_points(n: int, p: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform points on S^{p-1} as a raw array (normalized Gaussians)."""
    z = rng.standard_normal((n, p))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def sample_uniform(n: int, p: int, rng: np.random.Generator) -> SampleSet:
    return SampleSet(uniform_points(n, p, rng))


def read_csv(path, normalize: bool = False, tol: float = 1e-6) -> SampleSet:
    """Read one unit vector per row (comma separated, optional non-numeric header).

    Rows whose norm differs from one by more than ``tol`` are rejected, unless
    ``normalize`` is set, in which case every nonzero row is projected onto
    the sphere first.
    """
    path = Path(path)
    with path.open() as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if lines and not _is_numeric_row(lines[0]):
        lines = lines[1:]
    if not lines:
        raise CSVFormatError(f"{path}: no data rows", [])
    values, bad = [], []
    for i, ln in enumerate(lines, start=1):
        try:
            values.append([float(v) for v in ln.split(",")])
        except ValueError:
            bad.append(i)
    if bad:
        raise CSVFormatError(f"{path}: non-numeric rows: {bad}", bad)
    width = max(set(len(r) for r in values), key=[len(r) for r in values].count)
    bad = [i for i, r in enumerate(values, start=1) if len(r) != width]
    if bad:
        raise CSVFormatError(f"{path}: rows without {width} columns: {bad}", bad)
    data = np.array(values)
    norms = np.linalg.norm(data, axis=1)
    if normalize:
        bad = np.flatnonzero(norms == 0)
        if bad.size == 0:
            data = data / norms[:, None]
            norms = np.ones_like(norms)
    bad = np.flatnonzero(np.abs(norms - 1.0) > tol)
    if bad.size:
        rows = [int(i) + 1 for i in bad]
        raise CSVFormatError(f"{path}: rows not on the unit sphere: {rows}", rows)
    return SampleSet(data / norms[:, None])


def _is_numeric_row(line: str) -> bool:
    try:
        [float(v) for v in line.split(",")]
    except ValueError:
        return False
    return True


def write_csv(sample, path) -> None:
    """Write one unit vector per row with a ``x1,...,xp`` header."""
    pts = as_points(sample)
    header = ",".join(f"x{j + 1}" for j in range(pts.shape[1]))
    np.savetxt(path, pts, delimiter=",", header=header, comments="", fmt="%.17g")
