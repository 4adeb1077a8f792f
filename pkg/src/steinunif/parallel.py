"""Order-preserving map over Monte Carlo replicates.

Each replicate is a pure function of its index (the caller derives its RNG
stream from the index), so the stacked result does not depend on how the
indices are split across worker processes.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

import numpy as np

__all__ = ["ReplicateError", "map_replicates"]


class ReplicateError(RuntimeError):
    """A replicate failed; ``replicate`` is its index."""

    def __init__(self, replicate: int, cause: BaseException):
        super().__init__(f"replicate {replicate} failed: {cause!r}")
        self.replicate = replicate


def _run_chunk(func, start: int, stop: int) -> list:
    out = []
    for r in range(start, stop):
        try:
            out.append(func(r))
        except Exception as exc:
            raise ReplicateError(r, exc) from exc
    return out


def map_replicates(func, M: int, workers: int = 1, chunk: int | None = None) -> np.ndarray:
    """``np.array([func(0), ..., func(M - 1)])``, optionally on ``workers`` processes.

    ``func`` must be picklable when ``workers > 1`` (a module-level function
    or a :func:`functools.partial` of one).
    """
    if M < 0:
        raise ValueError("M must be >= 0")
    if workers <= 1 or M < 2:
        return np.array(_run_chunk(func, 0, M))
    if chunk is None:
        chunk = max(1, -(-M // (4 * workers)))
    bounds = [(s, min(M, s + chunk)) for s in range(0, M, chunk)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, [func] * len(bounds), *zip(*bounds)))
    return np.array([x for part in parts for x in part])
