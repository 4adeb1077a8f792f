"""Fields on S^2 for visual diagnostics: the scaled mean field ``sqrt(n)|z(s)|``,
the null correlation ``rho(s, t)`` and the fixed-alternative correlation
``rho'(s, t)``, on a longitude/latitude grid with Hammer coordinates.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .alternatives import AlternativeModel
from .asymptotics import AlternativeHarmonics, psi_closed, z_value
from .exceptions import DomainError
from .specfun import gegenbauer_table
from .statistic import c_kp

__all__ = [
    "hammer_project",
    "SphereGrid",
    "FieldGrid",
    "field_grid",
    "export_field",
    "read_field",
    "FIELD_KINDS",
    "SERIES_TERMS",
]

FIELD_KINDS = ("abs_z", "rho_null", "rho_alt")
SERIES_TERMS = 100
RHO_ALT_M = 10000
_CHUNK = 512


def hammer_project(lon, lat):
    """Equal-area Hammer coordinates of ``(lon, lat)`` in radians."""
    lon = np.asarray(lon, dtype=float)
    lat = np.asarray(lat, dtype=float)
    eps = 1e-12
    if np.any(np.abs(lon) > math.pi + eps) or np.any(np.abs(lat) > math.pi / 2 + eps):
        raise DomainError("need lon in [-pi, pi] and lat in [-pi/2, pi/2]")
    d = np.sqrt(1.0 + np.cos(lat) * np.cos(lon / 2.0))
    x = 2.0 * math.sqrt(2.0) * np.cos(lat) * np.sin(lon / 2.0) / d
    y = math.sqrt(2.0) * np.sin(lat) / d
    if x.ndim == 0:
        return float(x), float(y)
    return x, y


@dataclass(frozen=True)
class SphereGrid:
    """Regular ``n_lon x n_lat`` grid; longitudes span ``[-pi, pi]``, latitudes ``[-pi/2, pi/2]``."""

    n_lon: int = 181
    n_lat: int = 91
    lon: np.ndarray = field(init=False, repr=False)
    lat: np.ndarray = field(init=False, repr=False)
    points: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n_lon < 2 or self.n_lat < 2:
            raise DomainError("grid needs at least 2 points per axis")
        lat, lon = np.meshgrid(
            np.linspace(-math.pi / 2, math.pi / 2, self.n_lat),
            np.linspace(-math.pi, math.pi, self.n_lon),
            indexing="ij",
        )
        lon, lat = lon.ravel(), lat.ravel()
        pts = np.column_stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)])
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        object.__setattr__(self, "lon", lon)
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def hammer(self):
        return hammer_project(self.lon, self.lat)


@dataclass(frozen=True)
class FieldGrid:
    grid: SphereGrid
    values: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)


def _unit(v, name) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or not np.isclose(np.linalg.norm(v), 1.0, atol=1e-9):
        raise DomainError(f"{name} must be a unit vector in R^3")
    return v / np.linalg.norm(v)


def _null_kernel(lam: float, u) -> np.ndarray:
    K = SERIES_TERMS
    c = c_kp(np.arange(1, K + 1), 3, lam)
    return np.tensordot(c, gegenbauer_table(K, 3, np.clip(u, -1.0, 1.0))[1:], axes=1)


def field_grid(
    kind: str,
    lam: float,
    kappa: float = 1.0,
    n: int = 1,
    mu=(0.0, -1.0, 0.0),
    t_ref=(0.0, 0.0, 1.0),
    resolution: tuple = (181, 91),
    seed: int = 0,
    M: int = RHO_ALT_M,
    p: int = 3,
) -> FieldGrid:
    """Evaluate one field kind on the grid.

    The alternative is vMF(``mu``, ``kappa``); ``kappa = 0`` means uniform.
    Series are truncated at 100 terms. ``rho_alt`` estimates ``K'`` by Monte
    Carlo over ``M`` draws from a generator seeded with ``seed``.
    """
    if p != 3:
        raise DomainError("fields are defined on S^2 only (p = 3)")
    if kind not in FIELD_KINDS:
        raise DomainError(f"unknown field kind {kind!r}; choose from {FIELD_KINDS}")
    if not lam > 0:
        raise DomainError("lambda must be > 0")
    if kappa < 0:
        raise DomainError("kappa must be >= 0")
    grid = SphereGrid(*resolution)
    mu = _unit(mu, "mu")
    t_ref = _unit(t_ref, "t_ref")
    S = grid.points
    model = AlternativeModel("uniform", 3, mu=mu) if kappa == 0 else AlternativeModel("vmf", 3, {"kappa": kappa}, mu)
    params = {"lambda": lam, "kappa": kappa, "mu": mu.tolist(), "t_ref": t_ref.tolist()}
    if kind == "abs_z":
        h = AlternativeHarmonics.from_model(model, SERIES_TERMS)
        vals = math.sqrt(n) * np.abs(z_value(h, lam, S, K=SERIES_TERMS))
        params["n"] = n
    elif kind == "rho_null":
        k_ss = float(_null_kernel(lam, 1.0))
        vals = _null_kernel(lam, S @ t_ref) / k_ss
    else:
        h = AlternativeHarmonics.from_model(model, SERIES_TERMS)
        X = model.sample(M, np.random.default_rng(seed))
        pt = psi_closed(3, lam, X @ t_ref)
        zt = z_value(h, lam, t_ref, K=SERIES_TERMS)
        k_tt = np.mean(pt * pt) - zt * zt
        vals = np.empty(grid.size)
        for i0 in range(0, grid.size, _CHUNK):
            s = S[i0 : i0 + _CHUNK]
            ps = psi_closed(3, lam, s @ X.T)
            zs = z_value(h, lam, s, K=SERIES_TERMS)
            k_st = ps @ pt / M - zs * zt
            k_ss = np.einsum("ij,ij->i", ps, ps) / M - zs * zs
            vals[i0 : i0 + _CHUNK] = k_st / np.sqrt(k_ss * k_tt)
        params.update(seed=seed, M=M)
    return FieldGrid(grid, np.asarray(vals, dtype=float), kind, params)


def export_field(fg: FieldGrid, path) -> None:
    """CSV with columns ``lon,lat,hammer_x,hammer_y,value`` (radians, Hammer units)."""
    hx, hy = fg.grid.hammer()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lon", "lat", "hammer_x", "hammer_y", "value"])
        for row in zip(fg.grid.lon, fg.grid.lat, hx, hy, fg.values):
            w.writerow([repr(float(v)) for v in row])


def read_field(path) -> np.ndarray:
    """``(rows, 5)`` array from a file written by :func:`export_field`."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
