"""Alternative distributions on S^{p-1}: densities, samplers and Gegenbauer
coefficients.

Densities are taken with respect to the uniform probability measure, so the
uniform law has density 1. Rotationally symmetric laws are described by an
angular profile ``g(mu' x)``; mixtures are weighted lists of components, each
either rotationally symmetric about an axis or a rotated projected normal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import logsumexp, roots_legendre

from .exceptions import DomainError, NumericError
from .sampleset import SampleSet
from .specfun import gamma_kp, gegenbauer_at_one, gegenbauer_table, log_bessel_i, log_m_kp, surface_measure

__all__ = [
    "AngularFunction",
    "RotationPlane",
    "AlternativeModel",
    "KINDS",
    "rotation_matrix",
    "density",
    "sample",
    "beta_k_vmf",
    "beta_k_numeric",
    "cauchy_rho",
]

KINDS = (
    "uniform",
    "vmf",
    "cauchy_like",
    "watson",
    "small_circle",
    "vmf_mixture_poles",
    "small_circle_mixture",
    "proj_normal_mixture",
    "multi_vmf",
)

QUAD_NODES = 200
CDF_GRID = 4096
_QUAD_RTOL = 1e-8


# ---------------------------------------------------------------------------
# angular profiles


def _log_const(t, value=0.0):
    return np.full(np.shape(t), value, dtype=float)


def _log_vmf(t, kappa):
    return kappa * np.asarray(t, dtype=float)


def _log_watson(t, kappa):
    return kappa * np.asarray(t, dtype=float) ** 2


def _log_small_circle(t, kappa, nu):
    return -kappa * (np.asarray(t, dtype=float) - nu) ** 2


def _log_cauchy(t, rho, p):
    t = np.asarray(t, dtype=float)
    return p * (math.log1p(-rho * rho) - np.log(1.0 - 2.0 * rho * t + rho * rho))


def cauchy_rho(kappa: float) -> float:
    """``rho(kappa) = (2 kappa + 1 - sqrt(4 kappa + 1)) / (2 kappa)``, in ``(0, 1)``."""
    if kappa <= 0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    return (2.0 * kappa + 1.0 - math.sqrt(4.0 * kappa + 1.0)) / (2.0 * kappa)


def _theta_rule(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_legendre(nodes)
    return 0.5 * math.pi * (x + 1.0), 0.5 * math.pi * w


@dataclass(frozen=True)
class AngularFunction:
    """Profile ``g`` of a rotationally symmetric law ``x -> g(mu' x) / norm``.

    ``log_g`` maps an array of ``t`` in ``[-1, 1]`` to ``log g(t)``. The
    normalizer ``norm = (omega_{p-2}/omega_{p-1}) int g(u) (1-u^2)^{(p-3)/2} du``
    is computed once with Gauss-Legendre in ``u = cos(theta)``, where the
    integrand ``g(cos th) sin(th)^{p-2}`` is smooth for every ``p >= 2``.
    """

    log_g: object
    p: int
    log_norm: float = field(init=False)
    _theta: np.ndarray = field(init=False, repr=False)
    _cdf: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.p < 2:
            raise DomainError(f"p must be >= 2, got {self.p}")
        coarse = self._log_integral(lambda t: 0.0, QUAD_NODES)
        fine = self._log_integral(lambda t: 0.0, 2 * QUAD_NODES)
        if not np.isfinite(fine):
            raise NumericError("angular profile is not normalizable")
        if abs(math.expm1(coarse - fine)) > _QUAD_RTOL:
            raise NumericError("normalizer quadrature did not converge on node doubling")
        object.__setattr__(self, "log_norm", fine)
        theta = np.linspace(0.0, math.pi, CDF_GRID)
        logf = self.log_g(np.cos(theta))
        if self.p > 2:
            with np.errstate(divide="ignore"):
                logf = logf + (self.p - 2) * np.log(np.sin(theta))
        f = np.exp(logf - np.max(logf))
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (f[1:] + f[:-1]))])
        object.__setattr__(self, "_theta", theta)
        object.__setattr__(self, "_cdf", cdf / cdf[-1])

    def _log_integral(self, log_h, nodes: int) -> float:
        th, w = _theta_rule(nodes)
        t = np.cos(th)
        log_terms = self.log_g(t) + log_h(t) + (self.p - 2) * np.log(np.sin(th)) + np.log(w)
        return float(logsumexp(log_terms) + math.log(surface_measure(self.p - 2) / surface_measure(self.p - 1)))

    def density(self, t):
        """Normalized profile ``g(t) / norm``."""
        return np.exp(self.log_g(np.asarray(t, dtype=float)) - self.log_norm)

    def expectation(self, h, nodes: int = QUAD_NODES) -> float:
        """``E[h(mu' X)]`` by Gauss-Legendre in ``theta``."""
        th, w = _theta_rule(nodes)
        t = np.cos(th)
        vals = h(t) * np.exp(self.log_g(t) - self.log_norm) * np.sin(th) ** (self.p - 2) * w
        return float(np.sum(vals) * surface_measure(self.p - 2) / surface_measure(self.p - 1))

    def cdf(self, t):
        """``P(mu' X <= t)`` from the inverse-CDF grid."""
        theta = np.arccos(np.clip(np.asarray(t, dtype=float), -1.0, 1.0))
        return 1.0 - np.interp(theta, self._theta, self._cdf)

    def sample_t(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """``n`` draws of ``t = mu' X`` by inverse CDF on a 4096-point angle grid."""
        return np.cos(np.interp(rng.random(n), self._cdf, self._theta))


def beta_k_numeric(g: AngularFunction, k: int, p: int | None = None) -> float:
    """Projection coefficient ``<g / norm, C_k> / ||C_k||^2`` in ``L^2(nu)``.

    ``||C_k||^2 = gamma_kp C_k(1)``. Raises :class:`NumericError` if doubling
    the number of quadrature nodes changes the value by more than ``1e-8``
    relative (absolute below ``1e-12``).
    """
    p = g.p if p is None else p
    if p != g.p:
        raise DomainError("dimension mismatch")
    if k < 0:
        raise DomainError("k must be >= 0")

    def ck(t):
        return gegenbauer_table(k, p, t)[k]

    norm2 = gamma_kp(k, p) * gegenbauer_at_one(k, p)
    a = g.expectation(ck, QUAD_NODES) / norm2
    b = g.expectation(ck, 2 * QUAD_NODES) / norm2
    if abs(a - b) > max(_QUAD_RTOL * abs(b), 1e-12):
        raise NumericError(f"beta_{k} quadrature did not converge")
    return b


def beta_k_vmf(k, p: int, kappa: float):
    """Closed-form Gegenbauer coefficients of the vMF density (``beta_0 = 1``)."""
    if kappa <= 0:
        raise DomainError(f"kappa must be > 0, got {kappa}")
    alpha = (p - 2) / 2.0
    log_c = (
        alpha * math.log(kappa)
        + math.log(surface_measure(p - 1))
        - (p / 2.0) * math.log(2.0 * math.pi)
        - log_bessel_i(alpha, kappa)
    )
    val = np.exp(log_c + log_m_kp(k, p, kappa))
    return float(val) if np.ndim(val) == 0 else val


# ---------------------------------------------------------------------------
# rotations


@dataclass(frozen=True)
class RotationPlane:
    """Rotation by ``alpha`` radians in the plane of axes ``i < j`` (1-based)."""

    i: int
    j: int
    alpha: float


def rotation_matrix(plane: RotationPlane, p: int) -> np.ndarray:
    i, j = plane.i, plane.j
    if i == j:
        raise DomainError("rotation plane needs two distinct axes")
    if not (1 <= i < j <= p):
        raise DomainError(f"need 1 <= i < j <= p, got i={i}, j={j}, p={p}")
    R = np.eye(p)
    c, s = math.cos(plane.alpha), math.sin(plane.alpha)
    R[i - 1, i - 1] = c
    R[j - 1, j - 1] = c
    R[i - 1, j - 1] = -s
    R[j - 1, i - 1] = s
    return R


# ---------------------------------------------------------------------------
# components


def _tangent_normal(t: np.ndarray, mu: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    z = rng.standard_normal((t.size, mu.size))
    z -= np.outer(z @ mu, mu)
    xi = z / np.linalg.norm(z, axis=1, keepdims=True)
    return t[:, None] * mu[None, :] + np.sqrt(np.clip(1.0 - t * t, 0.0, None))[:, None] * xi


@dataclass(frozen=True)
class _RotSym:
    angular: AngularFunction
    mu: np.ndarray

    def density(self, X):
        return self.angular.density(X @ self.mu)

    def sample(self, n, rng):
        out = _tangent_normal(self.angular.sample_t(n, rng), self.mu, rng)
        return out / np.linalg.norm(out, axis=1, keepdims=True)


@dataclass(frozen=True)
class _ProjNormal:
    """Normalized ``N(mean, diag(var))`` draws, then rotated by ``R``."""

    mean: np.ndarray
    var: np.ndarray
    R: np.ndarray

    def sample(self, n, rng):
        y = self.mean + rng.standard_normal((n, self.mean.size)) * np.sqrt(self.var)
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        return y @ self.R.T

    def density(self, X):
        """Push-forward density: ``omega_{p-1} (2 pi)^{-p/2} |S|^{-1/2} int r^{p-1} e^{-q(r)/2} dr``."""
        Y = X @ self.R
        p = Y.shape[1]
        a = np.sum(Y * Y / self.var, axis=1)
        b = Y @ (self.mean / self.var)
        c = float(np.sum(self.mean**2 / self.var))
        # the integrand peaks at r ~ b/a + O(1/sqrt(a)); shift to avoid overflow
        log_peak = -0.5 * (c - b * b / a)
        upper = float(np.max(np.maximum(b, 0.0) / a + 40.0 / np.sqrt(a)))

        def f(r):
            return r ** (p - 1) * np.exp(-0.5 * a * (r - b / a) ** 2)

        integral, _ = quad_vec(f, 0.0, upper, epsrel=1e-10)
        log_const = math.log(surface_measure(p - 1)) - 0.5 * p * math.log(2 * math.pi) - 0.5 * float(np.sum(np.log(self.var)))
        return np.exp(log_const + log_peak) * integral


def _unit(p: int, j: int, sign: float = 1.0) -> np.ndarray:
    e = np.zeros(p)
    e[j] = sign
    return e


def _angular(log_g, p):
    return AngularFunction(log_g, p)


@dataclass(frozen=True)
class AlternativeModel:
    """A law on S^{p-1} from the catalogue in :data:`KINDS`.

    ``params`` holds the kind's parameters (``kappa``, ``nu``, ``q``, ``k``);
    ``mu`` is the symmetry axis of the unimodal kinds (default ``e_1``).
    """

    kind: str
    p: int
    params: dict = field(default_factory=dict)
    mu: np.ndarray | None = None
    weights: np.ndarray = field(init=False, repr=False)
    components: tuple = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown alternative kind {self.kind!r}; choose from {KINDS}")
        if self.p < 2 or int(self.p) != self.p:
            raise DomainError(f"p must be an integer >= 2, got {self.p}")
        p = self.p
        mu = _unit(p, 0) if self.mu is None else np.asarray(self.mu, dtype=float)
        if mu.shape != (p,) or abs(np.linalg.norm(mu) - 1.0) > 1e-12:
            raise DomainError("mu must be a unit vector of length p")
        mu = mu / np.linalg.norm(mu)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "params", dict(self.params))
        weights, comps = self._build(mu)
        object.__setattr__(self, "weights", np.asarray(weights, dtype=float))
        object.__setattr__(self, "components", tuple(comps))

    def _param(self, name, default=None):
        val = self.params.get(name, default)
        if val is None:
            raise DomainError(f"{self.kind} needs parameter {name!r}")
        return val

    def _kappa(self, default=None):
        kappa = float(self._param("kappa", default))
        if kappa <= 0:
            raise DomainError(f"kappa must be > 0, got {kappa}")
        return kappa

    def _build(self, mu):
        p, kind = self.p, self.kind
        if kind == "uniform":
            return [1.0], [_RotSym(_angular(_log_const, p), mu)]
        if kind == "vmf":
            return [1.0], [_RotSym(_angular(partial(_log_vmf, kappa=self._kappa()), p), mu)]
        if kind == "watson":
            return [1.0], [_RotSym(_angular(partial(_log_watson, kappa=self._kappa()), p), mu)]
        if kind == "cauchy_like":
            rho = cauchy_rho(self._kappa())
            return [1.0], [_RotSym(_angular(partial(_log_cauchy, rho=rho, p=p), p), mu)]
        if kind == "small_circle":
            nu = float(self._param("nu"))
            if not 0.0 <= nu <= 1.0:
                raise DomainError(f"nu must lie in [0, 1], got {nu}")
            return [1.0], [_RotSym(_angular(partial(_log_small_circle, kappa=self._kappa(), nu=nu), p), mu)]
        if kind == "vmf_mixture_poles":
            q = float(self._param("q"))
            if not 0.0 < q < 1.0:
                raise DomainError(f"q must lie in (0, 1), got {q}")
            g = _angular(partial(_log_vmf, kappa=self._kappa(2.0)), p)
            return [1.0 - q, q], [_RotSym(g, _unit(p, 0)), _RotSym(g, _unit(p, 0, -1.0))]
        if kind == "multi_vmf":
            g = _angular(partial(_log_vmf, kappa=self._kappa()), p)
            comps = [_RotSym(g, _unit(p, j, s)) for j in range(p) for s in (1.0, -1.0)]
            return [1.0 / (2 * p)] * (2 * p), comps
        k = int(self._param("k"))
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        if kind == "small_circle_mixture":
            if p < 3:
                raise DomainError("small_circle_mixture rotates in the (2,3)-plane and needs p >= 3")
            g = _angular(partial(_log_small_circle, kappa=self._kappa(10.0), nu=float(self.params.get("nu", 0.0))), p)
            comps = []
            for j in range(1, k + 1):
                R = rotation_matrix(RotationPlane(2, 3, 2.0 * math.pi * j / k), p)
                comps.append(_RotSym(g, R @ _unit(p, 0)))
            return [1.0 / k] * k, comps
        # proj_normal_mixture
        var = np.ones(p)
        var[-1] = 10.0
        mean = 4.0 * _unit(p, 0)
        comps = [_ProjNormal(mean, var, rotation_matrix(RotationPlane(1, 2, 2.0 * math.pi * j / k), p)) for j in range(1, k + 1)]
        return [1.0 / k] * k, comps

    @classmethod
    def from_spec(cls, spec: dict, p: int) -> "AlternativeModel":
        """Build from a config entry such as ``{"kind": "vmf", "kappa": 0.5}``."""
        spec = dict(spec)
        kind = spec.pop("kind", None)
        if kind is None:
            raise DomainError("alternative spec needs a 'kind'")
        mu = spec.pop("mu", None)
        spec.pop("label", None)
        return cls(kind, p, spec, None if mu is None else np.asarray(mu, dtype=float))

    @property
    def label(self) -> str:
        short = {
            "uniform": "Unif",
            "vmf": "vMF",
            "cauchy_like": "Ca",
            "watson": "W",
            "small_circle": "SC",
            "vmf_mixture_poles": "vMFM",
            "small_circle_mixture": "SCM",
            "proj_normal_mixture": "projNM",
            "multi_vmf": "MvMF",
        }[self.kind]
        keys = {
            "vmf": ("kappa",),
            "cauchy_like": ("kappa",),
            "watson": ("kappa",),
            "small_circle": ("kappa", "nu"),
            "vmf_mixture_poles": ("q",),
            "small_circle_mixture": ("k",),
            "proj_normal_mixture": ("k",),
            "multi_vmf": ("kappa",),
        }.get(self.kind, ())
        args = ",".join(f"{self.params[k]:g}" for k in keys if k in self.params)
        return f"{short}({args})" if args else short

    @property
    def rotationally_symmetric(self) -> bool:
        return len(self.components) == 1 and isinstance(self.components[0], _RotSym)

    @property
    def angular(self) -> AngularFunction:
        if not self.rotationally_symmetric:
            raise DomainError(f"{self.kind} is not rotationally symmetric")
        return self.components[0].angular

    def betas(self, K: int) -> np.ndarray:
        """``beta_0..beta_K`` of a rotationally symmetric model (closed form for vMF)."""
        if self.kind == "vmf":
            return beta_k_vmf(np.arange(K + 1), self.p, float(self.params["kappa"]))
        if self.kind == "uniform":
            return np.concatenate([[1.0], np.zeros(K)])
        g = self.angular
        return np.array([beta_k_numeric(g, k) for k in range(K + 1)])

    def density(self, x) -> np.ndarray:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        if X.shape[1] != self.p:
            raise DomainError(f"points must have {self.p} coordinates")
        if np.any(np.abs(np.linalg.norm(X, axis=1) - 1.0) > 1e-9):
            raise DomainError("density is defined on unit vectors only")
        if self.kind == "uniform":
            return np.ones(X.shape[0])
        return sum(w * c.density(X) for w, c in zip(self.weights, self.components))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Raw ``(n, p)`` array of draws (see :func:`sample` for a SampleSet)."""
        if n < 1:
            raise DomainError("n must be >= 1")
        if len(self.components) == 1:
            return self.components[0].sample(n, rng)
        labels = rng.choice(len(self.components), size=n, p=self.weights)
        out = np.empty((n, self.p))
        for idx, comp in enumerate(self.components):
            rows = np.flatnonzero(labels == idx)
            if rows.size:
                out[rows] = comp.sample(rows.size, rng)
        return out


def density(model: AlternativeModel, x):
    """Density of ``model`` at unit vector(s) ``x`` w.r.t. the uniform measure."""
    val = model.density(x)
    return float(val[0]) if np.ndim(x) == 1 else val


def sample(model: AlternativeModel, n: int, rng: np.random.Generator) -> SampleSet:
    return SampleSet(model.sample(n, rng))
