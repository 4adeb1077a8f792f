"""Seeded Monte Carlo power studies.

Each replicate draws one sample and reduces it to a small feature vector
(the Gegenbauer summaries ``A_1..A_K``, Rayleigh, Bingham and, for k-fold
tests, the selected grid index). Every test in a row is evaluated from the
same features, so all tests see the same samples. Null features come from a
separate stream and give one critical value per (test, n).
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from functools import partial

import numpy as np
from scipy import stats

from .alternatives import AlternativeModel
from .exceptions import DomainError
from .null_dist import NULL_STREAM, order_statistic
from .parallel import map_replicates
from .sampleset import replicate_rng, uniform_points
from .specfun import gegenbauer_at_one, gegenbauer_table
from .statistic import (
    CoefficientSequence,
    bingham,
    gram_from_pair_sums,
    pair_sums,
    rayleigh,
    truncation_order,
)
from .tuning import GridWeights, LambdaGrid, fold_labels, kfold_scores

__all__ = [
    "TestSpec",
    "ExperimentConfig",
    "PowerTable",
    "run_power_study",
    "paired_onesided_test",
    "emit_table",
    "read_table",
]

VERSION = "0.1.0"
TEST_NAMES = ("stein", "dksd", "softmax", "rayleigh", "bingham", "stein_oracle", "stein_kfold")
ALT_STREAM = 1
PILOT_STREAM = 2
KFOLD_CALIBRATIONS = ("standardized", "pvalue", "fixed")
KFOLD_DEFAULT = "standardized"


@dataclass(frozen=True)
class TestSpec:
    """One test column: ``name`` plus its parameters.

    ``stein``/``dksd``/``softmax`` take ``lambda``; ``stein_oracle`` takes
    ``pilot`` (pilot size, default 10000); ``stein_kfold`` takes ``folds``
    (default 20) and ``calibration``:

    ``"standardized"`` (default)
        statistic is ``(T_n(lambda_hat) - E_0) / sd_0`` with the closed-form
        null moments at ``lambda_hat``; its null law is obtained by running
        the whole selection on the null replicates.
    ``"pvalue"``
        minus the fixed-``lambda`` Monte Carlo p-value of ``T_n(lambda_hat)``,
        calibrated the same way.
    ``"fixed"``
        ``T_n(lambda_hat)`` against the fixed-``lambda`` critical value at
        ``lambda_hat``; ignores the selection step and is oversized.
    """

    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in TEST_NAMES:
            raise DomainError(f"unknown test {self.name!r}; choose from {TEST_NAMES}")
        if self.name in ("stein", "dksd", "softmax") and not float(self.params.get("lambda", 0)) > 0:
            raise DomainError(f"{self.name} needs a positive 'lambda'")
        if self.name == "stein_kfold" and self.params.get("calibration", KFOLD_DEFAULT) not in KFOLD_CALIBRATIONS:
            raise DomainError(f"calibration must be one of {KFOLD_CALIBRATIONS}")

    @classmethod
    def from_spec(cls, spec: dict) -> "TestSpec":
        spec = dict(spec)
        name = spec.pop("name", None)
        if name is None:
            raise DomainError("test spec needs a 'name'")
        return cls(name, spec)

    @property
    def label(self) -> str:
        if self.name in ("rayleigh", "bingham"):
            return self.name.capitalize()
        if self.name == "stein_oracle":
            return "Tn(oracle)"
        if self.name == "stein_kfold":
            return f"Tn({int(self.params.get('folds', 20))}-fold)"
        prefix = {"stein": "Tn", "dksd": "dKSD", "softmax": "Softmax"}[self.name]
        return f"{prefix}({float(self.params['lambda']):g})"


@dataclass(frozen=True)
class ExperimentConfig:
    p: int
    ns: tuple
    tests: tuple
    alternatives: tuple
    alpha: float = 0.05
    M_critical: int = 5000
    M_power: int = 5000
    seed: int = 0
    grid: LambdaGrid = field(default_factory=LambdaGrid)

    def __post_init__(self):
        if self.M_critical < 100 or self.M_power < 100:
            raise DomainError("M_critical and M_power must be >= 100")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if not self.ns or any(int(n) < 2 for n in self.ns):
            raise DomainError("sample sizes must be >= 2")
        tests = tuple(t if isinstance(t, TestSpec) else TestSpec.from_spec(t) for t in self.tests)
        alts = tuple(a if isinstance(a, AlternativeModel) else AlternativeModel.from_spec(a, self.p) for a in self.alternatives)
        if not tests or not alts:
            raise DomainError("need at least one test and one alternative")
        for a in alts:
            if a.p != self.p:
                raise DomainError(f"alternative {a.label} has p={a.p}, config has p={self.p}")
        object.__setattr__(self, "tests", tests)
        object.__setattr__(self, "alternatives", alts)
        object.__setattr__(self, "ns", tuple(int(n) for n in self.ns))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = {"p", "n", "ns", "tests", "alternatives", "alpha", "M_critical", "M_power", "seed", "grid"}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        ns = d.pop("ns", None) or d.pop("n", None)
        d.pop("n", None)
        if ns is None:
            raise DomainError("config needs 'ns'")
        grid = d.pop("grid", None)
        ns = (ns,) if isinstance(ns, int) else tuple(ns)
        kw = {"grid": LambdaGrid(tuple(grid))} if grid is not None else {}
        return cls(ns=ns, **d, **kw)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "ns": list(self.ns),
            "alpha": self.alpha,
            "M_critical": self.M_critical,
            "M_power": self.M_power,
            "seed": self.seed,
            "tests": [{"name": t.name, **t.params} for t in self.tests],
            "alternatives": [{"kind": a.kind, **a.params} for a in self.alternatives],
        }


# ---------------------------------------------------------------------------
# per-replicate features


@dataclass(frozen=True)
class _Plan:
    """What every replicate must compute for one (config, n)."""

    n: int
    p: int
    K: int
    kfold: tuple  # folds per k-fold test
    weights: GridWeights | None


def _features(points: np.ndarray, plan: _Plan, rng: np.random.Generator) -> np.ndarray:
    n, p = points.shape
    if plan.kfold:
        Cp = gegenbauer_table(plan.K, p, np.clip(points @ points.T, -1.0, 1.0))[1:]
        S = (Cp.sum(axis=(1, 2)) - n * gegenbauer_at_one(np.arange(1, plan.K + 1), p)) / 2.0
    else:
        Cp = None
        S = pair_sums(points, plan.K)
    A = gram_from_pair_sums(S, n, p)
    picks = []
    for folds in plan.kfold:
        scores = kfold_scores(points, fold_labels(n, folds, rng), plan.weights, Cp)
        picks.append(float(np.argmax(scores)))
    return np.concatenate([A, [rayleigh(points), bingham(points)], picks])


def _null_features(plan: _Plan, seed: int, r: int) -> np.ndarray:
    rng = replicate_rng(seed, r, (NULL_STREAM, plan.n))
    return _features(uniform_points(plan.n, plan.p, rng), plan, rng)


def _alt_features(plan: _Plan, model: AlternativeModel, alt_index: int, seed: int, r: int) -> np.ndarray:
    rng = replicate_rng(seed, r, (ALT_STREAM, alt_index, plan.n))
    return _features(model.sample(plan.n, rng), plan, rng)


# ---------------------------------------------------------------------------
# statistics from features


def _weights(test: TestSpec, p: int, K: int) -> np.ndarray:
    lam = float(test.params["lambda"])
    return CoefficientSequence.from_family(test.name, p, lam, K).coeffs


def _kfold_z(F: np.ndarray, plan: _Plan, slot: int) -> tuple[np.ndarray, np.ndarray]:
    """Selected grid index and standardized ``T_n`` at that index, per row."""
    W = plan.weights
    idx = F[:, plan.K + 2 + slot].astype(int)
    sd = np.sqrt((plan.n - 1) / plan.n * W.limit_var[idx])
    T = np.einsum("ik,ik->i", F[:, : plan.K], W.C[idx])
    return idx, (T - W.mean[idx]) / sd


def _grid_null_sorted(null_F: np.ndarray, plan: _Plan) -> np.ndarray:
    """Null ``T_n(lambda)`` for every grid point, each column sorted ascending."""
    return np.sort(null_F[:, : plan.K] @ plan.weights.C.T, axis=0)


def _kfold_pvalue(F: np.ndarray, plan: _Plan, slot: int, null_sorted: np.ndarray) -> np.ndarray:
    """Fixed-``lambda`` Monte Carlo p-value of ``T_n(lambda_hat)``, per row."""
    W = plan.weights
    idx = F[:, plan.K + 2 + slot].astype(int)
    T = np.einsum("ik,ik->i", F[:, : plan.K], W.C[idx])
    M = null_sorted.shape[0]
    ge = np.array([M - np.searchsorted(null_sorted[:, g], t, side="left") for g, t in zip(idx, T)])
    return (1.0 + ge) / (M + 1.0)


def _statistic(test: TestSpec, F: np.ndarray, plan: _Plan, lam_oracle: float | None, kfold_slot: int | None, null_sorted=None):
    """Values of ``test`` for every row of the feature matrix ``F``."""
    K = plan.K
    A = F[:, :K]
    if test.name in ("stein", "dksd", "softmax"):
        b = _weights(test, plan.p, K)
        val = A @ b
        return val / plan.n if test.name == "dksd" else val
    if test.name == "rayleigh":
        return F[:, K]
    if test.name == "bingham":
        return F[:, K + 1]
    if test.name == "stein_oracle":
        return A @ CoefficientSequence.stein(plan.p, lam_oracle, K).coeffs
    if test.params.get("calibration", KFOLD_DEFAULT) == "pvalue":
        return -_kfold_pvalue(F, plan, kfold_slot, null_sorted)
    return _kfold_z(F, plan, kfold_slot)[1]


def _max_lambda(tests, grid: LambdaGrid) -> float:
    lams = [float(t.params["lambda"]) for t in tests if "lambda" in t.params]
    if any(t.name in ("stein_oracle", "stein_kfold") for t in tests):
        lams.append(max(grid.values))
    return max(lams) if lams else 1.0


# ---------------------------------------------------------------------------
# results


@dataclass
class PowerTable:
    """Rejection percentages for rows (alternative, n) and test columns."""

    tests: list
    rows: list  # (alternative label, n)
    rates: np.ndarray  # percent, shape (rows, tests)
    se: np.ndarray
    best: np.ndarray  # bool
    errors: dict = field(default_factory=dict)  # (row, col) -> message
    indicators: dict = field(default_factory=dict, repr=False)  # (row, col) -> bool vector
    critical_values: dict = field(default_factory=dict)  # (test label, n) -> value
    selected_lambda: dict = field(default_factory=dict)  # (alt label, n) -> oracle lambda
    meta: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    def rate(self, alternative: str, n: int, test: str) -> float:
        return float(self.rates[self.rows.index((alternative, n)), self.tests.index(test)])


def paired_onesided_test(rej_a, rej_b, level: float = 0.05) -> bool:
    """True iff ``a`` rejects significantly less often than ``b`` (paired one-sided t-test)."""
    a = np.asarray(rej_a, dtype=float)
    b = np.asarray(rej_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DomainError("indicator vectors must be 1-D with equal length")
    if a.size < 30:
        raise DomainError("paired test needs at least 30 replicates")
    d = a - b
    mean = d.mean()
    sd = d.std(ddof=1)
    if sd == 0:
        return bool(mean < 0)
    t = mean / (sd / math.sqrt(d.size))
    return bool(stats.t.cdf(t, d.size - 1) < level)


def _mark_best(ind: list, rates: np.ndarray, level: float) -> np.ndarray:
    out = np.zeros(len(ind), dtype=bool)
    live = [j for j, v in enumerate(ind) if v is not None]
    if not live:
        return out
    top = max(live, key=lambda j: rates[j])
    for j in live:
        out[j] = j == top or not paired_onesided_test(ind[j], ind[top], level)
    return out


def run_power_study(config: ExperimentConfig, workers: int = 1) -> PowerTable:
    """Rejection rates of every test against every alternative and sample size."""
    t0 = time.perf_counter()
    p, seed = config.p, config.seed
    tests = list(config.tests)
    kfold_tests = [t for t in tests if t.name == "stein_kfold"]
    K = truncation_order(p, _max_lambda(tests, config.grid))
    weights = GridWeights.build(p, config.grid, K) if any(t.name in ("stein_oracle", "stein_kfold") for t in tests) else None

    labels = [t.label for t in tests]
    rows, rates, ses, bests = [], [], [], []
    errors, indicators, crit, selected = {}, {}, {}, {}

    pilots = {}
    if any(t.name == "stein_oracle" for t in tests):
        N = max(int(t.params.get("pilot", 10000)) for t in tests if t.name == "stein_oracle")
        for a_idx, model in enumerate(config.alternatives):
            Y = model.sample(N, replicate_rng(seed, 0, (PILOT_STREAM, a_idx)))
            pilots[a_idx] = 2.0 * pair_sums(Y, K) / (N * (N - 1))

    for n in config.ns:
        plan = _Plan(n, p, K, tuple(int(t.params.get("folds", 20)) for t in kfold_tests), weights)
        null_F = map_replicates(partial(_null_features, plan, seed), config.M_critical, workers)
        kslot = {id(t): i for i, t in enumerate(kfold_tests)}
        null_sorted = _grid_null_sorted(null_F, plan) if kfold_tests else None
        if kfold_tests:
            sd = np.sqrt((n - 1) / n * weights.limit_var)
            grid_null_z = (null_F[:, :K] @ weights.C.T - weights.mean) / sd
            cv_grid = np.array([order_statistic(grid_null_z[:, g], config.alpha) for g in range(grid_null_z.shape[1])])
        for a_idx, model in enumerate(config.alternatives):
            row = len(rows)
            rows.append((model.label, n))
            lam_oracle = None
            if pilots:
                A_bar = (n - 1) * pilots[a_idx] + gegenbauer_at_one(np.arange(1, K + 1), p)
                lam_oracle = config.grid.values[int(np.argmax(weights.scores(A_bar, n)))]
                selected[(model.label, n)] = lam_oracle
            try:
                alt_F = map_replicates(partial(_alt_features, plan, model, a_idx, seed), config.M_power, workers)
            except Exception as exc:  # a failed sampler voids the whole row
                alt_F = None
                for j in range(len(tests)):
                    errors[(row, j)] = repr(exc)
            r_rates, r_se, r_ind = [], [], []
            for j, test in enumerate(tests):
                if alt_F is None:
                    r_rates.append(np.nan)
                    r_se.append(np.nan)
                    r_ind.append(None)
                    continue
                try:
                    slot = kslot.get(id(test))
                    obs = _statistic(test, alt_F, plan, lam_oracle, slot, null_sorted)
                    if test.name == "stein_kfold" and test.params.get("calibration", KFOLD_DEFAULT) == "fixed":
                        idx = alt_F[:, K + 2 + slot].astype(int)
                        rej = obs > cv_grid[idx]
                    else:
                        cv = order_statistic(_statistic(test, null_F, plan, lam_oracle, slot, null_sorted), config.alpha)
                        if test.name != "stein_oracle":
                            crit[(test.label, n)] = cv
                        rej = obs > cv
                except Exception as exc:
                    errors[(row, j)] = repr(exc)
                    r_rates.append(np.nan)
                    r_se.append(np.nan)
                    r_ind.append(None)
                    continue
                ph = rej.mean()
                r_rates.append(100.0 * ph)
                r_se.append(100.0 * math.sqrt(ph * (1.0 - ph) / rej.size))
                r_ind.append(rej)
                indicators[(row, j)] = rej
            rates.append(r_rates)
            ses.append(r_se)
            bests.append(_mark_best(r_ind, np.array(r_rates), 0.05))
    meta = {
        "software": "steinunif",
        "version": VERSION,
        "seed": seed,
        "alpha": config.alpha,
        "M_critical": config.M_critical,
        "M_power": config.M_power,
        "critical_value_rule": "ceil((1-alpha) M)-th order statistic; reject iff statistic > critical value",
        "config": config.to_dict(),
        "critical_values": [{"test": k[0], "n": k[1], "value": v} for k, v in sorted(crit.items())],
        "oracle_lambda": [{"alternative": k[0], "n": k[1], "lambda": v} for k, v in selected.items()],
    }
    return PowerTable(
        labels,
        rows,
        np.array(rates, dtype=float).reshape(len(rows), len(tests)),
        np.array(ses, dtype=float).reshape(len(rows), len(tests)),
        np.array(bests, dtype=bool).reshape(len(rows), len(tests)),
        errors,
        indicators,
        crit,
        selected,
        meta,
        time.perf_counter() - t0,
    )


_COLUMNS = ["alternative", "n", "test", "rejection_pct", "se_pct", "best", "error"]


def emit_table(table: PowerTable, path) -> None:
    """Write ``table`` as long-format CSV plus a ``<path>.meta.json`` sidecar."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_COLUMNS)
    for i, (alt, n) in enumerate(table.rows):
        for j, test in enumerate(table.tests):
            err = table.errors.get((i, j), "")
            rate = "" if err else f"{table.rates[i, j]:.2f}"
            se = "" if err else f"{table.se[i, j]:.2f}"
            w.writerow([alt, n, test, rate, se, str(bool(table.best[i, j])).lower(), err])
    with open(path, "w", newline="") as fh:
        fh.write(buf.getvalue())
    with open(f"{path}.meta.json", "w") as fh:
        json.dump(table.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_table(path) -> list[dict]:
    """Rows of a CSV written by :func:`emit_table` with typed fields."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                {
                    "alternative": row["alternative"],
                    "n": int(row["n"]),
                    "test": row["test"],
                    "rejection_pct": float(row["rejection_pct"]) if row["rejection_pct"] else None,
                    "se_pct": float(row["se_pct"]) if row["se_pct"] else None,
                    "best": row["best"] == "true",
                    "error": row["error"],
                }
            )
    return out
