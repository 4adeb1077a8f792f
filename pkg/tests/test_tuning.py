"""Lambda selection: pilot scores, grid search and k-fold selection."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steinunif.alternatives import AlternativeModel, beta_k_vmf
from steinunif.exceptions import DomainError, NumericError
from steinunif.null_dist import finite_n_mean_h0, finite_n_variance_h0
from steinunif.sampleset import uniform_points
from steinunif.specfun import gamma_kp, gegenbauer_at_one
from steinunif.statistic import c_kp, stein_statistic
from steinunif.tuning import (
    GridWeights,
    LambdaGrid,
    abar,
    fold_labels,
    kfold_scores,
    q_score,
    q_scores,
    select_lambda_kfold,
    select_lambda_tilde,
)

PILOT_N = 10_000


@pytest.fixture(scope="module")
def pilots():
    rng = np.random.default_rng(2024)
    return {
        "uniform": uniform_points(PILOT_N, 3, rng),
        "vmf": AlternativeModel("vmf", 3, {"kappa": 0.5}).sample(PILOT_N, rng),
        "mvmf": AlternativeModel("multi_vmf", 3, {"kappa": 30.0}).sample(PILOT_N, rng),
    }


class TestGrid:
    def test_default(self):
        g = LambdaGrid()
        assert len(g) == 300 and g.values[0] == 0.1 and g.values[-1] == 30.0

    @pytest.mark.parametrize("values", [(), (0.0, 1.0), (1.0, 0.5), (1.0, 1.0)])
    def test_invalid(self, values):
        with pytest.raises(DomainError):
            LambdaGrid(values)


class TestAbar:
    def test_uniform_pilot(self, pilots):
        est = abar(pilots["uniform"], 50, 6)
        ck1 = gegenbauer_at_one(np.arange(1, 7), 3)
        # Var of the pilot U-statistic under H0 is 2 gamma_k C_k(1) / (N (N-1))
        se = 49 * np.sqrt(2 * gamma_kp(np.arange(1, 7), 3) * ck1 / (PILOT_N * (PILOT_N - 1)))
        assert np.all(np.abs(est.abar - ck1) < 3 * se)

    def test_identical_points(self):
        Y = np.tile([[0.0, 1.0, 0.0]], (5, 1))
        est = abar(Y, 20, 4)
        assert np.allclose(est.abar, 20 * gegenbauer_at_one(np.arange(1, 5), 3))

    def test_vmf_closed_form(self):
        # E[C_1(X'Y)] = (beta_1 gamma_1)^2 C_1(1) by Funk-Hecke, applied twice
        kappa, n = 5.0, 50
        m = AlternativeModel("vmf", 3, {"kappa": kappa})
        Y = m.sample(PILOT_N, np.random.default_rng(3))
        est = abar(Y, n, 1)
        bg = beta_k_vmf(1, 3, kappa) * gamma_kp(1, 3)
        expected = (n - 1) * bg**2 + 1.0
        # Hoeffding: Var(U) ~ 4 Var(E[C_1(X'Y) | X]) / N
        se = (n - 1) * 2 * np.std(bg * (Y @ m.mu)) / math.sqrt(PILOT_N)
        assert abs(est.abar[0] - expected) < 3 * se

    def test_guards(self):
        with pytest.raises(DomainError):
            abar(np.eye(3)[:1], 10, 3)


class TestScore:
    def test_definition(self, pilots):
        est = abar(pilots["vmf"], 50, 30)
        lam = 1.3
        k = np.arange(1, 31)
        num = c_kp(k, 3, lam) @ est.abar - finite_n_mean_h0(3, lam, 30)
        assert q_score(lam, est) == pytest.approx(num / math.sqrt(finite_n_variance_h0(50, 3, lam, 30)), rel=1e-12)

    def test_uniform_pilot(self, pilots):
        scores = q_scores(abar(pilots["uniform"], 50, LambdaGrid().order(3)))
        assert np.max(np.abs(scores)) < 4

    def test_vmf_small_lambda(self, pilots):
        assert select_lambda_tilde(pilots["vmf"], 50) == 0.1

    def test_mvmf_large_lambda(self, pilots):
        assert select_lambda_tilde(pilots["mvmf"], 50) > 4

    def test_zero_variance(self, pilots):
        with pytest.raises(NumericError):
            q_scores(abar(pilots["vmf"][:100], 50, 9), LambdaGrid((1e-200,)))

    def test_single_point_grid(self, pilots):
        assert select_lambda_tilde(pilots["vmf"][:200], 50, LambdaGrid((2.5,))) == 2.5

    def test_deterministic(self, pilots):
        a = select_lambda_tilde(pilots["mvmf"][:500], 50)
        assert a == select_lambda_tilde(pilots["mvmf"][:500].copy(), 50)

    def test_tie_breaks_low(self):
        W = GridWeights.build(3, LambdaGrid((1.0, 2.0, 3.0)), 9)
        flat = GridWeights(3, W.grid, 9, np.zeros_like(W.C), np.zeros(3), np.ones(3))
        scores = flat.scores(np.ones(9), 50)
        assert np.all(scores == 0) and W.grid.values[int(np.argmax(scores))] == 1.0

    def test_scale_free(self, pilots):
        est = abar(pilots["mvmf"][:2000], 50, LambdaGrid().order(3))
        W = GridWeights.build(3)
        a = 7.3
        scaled = GridWeights(3, W.grid, W.K, a * W.C, a * W.mean, a * a * W.limit_var)
        assert np.argmax(scaled.scores(est.abar, 50)) == np.argmax(W.scores(est.abar, 50))

    def test_grid_refinement(self, pilots):
        coarse = LambdaGrid()
        fine = LambdaGrid(tuple(i / 20 for i in range(2, 601)))
        est = abar(pilots["mvmf"][:2000], 50, coarse.order(3))
        sc, sf = q_scores(est, coarse), q_scores(est, fine)
        lam = coarse.values[int(np.argmax(sc))]
        assert sf[fine.values.index(lam)] == pytest.approx(sc.max(), rel=1e-6)
        assert sf.max() >= sc.max()

    def test_statistic_mean_matches_score_numerator(self):
        # E[T_n] = sum_k c_k Abar_k with the exact Abar of a degenerate (identical) pilot
        Y = np.tile([[1.0, 0.0, 0.0]], (3, 1))
        X = np.tile([[1.0, 0.0, 0.0]], (50, 1))
        est = abar(Y, 50, 30)
        assert c_kp(np.arange(1, 31), 3, 2.0) @ est.abar == pytest.approx(stein_statistic(X, 2.0, 30), rel=1e-12)


class TestKFold:
    def test_labels(self):
        lab = fold_labels(103, 20, np.random.default_rng(0))
        counts = np.bincount(lab)
        assert counts.size == 20 and counts.min() >= 5 and counts.max() <= 6

    @settings(max_examples=25, deadline=None)
    @given(st.integers(2, 40), st.integers(2, 40), st.integers(0, 1000))
    def test_labels_balanced(self, n, folds, seed):
        if n < folds:
            with pytest.raises(DomainError):
                fold_labels(n, folds, np.random.default_rng(seed))
            return
        counts = np.bincount(fold_labels(n, folds, np.random.default_rng(seed)), minlength=folds)
        assert counts.min() >= 1 and counts.max() - counts.min() <= 1

    def test_leave_one_out(self):
        X = AlternativeModel("vmf", 3, {"kappa": 1.0}).sample(25, np.random.default_rng(1))
        lam = select_lambda_kfold(X, 25, rng=np.random.default_rng(2))
        assert lam in LambdaGrid().values

    def test_deterministic(self):
        X = AlternativeModel("vmf", 3, {"kappa": 0.5}).sample(100, np.random.default_rng(3))
        a = select_lambda_kfold(X, 20, rng=np.random.default_rng(4))
        b = select_lambda_kfold(X, 20, rng=np.random.default_rng(4))
        assert a == b

    def test_complement_scores(self):
        # each fold's score equals the pilot score with the complement as pilot
        X = AlternativeModel("vmf", 3, {"kappa": 1.0}).sample(40, np.random.default_rng(5))
        lab = fold_labels(40, 4, np.random.default_rng(6))
        W = GridWeights.build(3, LambdaGrid((0.5, 1.0, 3.0)), 12)
        expected = np.mean([W.scores(abar(X[lab != f], int(np.sum(lab == f)), 12).abar, int(np.sum(lab == f))) for f in range(4)], axis=0)
        assert np.allclose(kfold_scores(X, lab, W), expected, rtol=1e-10)

    def test_needs_rng(self):
        with pytest.raises(DomainError):
            select_lambda_kfold(uniform_points(20, 3, np.random.default_rng(0)), 4)

    def test_too_many_folds(self):
        with pytest.raises(DomainError):
            select_lambda_kfold(uniform_points(5, 3, np.random.default_rng(0)), 6, rng=np.random.default_rng(0))
