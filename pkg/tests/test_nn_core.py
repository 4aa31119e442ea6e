"""MLP core tests: shapes, closed forms, and finite-difference oracles."""

import math

import numpy as np
import pytest

from zetaopt.nn_core import (
    LossConfig,
    MlpConfig,
    ParamEntry,
    ParamSet,
    entropy_regularized_loss,
    finite_diff_check,
    mlp_backward,
    mlp_forward,
    mlp_init,
    softmax,
)


def small_problem(seed, input_dim=5, hidden=4, classes=3, batch=6):
    params = mlp_init(MlpConfig(input_dim, hidden, classes, seed=seed))
    rng = np.random.default_rng(seed + 1000)
    x = rng.standard_normal((batch, input_dim))
    y = rng.integers(0, classes, size=batch)
    return params, x, y


class TestInit:
    def test_deterministic(self):
        a = mlp_init(MlpConfig(4, 3, 2, seed=7))
        b = mlp_init(MlpConfig(4, 3, 2, seed=7))
        for ea, eb in zip(a, b):
            assert (ea.value == eb.value).all()

    def test_shapes(self):
        p = mlp_init(MlpConfig(4, 3, 2, seed=0))
        assert p["w1"].value.shape == (3, 4)
        assert p["b1"].value.shape == (3, 1)
        assert p["w2"].value.shape == (2, 3)
        assert p["b2"].value.shape == (2, 1)

    def test_biases_zero(self):
        p = mlp_init(MlpConfig(9, 5, 4, seed=3))
        assert (p["b1"].value == 0.0).all()
        assert (p["b2"].value == 0.0).all()

    def test_weight_scale(self):
        p = mlp_init(MlpConfig(16, 50, 10, seed=1))
        assert np.abs(p["w1"].value).max() <= 0.25
        assert np.abs(p["w2"].value).max() <= 1.0 / math.sqrt(50)

    def test_matrix_flags(self):
        p = mlp_init(MlpConfig(4, 3, 2, seed=0))
        assert [e.is_matrix for e in p] == [True, False, True, False]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            MlpConfig(0, 3, 2)


class TestParamSet:
    def test_duplicate_names_rejected(self):
        w = np.zeros((2, 2))
        with pytest.raises(ValueError):
            ParamSet(
                [
                    ParamEntry("w", w.copy(), w.copy(), True),
                    ParamEntry("w", w.copy(), w.copy(), True),
                ]
            )

    def test_grad_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ParamSet([ParamEntry("w", np.zeros((2, 2)), np.zeros((2, 3)), True)])

    def test_flat_grads_order(self):
        p = ParamSet(
            [
                ParamEntry("a", np.zeros((1, 2)), np.array([[1.0, 2.0]]), False),
                ParamEntry("b", np.zeros((1, 1)), np.array([[3.0]]), False),
            ]
        )
        assert (p.flat_grads() == [1.0, 2.0, 3.0]).all()

    def test_checksum_tracks_values(self):
        p = mlp_init(MlpConfig(3, 2, 2, seed=5))
        c0 = p.checksum()
        assert c0 == p.checksum()
        p["w1"].value[0, 0] += 1.0
        assert p.checksum() != c0


class TestForward:
    def test_zero_params_zero_logits(self):
        p = mlp_init(MlpConfig(4, 3, 2, seed=0))
        for e in p:
            e.value[:] = 0.0
        out = mlp_forward(p, np.random.default_rng(0).standard_normal((5, 4)))
        assert (out == 0.0).all()

    def test_identity_chain(self):
        p = mlp_init(MlpConfig(1, 1, 1, seed=0))
        p["w1"].value[:] = 1.0
        p["w2"].value[:] = 1.0
        out = mlp_forward(p, np.array([[2.0]]))
        assert out[0, 0] == pytest.approx(2.0, abs=0)

    def test_output_shape(self):
        p, x, _ = small_problem(0, batch=5)
        assert mlp_forward(p, x).shape == (5, 3)

    def test_shape_mismatch_raises(self):
        p, _, _ = small_problem(0)
        with pytest.raises(ValueError):
            mlp_forward(p, np.zeros((4, 7)))


class TestSoftmax:
    def test_uniform_on_equal_logits(self):
        p = softmax(np.full((3, 10), 1.7))
        assert np.allclose(p, 0.1, atol=1e-15)

    def test_extreme_logits_stable(self):
        p = softmax(np.array([[1000.0, 0.0]]))
        assert np.isfinite(p).all()
        assert p[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert p[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_closed_form(self):
        p = softmax(np.log(np.array([[1.0, 3.0]])))
        assert p[0] == pytest.approx([0.25, 0.75], abs=1e-15)

    def test_rows_sum_to_one(self):
        logits = np.random.default_rng(4).uniform(-50.0, 50.0, size=(40, 7))
        p = softmax(logits)
        assert np.abs(p.sum(axis=1) - 1.0).max() <= 1e-12
        assert (p > 0.0).all() and (p < 1.0).all()


class TestEntropyRegularizedLoss:
    def test_uniform_probs_closed_form(self):
        # equal logits: CE = ln K and entropy = ln K, so loss = (1 - w) ln K
        logits = np.zeros((4, 10))
        labels = np.array([0, 3, 9, 5])
        loss, _ = entropy_regularized_loss(logits, labels, LossConfig(0.01))
        assert loss == pytest.approx(0.99 * math.log(10.0), rel=1e-12)

    def test_zero_weight_is_plain_ce(self):
        rng = np.random.default_rng(8)
        logits = rng.standard_normal((6, 4))
        labels = rng.integers(0, 4, size=6)
        loss, _ = entropy_regularized_loss(logits, labels, LossConfig(0.0))
        logp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        ce = -logp[np.arange(6), labels].mean()
        assert loss == pytest.approx(ce, rel=1e-12)

    def test_regularizer_strictly_lowers_loss(self):
        rng = np.random.default_rng(9)
        logits = rng.standard_normal((6, 4))
        labels = rng.integers(0, 4, size=6)
        plain, _ = entropy_regularized_loss(logits, labels, LossConfig(0.0))
        reg, _ = entropy_regularized_loss(logits, labels, LossConfig(0.01))
        assert reg < plain

    @pytest.mark.parametrize("seed", range(5))
    def test_gradient_matches_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        logits = rng.standard_normal((5, 4))
        labels = rng.integers(0, 4, size=5)
        cfg = LossConfig(0.01)
        _, grad = entropy_regularized_loss(logits, labels, cfg)
        h = 1e-6
        worst = 0.0
        for i in range(5):
            for j in range(4):
                z = logits.copy()
                z[i, j] += h
                lp, _ = entropy_regularized_loss(z, labels, cfg)
                z[i, j] -= 2 * h
                lm, _ = entropy_regularized_loss(z, labels, cfg)
                num = (lp - lm) / (2 * h)
                denom = max(abs(grad[i, j]), abs(num), 1e-8)
                worst = max(worst, abs(grad[i, j] - num) / denom)
        assert worst <= 1e-6

    def test_label_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            entropy_regularized_loss(np.zeros((2, 3)), np.array([0, 3]), LossConfig())


class TestBackward:
    def test_zero_upstream_zero_grads(self):
        p, x, _ = small_problem(2)
        mlp_backward(p, x, np.zeros((6, 3)))
        for e in p:
            assert (e.grad == 0.0).all()

    def test_hand_chain_rule_1x1(self):
        # scalar net: logit = w2 * relu(w1 * x + b1) + b2 with positive pre-act
        p = mlp_init(MlpConfig(1, 1, 1, seed=0))
        p["w1"].value[:] = 2.0
        p["b1"].value[:] = 0.5
        p["w2"].value[:] = -1.5
        p["b2"].value[:] = 0.25
        x = np.array([[3.0]])
        mlp_backward(p, x, np.array([[1.0]]))
        h = 2.0 * 3.0 + 0.5
        assert p["w2"].grad[0, 0] == pytest.approx(h, abs=0)
        assert p["b2"].grad[0, 0] == pytest.approx(1.0, abs=0)
        assert p["w1"].grad[0, 0] == pytest.approx(-1.5 * 3.0, abs=0)
        assert p["b1"].grad[0, 0] == pytest.approx(-1.5, abs=0)

    def test_grads_match_finite_differences(self):
        p, x, y = small_problem(3)
        cfg = LossConfig(0.01)
        _, dlg = entropy_regularized_loss(mlp_forward(p, x), y, cfg)
        mlp_backward(p, x, dlg)
        err = finite_diff_check(
            p,
            lambda ps: entropy_regularized_loss(mlp_forward(ps, x), y, cfg)[0],
            1e-5,
        )
        assert err <= 1e-6

    def test_upstream_shape_mismatch(self):
        p, x, _ = small_problem(0)
        with pytest.raises(ValueError):
            mlp_backward(p, x, np.zeros((6, 5)))


class TestFiniteDiffCheck:
    def test_exact_for_quadratic(self):
        rng = np.random.default_rng(6)
        vals = rng.uniform(0.5, 1.5, size=(4, 5))
        p = ParamSet([ParamEntry("w", vals.copy(), vals.copy(), False)])

        def loss_fn(ps):
            return 0.5 * float((ps["w"].value ** 2).sum())

        assert finite_diff_check(p, loss_fn, 1e-4) <= 1e-9

    def test_detects_corrupted_gradient(self):
        rng = np.random.default_rng(6)
        vals = rng.uniform(0.5, 1.5, size=(4, 5))
        grads = vals.copy()
        grads[0, 0] += 0.1
        p = ParamSet([ParamEntry("w", vals.copy(), grads, False)])

        def loss_fn(ps):
            return 0.5 * float((ps["w"].value ** 2).sum())

        assert finite_diff_check(p, loss_fn, 1e-4) > 1e-2

    def test_restores_values(self):
        p, x, y = small_problem(4)
        before = p.flat_values()
        finite_diff_check(p, lambda ps: float(ps.flat_values().sum()), 1e-6)
        assert (p.flat_values() == before).all()

    def test_step_must_be_positive(self):
        p, _, _ = small_problem(0)
        with pytest.raises(ValueError):
            finite_diff_check(p, lambda ps: 0.0, 0.0)


class TestDescentProperty:
    @pytest.mark.parametrize("seed", range(4))
    def test_small_gradient_step_decreases_loss(self, seed):
        p, x, y = small_problem(seed)
        cfg = LossConfig(0.01)
        loss0, dlg = entropy_regularized_loss(mlp_forward(p, x), y, cfg)
        mlp_backward(p, x, dlg)
        for e in p:
            e.value -= 1e-4 * e.grad
        loss1, _ = entropy_regularized_loss(mlp_forward(p, x), y, cfg)
        assert loss1 < loss0


class TestFullPipelineGradients:
    @pytest.mark.parametrize("seed", range(10))
    def test_gradient_check_across_seeds(self, seed):
        p, x, y = small_problem(seed, input_dim=6, hidden=5, classes=3, batch=8)
        cfg = LossConfig(0.01)
        _, dlg = entropy_regularized_loss(mlp_forward(p, x), y, cfg)
        mlp_backward(p, x, dlg)
        err = finite_diff_check(
            p,
            lambda ps: entropy_regularized_loss(mlp_forward(ps, x), y, cfg)[0],
            1e-5,
        )
        assert err <= 1e-6
