import numpy as np
import pytest

from skipq import nets
from skipq.errors import ConfigError
from skipq.optim import (
    GLOBAL_NORM_CLIP,
    OptimizerConfig,
    clip_by_global_norm,
    global_grad_norm,
    rmsprop_step,
)


def one_param_net():
    p = nets.build_network([nets.dense(1)], (1,), 1, seed=0)
    p.weights[0][:] = 1.0
    p.biases[0][:] = 0.0
    return p


def grads_like(params, w_value, b_value=0.0):
    return nets.Gradients(
        weights=[np.full_like(w, w_value) for w in params.weights],
        biases=[np.full_like(b, b_value) for b in params.biases],
    )


def test_unit_gradient_moves_by_learning_rate():
    # decay 0 and tiny epsilon: g / sqrt(g^2) = 1, so the step is ~lr
    p = one_param_net()
    cfg = OptimizerConfig(learning_rate=0.1, decay=0.0, epsilon_rms=1e-12)
    rmsprop_step(p, grads_like(p, 1.0), cfg)
    assert p.weights[0][0] == pytest.approx(0.9, abs=1e-9)


def test_zero_gradient_leaves_params():
    p = one_param_net()
    before = p.weights[0].copy()
    rmsprop_step(p, grads_like(p, 0.0), OptimizerConfig())
    assert np.array_equal(p.weights[0], before)


def test_global_norm_clip_scales_by_excess():
    g = nets.Gradients(weights=[np.array([3.0, 4.0])], biases=[np.zeros(1)])
    assert global_grad_norm(g) == pytest.approx(5.0)
    clipped = clip_by_global_norm(g, 1.0)
    assert np.allclose(clipped.weights[0], [0.6, 0.8])


def test_global_norm_clip_mode_applied_in_step():
    p = one_param_net()
    cfg = OptimizerConfig(learning_rate=0.1, decay=0.0, epsilon_rms=1e-12,
                          clip_mode=GLOBAL_NORM_CLIP, clip_value=1.0)
    # gradient norm 5 -> effective gradient 1.0 on the weight, 0 on bias
    g = nets.Gradients(weights=[np.array([5.0])], biases=[np.zeros(1)])
    rmsprop_step(p, g, cfg)
    assert p.weights[0][0] == pytest.approx(0.9, abs=1e-9)


def test_norm_below_clip_untouched():
    g = nets.Gradients(weights=[np.array([0.3])], biases=[np.array([0.4])])
    clipped = clip_by_global_norm(g, 1.0)
    assert clipped.weights[0][0] == 0.3 and clipped.biases[0][0] == 0.4


def test_nonfinite_gradient_fails_fast():
    p = one_param_net()
    before = p.weights[0].copy()
    g = grads_like(p, np.nan)
    with pytest.raises(ValueError, match="non-finite"):
        rmsprop_step(p, g, OptimizerConfig())
    assert np.array_equal(p.weights[0], before)


def test_params_stay_finite_over_many_steps():
    p = nets.build_network([nets.dense(4), nets.rectifier(), nets.dense(2)], (3,), 2, seed=3)
    cfg = OptimizerConfig(learning_rate=0.01)
    rng = np.random.default_rng(0)
    for _ in range(500):
        g = nets.Gradients(
            weights=[rng.normal(scale=10.0, size=w.shape) for w in p.weights],
            biases=[rng.normal(scale=10.0, size=b.shape) for b in p.biases],
        )
        rmsprop_step(p, g, cfg)
    for arr in p.weights + p.biases + p.sq_avg_w + p.sq_avg_b:
        assert np.all(np.isfinite(arr))


def test_accumulator_recursion():
    p = one_param_net()
    cfg = OptimizerConfig(learning_rate=0.1, decay=0.5, epsilon_rms=0.01)
    rmsprop_step(p, grads_like(p, 2.0), cfg)
    # acc = 0.5*0 + 0.5*4 = 2
    assert p.sq_avg_w[0][0] == pytest.approx(2.0)
    rmsprop_step(p, grads_like(p, 2.0), cfg)
    # acc = 0.5*2 + 0.5*4 = 3
    assert p.sq_avg_w[0][0] == pytest.approx(3.0)


def test_config_validation():
    with pytest.raises(ConfigError):
        OptimizerConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        OptimizerConfig(decay=1.0)
    with pytest.raises(ConfigError):
        OptimizerConfig(clip_mode="nonsense")
