import numpy as np
import pytest

from skipq import nets
from skipq.errors import ConfigError


def small_dense():
    return [nets.dense(8), nets.rectifier(), nets.dense(3)]


class TestShapes:
    def test_reference_conv_stack(self):
        layers = [
            nets.conv(32, 8, 4), nets.rectifier(),
            nets.conv(64, 4, 2), nets.rectifier(),
            nets.conv(64, 3, 1), nets.rectifier(),
            nets.dense(1024), nets.rectifier(),
            nets.dense(36),
        ]
        shapes = nets.plan_shapes(layers, (84, 84, 4), 36)
        assert shapes[0] == (84, 84, 4)
        assert shapes[1] == (20, 20, 32)
        assert shapes[3] == (9, 9, 64)
        assert shapes[5] == (7, 7, 64)
        assert shapes[7] == (1024,)
        assert shapes[-1] == (36,)

    def test_dense_only_weight_lengths(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=0)
        assert [len(w) for w in p.weights] == [32, 24]

    def test_activation_shapes_exposed(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=0)
        assert nets.activation_shapes(p) == ((4,), (8,), (8,), (3,))

    def test_inconsistent_chain_names_layer(self):
        layers = [nets.conv(4, 9, 1), nets.dense(2)]
        with pytest.raises(ConfigError, match="layer 0"):
            nets.plan_shapes(layers, (6, 6, 1), 2)

    def test_wrong_output_count_rejected(self):
        with pytest.raises(ConfigError, match="expected"):
            nets.build_network(small_dense(), (4,), 5, seed=0)

    def test_conv_needs_3d_input(self):
        with pytest.raises(ConfigError, match="layer 0"):
            nets.plan_shapes([nets.conv(2, 2, 1), nets.dense(1)], (4,), 1)


class TestDeterminism:
    def test_same_seed_bit_identical(self):
        a = nets.build_network(small_dense(), (4,), 3, seed=42)
        b = nets.build_network(small_dense(), (4,), 3, seed=42)
        for wa, wb in zip(a.weights, b.weights):
            assert wa.tobytes() == wb.tobytes()
        for ba, bb in zip(a.biases, b.biases):
            assert ba.tobytes() == bb.tobytes()

    def test_different_seed_differs(self):
        a = nets.build_network(small_dense(), (4,), 3, seed=1)
        b = nets.build_network(small_dense(), (4,), 3, seed=2)
        assert a.weights[0].tobytes() != b.weights[0].tobytes()

    def test_init_respects_fan_in_bound(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=5)
        assert np.abs(p.weights[0]).max() <= 1 / np.sqrt(4)
        assert np.abs(p.weights[1]).max() <= 1 / np.sqrt(8)


class TestForward:
    def test_zero_params_zero_output(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=0)
        for w in p.weights:
            w[:] = 0
        for b in p.biases:
            b[:] = 0
        assert np.all(nets.forward(p, np.ones(4)) == 0)

    def test_identity_dense(self):
        p = nets.build_network([nets.dense(4)], (4,), 4, seed=0)
        p.weights[0][:] = np.eye(4).reshape(-1)
        p.biases[0][:] = 0
        v = np.array([1.5, -2.0, 0.0, 3.25])
        assert np.array_equal(nets.forward(p, v), v)

    def test_rectifier_clamps(self):
        p = nets.build_network([nets.dense(2), nets.rectifier(), nets.dense(2)], (2,), 2, seed=0)
        p.weights[0][:] = np.eye(2).reshape(-1)
        p.biases[0][:] = 0
        p.weights[1][:] = np.eye(2).reshape(-1)
        p.biases[1][:] = 0
        out = nets.forward(p, np.array([-1.0, 2.0]))
        assert np.array_equal(out, [0.0, 2.0])

    def test_shape_mismatch_rejected(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=0)
        with pytest.raises(ValueError, match="input shape"):
            nets.forward(p, np.ones(5))

    def test_conv_hand_computed(self):
        # one 2x2 filter, stride 1, on a 3x3 single-channel grid
        p = nets.build_network([nets.conv(1, 2, 1), nets.dense(1)], (3, 3, 1), 1, seed=0)
        p.weights[0][:] = [1.0, 2.0, 3.0, 4.0]  # w[0, u, v, 0]
        p.biases[0][:] = 0.5
        p.weights[1][:] = [1.0, 0.0, 0.0, 0.0]  # picks out the (0, 0) output
        p.biases[1][:] = 0.0
        x = np.arange(9, dtype=float).reshape(3, 3, 1)
        # window at (0,0): [[0,1],[3,4]] -> 0*1 + 1*2 + 3*3 + 4*4 = 27
        assert nets.forward(p, x)[0] == pytest.approx(27.5)


class TestBackward:
    def test_zero_output_grad(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=0)
        g = nets.backward(p, np.ones(4), np.zeros(3))
        assert all(np.all(w == 0) for w in g.weights)
        assert all(np.all(b == 0) for b in g.biases)

    def test_linear_case(self):
        # y = Wx: d(y . e_i)/dW_ij = x_j
        p = nets.build_network([nets.dense(3)], (4,), 3, seed=0)
        x = np.array([1.0, 2.0, 3.0, 4.0])
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1.0
            g = nets.backward(p, x, e)
            dw = g.weights[0].reshape(3, 4)
            assert np.array_equal(dw[i], x)
            assert np.all(dw[np.arange(3) != i] == 0)
            assert np.array_equal(g.biases[0], e)

    def test_output_grad_length_checked(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=0)
        with pytest.raises(ValueError, match="output_grad"):
            nets.backward(p, np.ones(4), np.zeros(4))


def finite_difference_grads(params, x, output_grad, h=1e-5):
    """Independent oracle: central differences of (output @ output_grad)."""

    def f():
        return float(nets.forward(params, x) @ output_grad)

    num = nets.Gradients(
        weights=[np.zeros_like(w) for w in params.weights],
        biases=[np.zeros_like(b) for b in params.biases],
    )
    for arrs, out in ((params.weights, num.weights), (params.biases, num.biases)):
        for arr, dest in zip(arrs, out):
            for i in range(len(arr)):
                old = arr[i]
                arr[i] = old + h
                fp = f()
                arr[i] = old - h
                fm = f()
                arr[i] = old
                dest[i] = (fp - fm) / (2 * h)
    return num


GRADCHECK_NETS = [
    ([nets.dense(8), nets.rectifier(), nets.dense(3)], (4,), 3, 11),
    ([nets.dense(6), nets.rectifier(), nets.dense(6), nets.rectifier(), nets.dense(2)], (5,), 2, 12),
    ([nets.conv(3, 3, 1), nets.rectifier(), nets.dense(4)], (6, 6, 2), 4, 13),
    ([nets.conv(2, 2, 2), nets.rectifier(), nets.conv(3, 2, 1), nets.rectifier(), nets.dense(5)], (7, 7, 1), 5, 14),
    ([nets.conv(4, 4, 3), nets.rectifier(), nets.dense(6), nets.rectifier(), nets.dense(3)], (8, 8, 1), 3, 15),
]


@pytest.mark.parametrize("layers,input_shape,out_count,seed", GRADCHECK_NETS)
def test_gradient_matches_finite_differences(layers, input_shape, out_count, seed):
    params = nets.build_network(layers, input_shape, out_count, seed)
    n_params = sum(len(w) for w in params.weights) + sum(len(b) for b in params.biases)
    assert n_params < 500
    rng = np.random.default_rng(seed + 1000)
    x = rng.normal(size=input_shape)
    output_grad = rng.normal(size=out_count)
    analytic = nets.backward(params, x, output_grad)
    numeric = finite_difference_grads(params, x, output_grad)
    for a, n in zip(analytic.weights + analytic.biases, numeric.weights + numeric.biases):
        rel = np.abs(a - n) / np.maximum(np.abs(a) + np.abs(n), 1e-6)
        assert rel.max() < 1e-4


class TestCopy:
    def test_copy_is_independent(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=0)
        c = nets.copy_params(p)
        p.weights[0][:] += 1.0
        assert not np.array_equal(c.weights[0], p.weights[0])

    def test_copy_of_copy_equals_original(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=0)
        cc = nets.copy_params(nets.copy_params(p))
        for a, b in zip(p.weights, cc.weights):
            assert a.tobytes() == b.tobytes()

    def test_forward_agrees_right_after_copy(self):
        p = nets.build_network(small_dense(), (4,), 3, seed=0)
        c = nets.copy_params(p)
        x = np.array([0.1, -0.7, 2.0, 0.5])
        assert np.array_equal(nets.forward(p, x), nets.forward(c, x))
