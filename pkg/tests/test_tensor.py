"""Autodiff engine: tape mechanics, accumulation, broadcasting."""

import numpy as np
import pytest

from gdnet.numcore import Tensor, ops


class TestBackwardBasics:
    def test_identity_gradient(self):
        p = Tensor(np.array(2.5), requires_grad=True)
        loss = p * 1.0
        loss.backward()
        assert p.grad == 1.0

    def test_square_gradient(self):
        p = Tensor(np.array(3.0), requires_grad=True)
        loss = ops.pow_const(p, 2.0)
        loss.backward()
        assert p.grad == pytest.approx(6.0)

    def test_fanout_accumulates(self):
        """x feeds two ops; d(x*y + x)/dx = y + 1 exactly."""
        x = Tensor(np.array(5.0), requires_grad=True)
        y = Tensor(np.array(2.0), requires_grad=True)
        loss = x * y + x
        loss.backward()
        assert x.grad == 3.0
        assert y.grad == 5.0

    def test_repeated_backward_accumulates(self):
        p = Tensor(np.array(3.0), requires_grad=True)
        ops.pow_const(p, 2.0).backward()
        ops.pow_const(p, 2.0).backward()
        assert p.grad == pytest.approx(12.0)

    def test_each_node_visited_once(self):
        """Diamond graph: z = (x+x) * (x+x); dz/dx = 8x, not double-counted."""
        x = Tensor(np.array(1.5), requires_grad=True)
        s = x + x
        z = s * s
        z.backward()
        assert x.grad == pytest.approx(8 * 1.5)

    def test_backward_on_detached_raises(self):
        t = Tensor(np.zeros(3))
        with pytest.raises(ValueError):
            t.backward()

    def test_backward_needs_scalar(self):
        t = Tensor(np.zeros(3), requires_grad=True)
        u = t * 2.0
        with pytest.raises(ValueError):
            u.backward()

    def test_deep_chain_no_recursion_limit(self):
        x = Tensor(np.array(1.0), requires_grad=True)
        y = x
        for _ in range(5000):
            y = y + 0.0
        y.backward()
        assert x.grad == 1.0


class TestBroadcasting:
    def test_add_broadcast_bias(self):
        x = Tensor(np.ones((4, 3)), requires_grad=True)
        b = Tensor(np.zeros(3), requires_grad=True)
        (x + b).sum().backward()
        np.testing.assert_array_equal(b.grad, [4.0, 4.0, 4.0])
        np.testing.assert_array_equal(x.grad, np.ones((4, 3)))

    def test_mul_broadcast_scalar_tensor(self):
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        g = Tensor(np.array([[2.0], [3.0]]), requires_grad=True)
        (x * g).sum().backward()
        np.testing.assert_array_equal(x.grad, [[2, 2, 2], [3, 3, 3]])
        np.testing.assert_array_equal(g.grad, [[0 + 1 + 2], [3 + 4 + 5]])

    def test_const_dtype_follows_tensor(self):
        x = Tensor(np.ones(3, dtype=np.float32), requires_grad=True)
        y = x * 0.5 + 1.0
        assert y.data.dtype == np.float32


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.0, 7.0], [0.5, -2.0]])
        out = ops.matmul_batched(Tensor(np.eye(2)), Tensor(a))
        np.testing.assert_array_equal(out.data, a)

    def test_hand_product(self):
        out = ops.matmul_batched(
            Tensor(np.array([[1.0, 2.0], [3.0, 4.0]])),
            Tensor(np.array([[1.0], [1.0]])),
        )
        np.testing.assert_array_equal(out.data, [[3.0], [7.0]])

    def test_batched_shape(self):
        a = Tensor(np.zeros((6, 64, 16)))
        b = Tensor(np.zeros((6, 16, 64)))
        assert ops.matmul_batched(a, b).shape == (6, 64, 64)

    def test_inner_dim_mismatch_raises(self):
        with pytest.raises(ValueError, match="inner"):
            ops.matmul_batched(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))

    def test_leading_broadcast_gradients(self):
        a = Tensor(np.random.default_rng(0).normal(size=(2, 4, 3, 5)), requires_grad=True)
        b = Tensor(np.random.default_rng(1).normal(size=(5, 7)), requires_grad=True)
        ops.matmul_batched(a, b).sum().backward()
        assert a.grad.shape == a.shape
        assert b.grad.shape == b.shape


class TestShapeOps:
    def test_transpose_roundtrip_grad(self):
        x = Tensor(np.random.default_rng(2).normal(size=(2, 3, 4)), requires_grad=True)
        y = ops.transpose(x, (2, 0, 1))
        ops.transpose(y, (1, 2, 0)).sum().backward()
        np.testing.assert_array_equal(x.grad, np.ones((2, 3, 4)))

    def test_concat_slice_inverse(self):
        a = Tensor(np.ones((1, 2, 3, 3)), requires_grad=True)
        b = Tensor(2 * np.ones((1, 1, 3, 3)), requires_grad=True)
        cat = ops.concat([a, b], axis=1)
        back = ops.slice_axis(cat, 1, 0, 2)
        np.testing.assert_array_equal(back.data, a.data)
        ops.slice_axis(cat, 1, 2, 3).sum().backward()
        np.testing.assert_array_equal(a.grad, np.zeros_like(a.data))
        np.testing.assert_array_equal(b.grad, np.ones_like(b.data))

    def test_roll_inverse(self):
        x = Tensor(np.arange(16.0).reshape(1, 1, 4, 4), requires_grad=True)
        y = ops.roll2d(x, -1, -2)
        z = ops.roll2d(y, 1, 2)
        np.testing.assert_array_equal(z.data, x.data)

    def test_determinism(self):
        x = Tensor(np.random.default_rng(3).normal(size=(2, 8)))
        a = ops.softmax_lastdim(x).data
        b = ops.softmax_lastdim(x).data
        assert np.array_equal(a, b)
