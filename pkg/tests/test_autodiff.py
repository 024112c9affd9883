import numpy as np
import pytest

from backdoorlab.gnn import autodiff as ad
from backdoorlab.gnn.autodiff import Tensor, grad


def fd_check(f, x0, h=1e-6, atol=1e-6):
    """Central finite differences against reverse-mode for f: R^k -> R."""
    x = Tensor(x0)
    out = f(x)
    (g,) = grad(out, [x])
    num = np.zeros_like(x0)
    flat = x0.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f(Tensor(x0)).data)
        flat[i] = orig - h
        fm = float(f(Tensor(x0)).data)
        flat[i] = orig
        num.reshape(-1)[i] = (fp - fm) / (2 * h)
    np.testing.assert_allclose(g, num, atol=atol)


def test_square_at_three():
    x = Tensor(3.0)
    y = ad.mul(x, x)
    (g,) = grad(y, [x])
    assert g == pytest.approx(6.0)


def test_sigmoid_derivative_at_zero():
    x = Tensor(0.0)
    (g,) = grad(ad.sigmoid(x), [x])
    assert g == pytest.approx(0.25)


def test_each_primitive_against_finite_differences():
    rng = np.random.default_rng(0)
    x0 = rng.normal(size=(4, 3)) + 2.5  # keep log's domain positive
    fd_check(lambda x: ad.tsum(ad.mul(x, x)), x0.copy())
    fd_check(lambda x: ad.tsum(ad.relu(ad.sub(x, 2.5))), x0.copy(), atol=1e-4)
    fd_check(lambda x: ad.tsum(ad.leaky_relu(ad.sub(x, 2.5), 0.2)), x0.copy(), atol=1e-4)
    fd_check(lambda x: ad.tsum(ad.sigmoid(x)), x0.copy())
    fd_check(lambda x: ad.tsum(ad.exp(ad.mul(x, 0.3))), x0.copy())
    fd_check(lambda x: ad.tsum(ad.log(x)), x0.copy())
    fd_check(lambda x: ad.tmean(ad.div(x, 2.0)), x0.copy())
    w = np.arange(12.0).reshape(3, 4) / 10
    fd_check(lambda x: ad.tsum(ad.matmul(x, w)), x0.copy())
    fd_check(lambda x: ad.tsum(ad.gather(x, np.array([2, 0, 2]), axis=0)), x0.copy())
    fd_check(
        lambda x: ad.tsum(ad.mul(ad.segment_sum(x, np.array([1, 0, 1, 0]), 2, axis=0),
                                 np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]))),
        x0.copy(),
    )
    fd_check(lambda x: ad.tsum(ad.reshape(x, (2, 6))), x0.copy())


def test_matmul_stacked_broadcast():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(5, 3))
    B0 = rng.normal(size=(2, 3, 3))

    def f(b):
        return ad.tsum(ad.matmul(Tensor(A), b))

    fd_check(f, B0.copy())


def test_broadcast_add_bias():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(4, 3))

    def f(b):
        return ad.tsum(ad.mul(ad.add(Tensor(x), b), ad.add(Tensor(x), b)))

    fd_check(f, rng.normal(size=(3,)))


def test_gather_segment_are_adjoint():
    """<gather(x), y> == <x, segment_sum(y)> for matching index maps."""
    rng = np.random.default_rng(3)
    x = rng.normal(size=(5, 2))
    y = rng.normal(size=(7, 2))
    idx = rng.integers(0, 5, size=7)
    lhs = float(np.sum(np.take(x, idx, axis=0) * y))
    scat = np.zeros((5, 2))
    np.add.at(scat, idx, y)
    rhs = float(np.sum(x * scat))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_grad_accumulates_shared_subexpression():
    x = Tensor(2.0)
    y = ad.add(ad.mul(x, x), x)  # x^2 + x -> 2x + 1 = 5
    (g,) = grad(y, [x])
    assert g == pytest.approx(5.0)


def test_backward_rejects_non_scalar():
    x = Tensor(np.ones(3))
    with pytest.raises(ValueError):
        ad.mul(x, 2.0).backward()


def test_unreachable_param_gets_zero_gradient():
    x = Tensor(1.0)
    z = Tensor(1.0)
    y = ad.mul(x, 3.0)
    gx, gz = grad(y, [x, z])
    assert gx == pytest.approx(3.0)
    assert gz == pytest.approx(0.0)


def test_repeated_backward_does_not_leak_state():
    x = Tensor(4.0)
    (g1,) = grad(ad.mul(x, x), [x])
    (g2,) = grad(ad.mul(x, x), [x])
    assert g1 == g2 == pytest.approx(8.0)
