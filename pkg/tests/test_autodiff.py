import numpy as np
import numpy.testing as npt
import pytest

from codedsmooth import autodiff as ad
from codedsmooth.autodiff import Parameter, Tensor
from codedsmooth.errors import ShapeError, ValidationError

from conftest import fd_grad, rel_err


def test_matmul_identity_and_arithmetic():
    eye = Tensor([[1.0, 0.0], [0.0, 1.0]])
    v = Tensor([[2.0], [3.0]])
    npt.assert_array_equal(ad.matmul(eye, v).data, [[2.0], [3.0]])
    out = ad.matmul(Tensor([[1.0, 2.0]]), Tensor([[3.0], [4.0]]))
    npt.assert_array_equal(out.data, [[11.0]])


def test_matmul_shape_error_mentions_both_shapes():
    with pytest.raises(ShapeError) as exc:
        ad.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))
    assert "(2, 3)" in str(exc.value)


def test_matmul_grad_matches_finite_differences():
    rng = np.random.default_rng(0)
    a = rng.uniform(-1, 1, (3, 4))
    b = rng.uniform(-1, 1, (4, 2))

    def objective():
        return ad.tsum(ad.matmul(Tensor(a, requires_grad=True), Tensor(b))).item()

    at = Tensor(a, requires_grad=True)
    ad.tsum(ad.matmul(at, Tensor(b))).backward()
    assert rel_err(at.grad, fd_grad(objective, a)) <= 1e-6


def test_apply_linear_operator_identity_and_sum_column():
    y = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    out = ad.apply_linear_operator(np.eye(3), Tensor(y))
    npt.assert_array_equal(out.data, y)
    ones_col = np.ones((3, 1))
    out = ad.apply_linear_operator(ones_col, Tensor([[1.0], [2.0], [3.0]]))
    npt.assert_array_equal(out.data, [[6.0]])


def test_apply_linear_operator_backward_vs_fd():
    rng = np.random.default_rng(1)
    mat = rng.uniform(-1, 1, (5, 4))
    y = rng.uniform(-1, 1, (5, 3))

    def objective():
        return ad.tsum(ad.apply_linear_operator(mat, Tensor(y, requires_grad=True))).item()

    yt = Tensor(y, requires_grad=True)
    ad.tsum(ad.apply_linear_operator(mat, yt)).backward()
    assert rel_err(yt.grad, fd_grad(objective, y)) <= 1e-6


def test_elementwise_basics():
    assert ad.relu(Tensor([-1.0])).data[0] == 0.0
    assert ad.tanh(Tensor([0.0])).data[0] == 0.0
    x = Tensor([3.0], requires_grad=True)
    ad.mul(x, x).backward()
    npt.assert_allclose(x.grad, [6.0])


def test_unsupported_broadcast_rejected():
    with pytest.raises(ShapeError):
        ad.add(Tensor(np.zeros((2, 3))), Tensor(np.zeros(3)))


def test_scalar_broadcast():
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    out = ad.tsum(ad.mul(x, Tensor(3.0)))
    out.backward()
    assert out.item() == 12.0
    npt.assert_array_equal(x.grad, 3.0 * np.ones((2, 2)))


def test_fanout_accumulates_both_contributions():
    # y = x*x + x*x  ->  dy/dx = 4x
    x = Tensor([1.5], requires_grad=True)
    y = ad.add(ad.mul(x, x), ad.mul(x, x))
    y.backward()
    npt.assert_allclose(x.grad, [6.0])


def test_losses_trivial_values():
    x = Tensor(np.arange(6.0).reshape(2, 3))
    assert ad.mse_loss(x, x.data).item() == 0.0
    loss = ad.softmax_cross_entropy(Tensor([[0.0, 0.0]]), np.array([[1.0, 0.0]]))
    npt.assert_allclose(loss.item(), np.log(2.0), rtol=1e-12)


def test_cross_entropy_grad_vs_fd():
    rng = np.random.default_rng(2)
    logits = rng.uniform(-1, 1, (4, 3))
    target = np.eye(3)[rng.integers(0, 3, 4)]

    def objective():
        return ad.softmax_cross_entropy(Tensor(logits, requires_grad=True), target).item()

    lt = Tensor(logits, requires_grad=True)
    ad.softmax_cross_entropy(lt, target).backward()
    assert rel_err(lt.grad, fd_grad(objective, logits)) <= 1e-6


@pytest.mark.parametrize("op,arity", [
    (ad.relu, 1), (ad.tanh, 1), (ad.add, 2), (ad.sub, 2), (ad.mul, 2),
])
def test_all_ops_grad_vs_fd(op, arity):
    rng = np.random.default_rng(3)
    for trial in range(5):
        args = [rng.uniform(-1, 1, (3, 2)) for _ in range(arity)]
        # keep relu inputs away from the kink
        if op is ad.relu:
            args[0][np.abs(args[0]) < 0.05] += 0.1

        for wrt in range(arity):
            def objective():
                tensors = [Tensor(a, requires_grad=(j == wrt)) for j, a in enumerate(args)]
                return ad.tsum(op(*tensors)).item()

            tensors = [Tensor(a, requires_grad=(j == wrt)) for j, a in enumerate(args)]
            ad.tsum(op(*tensors)).backward()
            assert rel_err(tensors[wrt].grad, fd_grad(objective, args[wrt])) <= 1e-5


def test_sgd_momentum_examples():
    p = Parameter([5.0])
    p.grad = np.array([2.0])
    ad.sgd_momentum_step([p], lr=1.0, momentum=0.0)
    npt.assert_array_equal(p.data, [3.0])
    assert p.grad is None

    q = Parameter([0.0])
    q.grad = np.array([1.0])
    ad.sgd_momentum_step([q], lr=1.0, momentum=0.9)
    q.grad = np.array([1.0])
    ad.sgd_momentum_step([q], lr=1.0, momentum=0.9)
    npt.assert_allclose(q.data, [-2.9])

    ad.sgd_momentum_step([], lr=1.0, momentum=0.9)  # no-op


def test_training_step_determinism():
    def run():
        rng = np.random.default_rng(7)
        w = Parameter(rng.normal(size=(3, 2)))
        x = rng.normal(size=(5, 3))
        for _ in range(10):
            loss = ad.mse_loss(ad.matmul(Tensor(x), w), np.zeros((5, 2)))
            loss.backward()
            ad.sgd_momentum_step([w], lr=0.1, momentum=0.9)
        return w.data.copy()

    npt.assert_array_equal(run(), run())


def test_checked_mode_rejects_nonfinite_and_bad_targets():
    ad.set_checked(True)
    try:
        with pytest.raises(ValidationError):
            Tensor([np.nan])
        with pytest.raises(ValidationError):
            ad.softmax_cross_entropy(Tensor([[0.0, 0.0]]), np.array([[0.5, 0.2]]))
    finally:
        ad.set_checked(False)
    Tensor([np.nan])  # unchecked mode accepts


def test_backward_requires_scalar():
    with pytest.raises(ShapeError):
        Tensor(np.zeros((2, 2)), requires_grad=True).backward()


def test_scale_op_and_gradient():
    x = Tensor([[1.0, -2.0]], requires_grad=True)
    out = ad.scale(x, -0.25)
    npt.assert_array_equal(out.data, [[-0.25, 0.5]])
    ad.tsum(out).backward()
    npt.assert_array_equal(x.grad, [[-0.25, -0.25]])


def test_float32_mode_optional():
    ad.set_dtype(np.float32)
    try:
        assert Tensor([1.0]).data.dtype == np.float32
    finally:
        ad.set_dtype(np.float64)
    assert Tensor([1.0]).data.dtype == np.float64
    with pytest.raises(ValidationError):
        ad.set_dtype(np.int32)
