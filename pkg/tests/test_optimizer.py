import numpy as np
import pytest

from errors import ContractError
from services.autodiff import Tape, Tensor, mul, tensor_sum
from services.optimizer import Adam, AdamState, adam_step


def test_first_step_moves_by_lr_times_sign():
    param = Tensor([1.0, -2.0, 3.0], requires_grad=True)
    param.grad = np.array([0.5, -4.0, 1e-3])
    adam_step([param], AdamState())
    np.testing.assert_allclose(param.values, [1.0 - 0.001, -2.0 + 0.001, 3.0 - 0.001], atol=1e-7)


def test_zero_gradient_leaves_parameters_but_counts_the_step():
    values = np.array([[0.25, -1.5]])
    param = Tensor(values.copy(), requires_grad=True)
    state = AdamState()
    for _ in range(3):
        param.zero_grad()
        adam_step([param], state)
    assert np.array_equal(param.values, values)
    assert state.t == 3


def test_converges_on_a_parabola():
    theta = Tensor([1.0], requires_grad=True)
    optimizer = Adam([theta], lr=0.1)
    for _ in range(200):
        theta.zero_grad()
        with Tape() as tape:
            loss = tensor_sum(mul(theta, theta))
        tape.backward(loss)
        optimizer.step()
    assert abs(theta.values[0]) < 0.05


def test_missing_gradient_names_the_parameter():
    param = Tensor([1.0], requires_grad=True, name="head.weight")
    with pytest.raises(ContractError, match="head.weight"):
        adam_step([param], AdamState())


def test_moment_shape_mismatch():
    state = AdamState()
    state.bind([Tensor(np.zeros(3))])
    param = Tensor(np.zeros(2), requires_grad=True)
    param.zero_grad()
    with pytest.raises(ContractError):
        adam_step([param], state)


def test_large_gradients_are_scale_invariant():
    a = Tensor([0.0], requires_grad=True)
    b = Tensor([0.0], requires_grad=True)
    a.grad, b.grad = np.array([100.0]), np.array([200.0])
    adam_step([a], AdamState())
    adam_step([b], AdamState())
    assert abs(a.values[0] - b.values[0]) < 1e-10
