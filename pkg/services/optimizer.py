"""Adam with bias correction, operating in place on `Tensor.values`."""
import logging
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from errors import ContractError
from services.autodiff import Tensor

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)

    def bind(self, params: Sequence[Tensor]) -> None:
        """Allocates zeroed moment buffers matching `params` (once)."""
        if not self.m:
            self.m = [np.zeros_like(p.values) for p in params]
            self.v = [np.zeros_like(p.values) for p in params]


def adam_step(params: Sequence[Tensor], state: AdamState) -> None:
    """
    One Adam update:
    m <- b1*m + (1-b1)*g ; v <- b2*v + (1-b2)*g^2 ; theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
    """
    state.bind(params)
    if len(state.m) != len(params):
        raise ContractError(f"optimizer state tracks {len(state.m)} parameter(s), got {len(params)}")
    for i, param in enumerate(params):
        if param.grad is None:
            raise ContractError(f"parameter '{param.name or i}' has no gradient; call zero_grads before backward")
        if state.m[i].shape != param.values.shape:
            raise ContractError(
                f"moment buffer shape {state.m[i].shape} does not match parameter '{param.name or i}' {param.shape}"
            )

    state.t += 1
    bias1 = 1.0 - state.beta1**state.t
    bias2 = 1.0 - state.beta2**state.t
    for param, m, v in zip(params, state.m, state.v):
        g = param.grad
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        param.values -= state.lr * (m / bias1) / (np.sqrt(v / bias2) + state.eps)


class Adam:
    """Binds a parameter list to its `AdamState`."""

    def __init__(self, params: Sequence[Tensor], lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        self.state.bind(self.params)
        logger.debug("Adam bound to %d parameter tensor(s), lr=%s", len(self.params), lr)

    def step(self) -> None:
        adam_step(self.params, self.state)
