from typing import Dict, List, Mapping

import numpy as np

from errors import CompatibilityError
from services.autodiff import Tensor, add, matmul


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, name: str) -> Tensor:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=shape), requires_grad=True, name=name)


class Module:
    """Owns named parameter tensors and child modules, in registration order."""

    def __init__(self):
        self._params: Dict[str, Tensor] = {}
        self._children: Dict[str, "Module"] = {}

    def register(self, name: str, tensor: Tensor) -> Tensor:
        self._params[name] = tensor
        return tensor

    def add_child(self, name: str, module: "Module") -> "Module":
        self._children[name] = module
        return module

    def named_parameters(self) -> Dict[str, Tensor]:
        named = dict(self._params)
        for prefix, child in self._children.items():
            for name, tensor in child.named_parameters().items():
                named[f"{prefix}.{name}"] = tensor
        return named

    def parameters(self) -> List[Tensor]:
        return list(self.named_parameters().values())

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: t.values.copy() for name, t in self.named_parameters().items()}

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True) -> None:
        params = self.named_parameters()
        if strict and set(state) != set(params):
            missing = sorted(set(params) - set(state))
            extra = sorted(set(state) - set(params))
            raise CompatibilityError(f"parameter mismatch: missing {missing}, unexpected {extra}")
        for name, values in state.items():
            if name not in params:
                continue
            if params[name].shape != tuple(values.shape):
                raise CompatibilityError(
                    f"parameter '{name}' has shape {tuple(values.shape)}, model expects {params[name].shape}"
                )
            params[name].values = np.array(values, dtype=np.float64)


class Dense(Module):
    """x @ W + b with W of shape [in×out] and a bias row [1×out]."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.weight = self.register("weight", glorot_uniform(rng, (in_features, out_features), in_features, out_features, "weight"))
        self.bias = self.register("bias", Tensor(np.zeros((1, out_features)), requires_grad=True, name="bias"))

    def __call__(self, x: Tensor) -> Tensor:
        return add(matmul(x, self.weight), self.bias)
