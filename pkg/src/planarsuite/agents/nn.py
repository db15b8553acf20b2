"""Minimal numpy multilayer perceptron with manual backpropagation, and Adam."""

import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ContractError, ParameterError

ACTIVATIONS = ("relu", "tanh", "linear")


def _activate(kind: str, z: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(kind: str, z: np.ndarray, y: np.ndarray) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(float)
    if kind == "tanh":
        return 1.0 - y * y
    return np.ones_like(z)


class Dense:
    """Affine layer followed by an elementwise activation."""

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        activation: str,
        rng: np.random.Generator,
        init_scale: Optional[float] = None,
    ) -> None:
        if activation not in ACTIVATIONS:
            raise ParameterError(f"Unknown activation '{activation}'; expected one of {ACTIVATIONS}")
        bound = init_scale if init_scale is not None else 1.0 / np.sqrt(in_dim)
        self.activation = activation
        self.W = rng.uniform(-bound, bound, size=(in_dim, out_dim))
        self.b = rng.uniform(-bound, bound, size=out_dim)
        self._x: Optional[np.ndarray] = None
        self._z: Optional[np.ndarray] = None
        self._y: Optional[np.ndarray] = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        self._z = x @ self.W + self.b
        self._y = _activate(self.activation, self._z)
        return self._y

    def backward(self, grad_y: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gradients with respect to ``(x, W, b)``, summed over the batch."""
        if self._x is None:
            raise ContractError("backward() called before forward()")
        grad_z = grad_y * _activation_grad(self.activation, self._z, self._y)
        return grad_z @ self.W.T, self._x.T @ grad_z, grad_z.sum(axis=0)


class Mlp:
    """
    Feed-forward network of ``Dense`` layers with ReLU hidden units.

    An optional ``extra`` input (for instance the action of a critic) is
    concatenated to the hidden activations entering layer ``extra_at``.
    """

    def __init__(
        self,
        input_dim: int,
        hidden_sizes: Sequence[int],
        output_dim: int,
        rng: np.random.Generator,
        output_activation: str = "linear",
        extra_dim: int = 0,
        extra_at: int = 1,
        final_init: Optional[float] = None,
    ) -> None:
        sizes = [input_dim, *hidden_sizes, output_dim]
        if any(s <= 0 for s in sizes):
            raise ParameterError(f"Layer sizes must be positive, got {sizes}")
        if extra_dim and not 0 < extra_at < len(sizes) - 1:
            raise ParameterError(f"extra_at must index a hidden layer, got {extra_at}")
        self.input_dim = input_dim
        self.output_dim = output_dim
        self.extra_dim = extra_dim
        self.extra_at = extra_at
        self.layers: List[Dense] = []
        n_layers = len(sizes) - 1
        for i in range(n_layers):
            in_dim = sizes[i] + (extra_dim if extra_dim and i == extra_at else 0)
            last = i == n_layers - 1
            self.layers.append(
                Dense(
                    in_dim,
                    sizes[i + 1],
                    output_activation if last else "relu",
                    rng,
                    init_scale=final_init if last else None,
                )
            )

    @property
    def parameters(self) -> List[np.ndarray]:
        """Weight and bias arrays in layer order (live references)."""
        params: List[np.ndarray] = []
        for layer in self.layers:
            params.extend([layer.W, layer.b])
        return params

    def get_params(self) -> List[np.ndarray]:
        return [p.copy() for p in self.parameters]

    def set_params(self, params: Sequence[np.ndarray]) -> None:
        for target, value in zip(self.parameters, params):
            if target.shape != np.shape(value):
                raise ContractError(f"Parameter shape {np.shape(value)} != {target.shape}")
            target[...] = value

    def copy(self) -> "Mlp":
        clone = copy.deepcopy(self)
        for layer in clone.layers:
            layer._x = layer._z = layer._y = None
        return clone

    def forward(self, x: np.ndarray, extra: Optional[np.ndarray] = None) -> np.ndarray:
        """Batched forward pass; ``x`` is ``(batch, input_dim)``."""
        h = np.atleast_2d(np.asarray(x, dtype=float))
        if h.shape[1] != self.input_dim:
            raise ContractError(f"Expected input width {self.input_dim}, got {h.shape[1]}")
        if self.extra_dim:
            if extra is None:
                raise ContractError("This network needs an extra input")
            extra = np.atleast_2d(np.asarray(extra, dtype=float))
            if extra.shape != (h.shape[0], self.extra_dim):
                raise ContractError(
                    f"Expected extra input of shape {(h.shape[0], self.extra_dim)}, got {extra.shape}"
                )
        for i, layer in enumerate(self.layers):
            if self.extra_dim and i == self.extra_at:
                h = np.concatenate([h, extra], axis=1)
            h = layer.forward(h)
        return h

    def backward(
        self, grad_output: np.ndarray
    ) -> Tuple[List[np.ndarray], np.ndarray, Optional[np.ndarray]]:
        """
        Backpropagate ``grad_output`` through the last forward pass.

        Returns:
            Parameter gradients aligned with ``parameters``, the gradient with
            respect to the input, and the gradient with respect to ``extra``
            (None when the network has no extra input)
        """
        grads: List[np.ndarray] = []
        grad_extra = None
        grad = np.atleast_2d(np.asarray(grad_output, dtype=float))
        for i in range(len(self.layers) - 1, -1, -1):
            grad, grad_W, grad_b = self.layers[i].backward(grad)
            grads[:0] = [grad_W, grad_b]
            if self.extra_dim and i == self.extra_at:
                grad, grad_extra = grad[:, : -self.extra_dim], grad[:, -self.extra_dim:]
        return grads, grad, grad_extra


@dataclass
class AdamMoments:
    first: List[np.ndarray]
    second: List[np.ndarray]
    step: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> "AdamMoments":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(
    params: Sequence[np.ndarray],
    grads: Sequence[np.ndarray],
    moments: AdamMoments,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> List[np.ndarray]:
    """
    One bias-corrected Adam update (descending ``grads``).

    ``moments`` is advanced in place; the updated parameters are returned
    as new arrays.
    """
    moments.step += 1
    t = moments.step
    updated = []
    for i, (p, g) in enumerate(zip(params, grads)):
        moments.first[i] = beta1 * moments.first[i] + (1.0 - beta1) * g
        moments.second[i] = beta2 * moments.second[i] + (1.0 - beta2) * g * g
        m_hat = moments.first[i] / (1.0 - beta1**t)
        v_hat = moments.second[i] / (1.0 - beta2**t)
        updated.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
    return updated


@dataclass
class Adam:
    """Adam optimiser bound to one network's parameters."""

    net: Mlp
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    moments: AdamMoments = field(init=False)

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ParameterError(f"Learning rate must be positive, got {self.lr}")
        self.moments = AdamMoments.zeros_like(self.net.parameters)

    def step(self, grads: Sequence[np.ndarray]) -> None:
        params = adam_step(
            self.net.parameters, grads, self.moments, self.lr, self.beta1, self.beta2, self.eps
        )
        self.net.set_params(params)

    def state_dict(self) -> Dict[str, object]:
        return {
            "first": [m.copy() for m in self.moments.first],
            "second": [v.copy() for v in self.moments.second],
            "step": self.moments.step,
        }

    def load_state_dict(self, state: Dict[str, object]) -> None:
        self.moments = AdamMoments(
            [np.array(m) for m in state["first"]],  # type: ignore[union-attr]
            [np.array(v) for v in state["second"]],  # type: ignore[union-attr]
            int(state["step"]),  # type: ignore[arg-type]
        )
