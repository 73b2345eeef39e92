"""Adam optimizer with bias-corrected moment estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch


@dataclass
class AdamState:
    """Per-parameter first/second moments plus the shared step count."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def adam_update(params: dict, grads: dict, state: AdamState) -> None:
    """One in-place step: theta -= lr * m_hat / (sqrt(v_hat) + eps)."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} != param shape {p.shape} for {name}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


class Adam:
    """Optimizer facade over a model's layers; one moment pair per tensor."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def step(self, layers) -> None:
        self.state.t += 1
        b1, b2 = self.state.beta1, self.state.beta2
        bc1 = 1.0 - b1**self.state.t
        bc2 = 1.0 - b2**self.state.t
        for li, layer in enumerate(layers):
            for name, p in layer.params.items():
                g = layer.grads[name]
                if g.shape != p.shape:
                    raise ShapeMismatch(
                        f"layer {li} {layer.kind}.{name}: grad {g.shape} != param {p.shape}"
                    )
                key = f"{li}.{name}"
                if key not in self.state.m:
                    self.state.m[key] = np.zeros_like(p)
                    self.state.v[key] = np.zeros_like(p)
                m = self.state.m[key]
                v = self.state.v[key]
                m *= b1
                m += (1 - b1) * g
                v *= b2
                v += (1 - b2) * (g * g)
                p -= self.state.lr * (m / bc1) / (np.sqrt(v / bc2) + self.state.eps)
