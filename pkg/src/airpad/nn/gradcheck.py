"""Central finite-difference verification of every layer's backward pass."""

from __future__ import annotations

import numpy as np

from .functional import cross_entropy, softmax, softmax_ce_grad
from .layers import LSTM, BatchNorm, Conv2D, Dense, Flatten, Layer, MaxPool2, ReLU


def _fd_scalar(f, arr: np.ndarray, h: float) -> np.ndarray:
    """Central differences of a scalar function w.r.t. every element of arr."""
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2 * h)
    return grad


def _rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = np.abs(analytic).max() + np.abs(numeric).max() + 1e-12
    return float(np.abs(analytic - numeric).max() / denom)


def check_layer(layer: Layer, x: np.ndarray, rng: np.random.Generator, h: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    Projects the output with a fixed random tensor so the check reduces to a
    scalar; covers the input gradient and every trainable parameter.
    """
    y = layer.forward(x, train=True)
    proj = rng.standard_normal(y.shape)

    def loss() -> float:
        return float((layer.forward(x, train=True) * proj).sum())

    layer.forward(x, train=True)
    dx = layer.backward(proj.astype(x.dtype)).copy()
    analytic = {"__x__": dx, **{k: g.copy() for k, g in layer.grads.items()}}

    worst = _rel_err(analytic["__x__"], _fd_scalar(loss, x, h))
    for name, param in layer.params.items():
        numeric = _fd_scalar(loss, param, h)
        worst = max(worst, _rel_err(analytic[name], numeric))
    return worst


def check_softmax_ce(rng: np.random.Generator, h: float = 1e-5) -> float:
    """Fused softmax + cross-entropy gradient vs finite differences."""
    logits = rng.standard_normal((4, 10))
    labels = rng.integers(0, 10, size=4)
    analytic = softmax_ce_grad(softmax(logits), labels) * len(labels)

    def loss() -> float:
        return cross_entropy(softmax(logits), labels) * len(labels)

    return _rel_err(analytic, _fd_scalar(loss, logits, h))


def run_all(seed: int = 0, h: float = 1e-5) -> dict[str, float]:
    """FD-check every layer type at float64 on small random instances."""
    rng = np.random.default_rng(seed)
    f64 = np.float64
    results: dict[str, float] = {}

    dense = Dense(6, 5, rng=rng, dtype=f64)
    results["dense"] = check_layer(dense, rng.standard_normal((3, 6)), rng, h)

    conv = Conv2D(2, 3, 3, stride=1, pad=1, rng=rng, dtype=f64)
    results["conv2d"] = check_layer(conv, rng.standard_normal((2, 2, 5, 5)), rng, h)

    conv_s2 = Conv2D(2, 2, 3, stride=2, pad=0, rng=rng, dtype=f64)
    results["conv2d_stride2"] = check_layer(conv_s2, rng.standard_normal((2, 2, 7, 7)), rng, h)

    pool = MaxPool2()
    results["maxpool2"] = check_layer(pool, rng.standard_normal((2, 2, 4, 4)), rng, h)

    bn2 = BatchNorm(4, dtype=f64)
    bn2.params["gamma"] = rng.uniform(0.5, 1.5, 4)
    bn2.params["beta"] = rng.uniform(-0.5, 0.5, 4)
    results["batchnorm_dense"] = check_layer(bn2, rng.standard_normal((6, 4)), rng, h)

    bn4 = BatchNorm(3, dtype=f64)
    bn4.params["gamma"] = rng.uniform(0.5, 1.5, 3)
    bn4.params["beta"] = rng.uniform(-0.5, 0.5, 3)
    results["batchnorm_conv"] = check_layer(bn4, rng.standard_normal((4, 3, 3, 3)), rng, h)

    # Keep ReLU inputs away from the kink where the subgradient convention
    # and finite differences legitimately disagree.
    x = rng.standard_normal((4, 6))
    x = np.where(np.abs(x) < 0.1, x + 0.3, x)
    results["relu"] = check_layer(ReLU(), x, rng, h)

    results["flatten"] = check_layer(Flatten(), rng.standard_normal((3, 2, 4, 4)), rng, h)

    lstm = LSTM(4, 5, rng=rng, dtype=f64)
    results["lstm"] = check_layer(lstm, rng.standard_normal((3, 3, 4)), rng, h)

    results["softmax_ce"] = check_softmax_ce(rng, h)
    return results


def conv2d_direct(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """Brute-force direct convolution oracle: explicit loops, no im2col."""
    n, c_in, h, win = x.shape
    c_out, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    ho = (h + 2 * pad - k) // stride + 1
    wo = (win + 2 * pad - k) // stride + 1
    out = np.zeros((n, c_out, ho, wo), dtype=x.dtype)
    for ni in range(n):
        for co in range(c_out):
            for i in range(ho):
                for j in range(wo):
                    acc = 0.0
                    for ci in range(c_in):
                        for ki in range(k):
                            for kj in range(k):
                                acc += (
                                    xp[ni, ci, i * stride + ki, j * stride + kj]
                                    * w[co, ci, ki, kj]
                                )
                    out[ni, co, i, j] = acc + b[co]
    return out
