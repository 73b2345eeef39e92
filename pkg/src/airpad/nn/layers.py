"""Hand-derived layers: forward passes cache exactly what backward needs.

All layers operate on the dtype of their parameters (float32 for training,
float64 under gradient checking) and raise ShapeMismatch on incompatible
inputs rather than letting broadcasting hide bugs. Large intermediates live
in per-layer scratch buffers reused across steps; fresh multi-megabyte
allocations per batch dominate the step time otherwise.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch
from .functional import sigmoid


def he_uniform(rng: np.random.Generator, shape, fan_in: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def glorot_uniform(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


class Layer:
    """Base layer: trainable params, their grads, and non-trained buffers."""

    kind = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self._scratch: dict[str, np.ndarray] = {}

    def forward(self, x: np.ndarray, train: bool = False) -> np.ndarray:
        raise NotImplementedError

    def backward(self, dy: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def spec_args(self) -> dict:
        return {}

    def zero_grads(self):
        for k, p in self.params.items():
            self.grads[k] = np.zeros_like(p)

    def _buf(self, name: str, shape: tuple, dtype) -> np.ndarray:
        b = self._scratch.get(name)
        if b is None or b.shape != shape or b.dtype != dtype:
            b = np.empty(shape, dtype=dtype)
            self._scratch[name] = b
        return b


class Dense(Layer):
    kind = "dense"

    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator, dtype, init="he"):
        super().__init__()
        self.n_in, self.n_out = n_in, n_out
        if init == "he":
            w = he_uniform(rng, (n_in, n_out), n_in, dtype)
        else:
            w = glorot_uniform(rng, (n_in, n_out), n_in, n_out, dtype)
        self.params = {"w": w, "b": np.zeros(n_out, dtype=dtype)}
        self.zero_grads()

    def spec_args(self):
        return {"units": self.n_out}

    def forward(self, x, train=False):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeMismatch(f"dense expects (N, {self.n_in}), got {x.shape}")
        self._x = x
        out = self._buf("out", (x.shape[0], self.n_out), x.dtype)
        np.matmul(x, self.params["w"], out=out)
        out += self.params["b"]
        return out

    def backward(self, dy):
        np.matmul(self._x.T, dy, out=self.grads["w"])
        np.sum(dy, axis=0, out=self.grads["b"])
        dx = self._buf("dx", self._x.shape, dy.dtype)
        np.matmul(dy, self.params["w"].T, out=dx)
        return dx


class Conv2D(Layer):
    """Cross-correlation with zero padding, im2col + GEMM."""

    kind = "conv2d"

    def __init__(
        self,
        c_in: int,
        c_out: int,
        k: int,
        stride: int = 1,
        pad: int = 0,
        rng: np.random.Generator | None = None,
        dtype=np.float32,
        init="he",
    ):
        super().__init__()
        self.c_in, self.c_out, self.k = c_in, c_out, k
        self.stride, self.pad = stride, pad
        fan_in = c_in * k * k
        fan_out = c_out * k * k
        rng = rng or np.random.default_rng(0)
        if init == "he":
            w = he_uniform(rng, (c_out, c_in, k, k), fan_in, dtype)
        else:
            w = glorot_uniform(rng, (c_out, c_in, k, k), fan_in, fan_out, dtype)
        self.params = {"w": w, "b": np.zeros(c_out, dtype=dtype)}
        self.zero_grads()

    def spec_args(self):
        return {"out_channels": self.c_out, "k": self.k, "stride": self.stride, "pad": self.pad}

    def out_hw(self, h: int, w: int) -> tuple[int, int]:
        ho = (h + 2 * self.pad - self.k) // self.stride + 1
        wo = (w + 2 * self.pad - self.k) // self.stride + 1
        return ho, wo

    def forward(self, x, train=False):
        # Internally channel-major: columns live as (c*k*k, n*ho*wo) so both
        # the im2col fill and the col2im scatter run on long contiguous rows.
        if x.ndim != 4 or x.shape[1] != self.c_in:
            raise ShapeMismatch(f"conv2d expects (N, {self.c_in}, H, W), got {x.shape}")
        n, _, h, w = x.shape
        s, k, p = self.stride, self.k, self.pad
        c_in = self.c_in
        ho, wo = self.out_hw(h, w)
        if ho <= 0 or wo <= 0:
            raise ShapeMismatch(f"conv2d output would be empty for input {x.shape}")

        xp = self._scratch.get("xp")
        pshape = (c_in, n, h + 2 * p, w + 2 * p)
        if xp is None or xp.shape != pshape or xp.dtype != x.dtype:
            xp = np.zeros(pshape, dtype=x.dtype)
            self._scratch["xp"] = xp
        xp[:, :, p : p + h, p : p + w] = x.transpose(1, 0, 2, 3)  # border stays zero

        cols = self._buf("cols", (c_in * k * k, n * ho * wo), x.dtype)
        cols6 = cols.reshape(c_in, k, k, n, ho, wo)
        for ki in range(k):
            for kj in range(k):
                cols6[:, ki, kj] = xp[:, :, ki : ki + s * ho : s, kj : kj + s * wo : s]

        wmat = self.params["w"].reshape(self.c_out, -1)
        out2 = self._buf("out2", (self.c_out, n * ho * wo), x.dtype)
        np.matmul(wmat, cols, out=out2)
        out2 += self.params["b"][:, None]
        out = self._buf("out", (n, self.c_out, ho, wo), x.dtype)
        np.copyto(out, out2.reshape(self.c_out, n, ho, wo).transpose(1, 0, 2, 3))
        self._cols, self._xshape = cols, x.shape
        return out

    def backward(self, dy):
        n, _, h, w = self._xshape
        p, s, k = self.pad, self.stride, self.k
        c_in = self.c_in
        ho, wo = dy.shape[2], dy.shape[3]
        wmat = self.params["w"].reshape(self.c_out, -1)
        dyt = self._buf("dyt", (self.c_out, n * ho * wo), dy.dtype)
        np.copyto(dyt.reshape(self.c_out, n, ho, wo), dy.transpose(1, 0, 2, 3))
        np.matmul(dyt, self._cols.T, out=self.grads["w"].reshape(self.c_out, -1))
        np.sum(dyt, axis=1, out=self.grads["b"])
        dcols = self._buf("dcols", self._cols.shape, dy.dtype)
        np.matmul(wmat.T, dyt, out=dcols)
        dcols6 = dcols.reshape(c_in, k, k, n, ho, wo)
        dxp = self._buf("dxp", (c_in, n, h + 2 * p, w + 2 * p), dy.dtype)
        dxp.fill(0)
        for ki in range(k):
            for kj in range(k):
                dxp[:, :, ki : ki + s * ho : s, kj : kj + s * wo : s] += dcols6[:, ki, kj]
        dx = self._buf("dx", (n, c_in, h, w), dy.dtype)
        np.copyto(dx, dxp[:, :, p : p + h, p : p + w].transpose(1, 0, 2, 3))
        return dx


class MaxPool2(Layer):
    """2x2 max pooling with stride 2; ties go to the first element."""

    kind = "maxpool2"

    def forward(self, x, train=False):
        if x.ndim != 4 or x.shape[2] % 2 or x.shape[3] % 2:
            raise ShapeMismatch(f"maxpool2 needs even spatial dims, got {x.shape}")
        n, c, h, w = x.shape
        h2, w2 = h // 2, w // 2
        # Window order (0,0), (0,1), (1,0), (1,1); masks pick the FIRST max.
        a = x[:, :, ::2, ::2]
        b = x[:, :, ::2, 1::2]
        cq = x[:, :, 1::2, ::2]
        d = x[:, :, 1::2, 1::2]
        m_cd = np.maximum(cq, d)
        m_bcd = np.maximum(b, m_cd)
        out = self._buf("out", (n, c, h2, w2), x.dtype)
        np.maximum(a, m_bcd, out=out)
        wa = a >= m_bcd
        wb = ~wa & (b >= m_cd)
        wc = ~wa & ~wb & (cq >= d)
        self._masks = (wa, wb, wc)
        self._inshape = x.shape
        return out

    def backward(self, dy):
        n, c, h, w = self._inshape
        wa, wb, wc = self._masks
        wd = ~(wa | wb | wc)
        dx = self._buf("dx", (n, c, h, w), dy.dtype)
        np.multiply(dy, wa, out=dx[:, :, ::2, ::2])
        np.multiply(dy, wb, out=dx[:, :, ::2, 1::2])
        np.multiply(dy, wc, out=dx[:, :, 1::2, ::2])
        np.multiply(dy, wd, out=dx[:, :, 1::2, 1::2])
        return dx


class BatchNorm(Layer):
    """Per-feature normalization over the batch (and spatial dims for 4D).

    Training uses batch statistics and updates running stats with momentum
    0.9; inference normalizes with the running stats.
    """

    kind = "batchnorm"

    def __init__(self, num_features: int, dtype=np.float32, eps: float = 1e-5, momentum: float = 0.9):
        super().__init__()
        self.num_features = num_features
        self.eps = eps
        self.momentum = momentum
        self.params = {
            "gamma": np.ones(num_features, dtype=dtype),
            "beta": np.zeros(num_features, dtype=dtype),
        }
        self.buffers = {
            "running_mean": np.zeros(num_features, dtype=dtype),
            "running_var": np.ones(num_features, dtype=dtype),
        }
        self.zero_grads()

    def _bshape(self, ndim):
        return (1, self.num_features) + (1,) * (ndim - 2)

    def forward(self, x, train=False):
        if x.ndim not in (2, 4) or x.shape[1] != self.num_features:
            raise ShapeMismatch(
                f"batchnorm expects (N, {self.num_features}[, H, W]), got {x.shape}"
            )
        axes = (0,) if x.ndim == 2 else (0, 2, 3)
        bs = self._bshape(x.ndim)
        xhat = self._buf("xhat", x.shape, x.dtype)
        if train:
            mu = x.mean(axis=axes)
            np.subtract(x, mu.reshape(bs), out=xhat)
            sq = self._buf("tmp", x.shape, x.dtype)
            np.multiply(xhat, xhat, out=sq)
            var = sq.mean(axis=axes)
            m = self.momentum
            self.buffers["running_mean"] = (
                m * self.buffers["running_mean"] + (1 - m) * mu
            ).astype(x.dtype)
            self.buffers["running_var"] = (
                m * self.buffers["running_var"] + (1 - m) * var
            ).astype(x.dtype)
        else:
            mu = self.buffers["running_mean"]
            var = self.buffers["running_var"]
            np.subtract(x, mu.reshape(bs), out=xhat)
        invstd = 1.0 / np.sqrt(var + self.eps)
        xhat *= invstd.reshape(bs)
        out = self._buf("out", x.shape, x.dtype)
        np.multiply(xhat, self.params["gamma"].reshape(bs), out=out)
        out += self.params["beta"].reshape(bs)
        self._xhat, self._invstd, self._axes, self._bs = xhat, invstd, axes, bs
        self._count = x.size // self.num_features
        self._train_mode = train
        return out

    def backward(self, dy):
        bs, axes = self._bs, self._axes
        xhat, invstd = self._xhat, self._invstd
        tmp = self._buf("tmp", dy.shape, dy.dtype)
        np.multiply(dy, xhat, out=tmp)
        np.sum(tmp, axis=axes, out=self.grads["gamma"])
        np.sum(dy, axis=axes, out=self.grads["beta"])
        dxhat = self._buf("dxhat", dy.shape, dy.dtype)
        np.multiply(dy, self.params["gamma"].reshape(bs), out=dxhat)
        if not self._train_mode:
            dxhat *= invstd.reshape(bs)
            return dxhat
        n = self._count
        dx = self._buf("dx", dy.shape, dy.dtype)
        np.multiply(dxhat, float(n), out=dx)
        dx -= dxhat.sum(axis=axes, keepdims=True)
        np.multiply(dxhat, xhat, out=tmp)
        s2 = tmp.sum(axis=axes, keepdims=True)
        np.multiply(xhat, s2, out=tmp)
        dx -= tmp
        dx *= invstd.reshape(bs) / n
        return dx

    def spec_args(self):
        return {"num_features": self.num_features}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x, train=False):
        mask = self._buf("mask", x.shape, np.bool_)
        np.greater(x, 0, out=mask)
        self._mask = mask
        out = self._buf("out", x.shape, x.dtype)
        np.maximum(x, 0, out=out)
        return out

    def backward(self, dy):
        dx = self._buf("dx", dy.shape, dy.dtype)
        np.multiply(dy, self._mask, out=dx)
        return dx


class Flatten(Layer):
    kind = "flatten"

    def forward(self, x, train=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class LSTM(Layer):
    """Unidirectional LSTM over row sequences; returns the last hidden state.

    A (N, 1, 28, 28) image is consumed as 28 timesteps of 28 features in row
    order. Gates use the standard sigmoid/tanh equations with zero initial
    state; gate weight order is [input, forget, cell, output]. The input
    projection for all timesteps runs as one GEMM.
    """

    kind = "lstm"

    def __init__(self, input_size: int, hidden_size: int, rng: np.random.Generator, dtype):
        super().__init__()
        self.input_size, self.hidden_size = input_size, hidden_size
        h4 = 4 * hidden_size
        self.params = {
            "wx": glorot_uniform(rng, (input_size, h4), input_size, h4, dtype),
            "wh": glorot_uniform(rng, (hidden_size, h4), hidden_size, h4, dtype),
            "b": np.zeros(h4, dtype=dtype),
        }
        self.zero_grads()

    def spec_args(self):
        return {"hidden": self.hidden_size}

    def _as_sequence(self, x):
        if x.ndim == 4 and x.shape[1] == 1:
            x = x[:, 0]
        if x.ndim != 3 or x.shape[2] != self.input_size:
            raise ShapeMismatch(f"lstm expects (N, T, {self.input_size}), got {x.shape}")
        return x

    def forward(self, x, train=False):
        x = self._as_sequence(x)
        n, t, _ = x.shape
        hs = self.hidden_size
        h = np.zeros((n, hs), dtype=x.dtype)
        c = np.zeros((n, hs), dtype=x.dtype)
        xflat = x.reshape(n * t, self.input_size)
        zxb = self._buf("zx", (n * t, 4 * hs), x.dtype)
        np.matmul(xflat, self.params["wx"], out=zxb)
        zxb += self.params["b"]
        zx = zxb.reshape(n, t, 4 * hs)
        wh = self.params["wh"]
        h_prev = self._buf("h_prev", (t, n, hs), x.dtype)
        self._steps = []
        for step in range(t):
            h_prev[step] = h
            z = zx[:, step] + h @ wh
            i = sigmoid(z[:, :hs])
            f = sigmoid(z[:, hs : 2 * hs])
            g = np.tanh(z[:, 2 * hs : 3 * hs])
            o = sigmoid(z[:, 3 * hs :])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            self._steps.append((c, i, f, g, o, tc))
            h, c = o * tc, c_new
        self._x = x
        self._h_prev = h_prev
        return h

    def backward(self, dy):
        x = self._x
        n, t, fdim = x.shape
        hs = self.hidden_size
        wx, wh = self.params["wx"], self.params["wh"]
        dz_all = self._buf("dz", (t, n, 4 * hs), dy.dtype)
        dh = dy
        dc = np.zeros((n, hs), dtype=dy.dtype)
        for step in range(t - 1, -1, -1):
            c_prev, i, f, g, o, tc = self._steps[step]
            do = dh * tc
            dct = dh * o * (1 - tc * tc) + dc
            di = dct * g
            df = dct * c_prev
            dg = dct * i
            dc = dct * f
            dz = dz_all[step]
            dz[:, :hs] = di * i * (1 - i)
            dz[:, hs : 2 * hs] = df * f * (1 - f)
            dz[:, 2 * hs : 3 * hs] = dg * (1 - g * g)
            dz[:, 3 * hs :] = do * o * (1 - o)
            dh = dz @ wh.T
        # Weight gradients batch over all timesteps in two GEMMs.
        dzf = dz_all.reshape(t * n, 4 * hs)
        np.matmul(
            self._h_prev.reshape(t * n, hs).T, dzf, out=self.grads["wh"]
        )
        dz_nt = self._buf("dz_nt", (n, t, 4 * hs), dy.dtype)
        np.copyto(dz_nt, dz_all.transpose(1, 0, 2))
        dznt_flat = dz_nt.reshape(n * t, 4 * hs)
        xflat = x.reshape(n * t, fdim)
        np.matmul(xflat.T, dznt_flat, out=self.grads["wx"])
        np.sum(dznt_flat, axis=0, out=self.grads["b"])
        dx = self._buf("dx", (n, t, fdim), dy.dtype)
        np.matmul(dznt_flat, wx.T, out=dx.reshape(n * t, fdim))
        return dx
