"""Small deterministic neural substrate: 1D convolution, LeakyReLU, Adam.

Arrays are float64 and laid out as ``[channels, time]`` for a single
sequence or ``[batch, channels, time]`` for a batch.  Every forward op has a
matching backward op returning exact analytic gradients, and
:func:`grad_check` compares them against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Tuple

import numpy as np

KERNEL_SIZE = 3
DEFAULT_SLOPE = 0.01


class ShapeError(ValueError):
    """Raised when array shapes are inconsistent with a layer."""


class DeterminismError(RuntimeError):
    """Raised when a loss closure returns different values for equal inputs."""


@dataclass
class ConvLayer:
    """Same-padded, stride-1 convolution with kernel size 3."""

    weights: np.ndarray  # [out_channels, in_channels, 3]
    bias: np.ndarray  # [out_channels]

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weights.ndim != 3 or self.weights.shape[2] != KERNEL_SIZE:
            raise ShapeError(f"weights must be [out, in, 3], got {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ShapeError(
                f"bias must have shape ({self.weights.shape[0]},), got {self.bias.shape}"
            )

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def init(cls, in_channels: int, out_channels: int, rng: np.random.Generator,
             bias: bool = True) -> "ConvLayer":
        """Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
        bound = 1.0 / np.sqrt(in_channels * KERNEL_SIZE)
        w = rng.uniform(-bound, bound, size=(out_channels, in_channels, KERNEL_SIZE))
        b = rng.uniform(-bound, bound, size=out_channels) if bias else np.zeros(out_channels)
        return cls(w, b)


def _as_batch(x: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        return x[None], True
    if x.ndim == 3:
        return x, False
    raise ShapeError(f"expected [C, L] or [N, C, L] array, got shape {x.shape}")


def _im2col(x: np.ndarray) -> np.ndarray:
    """[N, C, L] -> [C, 3, N, L] unfolded taps, zero padded by one sample per side.

    Channel-major so the whole batch goes through a single matrix product.
    """
    n, c, length = x.shape
    xp = np.zeros((c, n, length + 2))
    xp[:, :, 1:-1] = x.transpose(1, 0, 2)
    cols = np.empty((c, KERNEL_SIZE, n, length))
    for k in range(KERNEL_SIZE):
        cols[:, k] = xp[:, :, k:k + length]
    return cols


def conv1d_forward(layer: ConvLayer, x: np.ndarray, cache: Optional[list] = None) -> np.ndarray:
    """out[c, t] = bias[c] + sum_{i,k} w[c, i, k] * x_pad[i, t + k].

    If ``cache`` is a list, the unfolded input is appended to it so that
    :func:`conv1d_backward` can reuse it.
    """
    xb, single = _as_batch(x)
    if xb.shape[1] != layer.in_channels:
        raise ShapeError(
            f"input has {xb.shape[1]} channels, layer expects {layer.in_channels}"
        )
    if xb.shape[2] < 1:
        raise ShapeError("input must have at least one time step")
    n, c, length = xb.shape
    cols = _im2col(xb)
    if cache is not None:
        cache.append(cols)
    w2 = layer.weights.reshape(layer.out_channels, -1)
    out = (w2 @ cols.reshape(c * KERNEL_SIZE, n * length)).reshape(layer.out_channels, n, length)
    out = out.transpose(1, 0, 2) + layer.bias[None, :, None]
    return out[0] if single else out


def conv1d_backward(layer: ConvLayer, x: np.ndarray, grad_out: np.ndarray,
                    cols: Optional[np.ndarray] = None):
    """Gradients of :func:`conv1d_forward` w.r.t. weights, bias and input.

    Returns ``(grad_w, grad_b, grad_x)`` where ``grad_x`` has the shape of ``x``.
    """
    xb, single = _as_batch(x)
    gb, _ = _as_batch(grad_out)
    n, c, length = xb.shape
    if c != layer.in_channels or gb.shape != (n, layer.out_channels, length):
        raise ShapeError(
            f"grad_out shape {gb.shape} inconsistent with input {xb.shape} and layer"
        )
    if cols is None:
        cols = _im2col(xb)
    cols2 = cols.reshape(c * KERNEL_SIZE, n * length)
    g2 = np.ascontiguousarray(gb.transpose(1, 0, 2)).reshape(layer.out_channels, n * length)
    grad_w = (g2 @ cols2.T).reshape(layer.weights.shape)
    grad_b = g2.sum(axis=1)
    w2 = layer.weights.reshape(layer.out_channels, -1)
    gcols = (w2.T @ g2).reshape(c, KERNEL_SIZE, n, length)
    gpad = np.zeros((c, n, length + 2))
    for k in range(KERNEL_SIZE):
        gpad[:, :, k:k + length] += gcols[:, k]
    grad_x = gpad[:, :, 1:-1].transpose(1, 0, 2)
    return grad_w, grad_b, (grad_x[0] if single else grad_x)


def leaky_relu(x: np.ndarray, slope: float = DEFAULT_SLOPE) -> np.ndarray:
    """Elementwise ``max(x, slope * x)`` for ``0 < slope < 1``."""
    if not 0.0 < slope < 1.0:
        raise ValueError(f"slope must lie in (0, 1), got {slope}")
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, x, slope * x)


def leaky_relu_backward(x: np.ndarray, grad_out: np.ndarray,
                        slope: float = DEFAULT_SLOPE) -> np.ndarray:
    return np.where(np.asarray(x) >= 0, grad_out, slope * grad_out)


@dataclass
class AdamState:
    """Moment estimates for a named set of parameters."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def adam_step(params: Dict[str, np.ndarray], grads: Mapping[str, np.ndarray],
              state: AdamState) -> None:
    """Apply one bias-corrected Adam update to ``params`` in place."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name!r} has shape {g.shape}, expected {p.shape}")
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


LossClosure = Callable[[Dict[str, np.ndarray]], Tuple[float, Dict[str, np.ndarray]]]


@dataclass
class GradCheckReport:
    errors: Dict[str, float]
    eps: float
    tolerance: float

    @property
    def max_error(self) -> float:
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def passed(self) -> bool:
        return self.max_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Max absolute difference scaled by the larger of the two inf-norms."""
    scale = max(np.max(np.abs(analytic), initial=0.0), np.max(np.abs(numeric), initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric)) / scale)


def numeric_grad(loss: Callable[[Dict[str, np.ndarray]], float],
                 params: Dict[str, np.ndarray], name: str, eps: float) -> np.ndarray:
    p = params[name]
    out = np.empty_like(p)
    flat = p.reshape(-1)
    gflat = out.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        fp = loss(params)
        flat[i] = orig - eps
        fm = loss(params)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * eps)
    return out


def grad_check(closure: LossClosure, params: Dict[str, np.ndarray],
               tolerance: float = 1e-5, eps: float = 1e-6) -> GradCheckReport:
    """Compare analytic gradients from ``closure`` with central differences.

    ``closure(params)`` must return ``(loss, grads)`` and be a pure function
    of ``params``; two evaluations at the same point that disagree raise
    :class:`DeterminismError`.
    """
    l1, grads = closure(params)
    l2, _ = closure(params)
    if l1 != l2:
        raise DeterminismError(f"closure is not deterministic: {l1!r} != {l2!r}")

    def loss_only(p):
        return closure(p)[0]

    errors = {}
    for name in params:
        num = numeric_grad(loss_only, params, name, eps)
        errors[name] = relative_error(grads[name], num)
    return GradCheckReport(errors, eps, tolerance)
