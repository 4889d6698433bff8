"""Receptive fields of representation positions.

Each layer is described by ``(kernel, stride, padding)``; output index ``j``
of such a layer reads input indices ``[j*s - p, j*s - p + k - 1]``.
Composing ``L`` layers gives the closed forms

    start = v * prod(s) - sum_l p_l * prod_{i<l} s_i
    end   = u * prod(s) - sum_l (1 + p_l - k_l) * prod_{i<l} s_i

for a representation span ``[v, u]``.  An encoder block is a
``(3, 1, 1)`` convolution followed by the polyphase downsample.  Without a
known phase the downsample is ``(2, 2, 0)``, covering both polyphase
components.  With phase ``l`` pinned it is ``(1, 2, -l)``, a pure offset.

The decoder mirrors the encoder (zero insertion on the same phase, then the
same kernel), so the output span of a representation position in the
reconstruction is given by the same geometry.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np


class SpanError(ValueError):
    """Raised when a requested span falls entirely outside the series."""


@dataclass(frozen=True)
class Layer:
    kernel: int
    stride: int
    padding: int
    in_length: Optional[int] = None

    def __post_init__(self):
        if self.kernel < 1 or self.stride < 1:
            raise ValueError(f"kernel and stride must be >= 1, got {self}")


@dataclass
class LayerGeometry:
    layers: List[Layer]

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_length(self) -> Optional[int]:
        return self.layers[0].in_length if self.layers else None


@dataclass(frozen=True)
class PreImage:
    start: int
    end: int
    raw_start: int
    raw_end: int
    rep_start: int
    rep_end: int

    @property
    def width(self) -> int:
        return self.end - self.start + 1

    def as_slice(self) -> slice:
        return slice(self.start, self.end + 1)


def identity_geometry(length: Optional[int] = None) -> LayerGeometry:
    return LayerGeometry([Layer(1, 1, 0, length)])


def encoder_geometry(depth: int, length: Optional[int] = None,
                     phases: Optional[Sequence[int]] = None) -> LayerGeometry:
    """Geometry of ``depth`` encoder blocks on a series of ``length`` samples."""
    if phases is not None and len(phases) != depth:
        raise ValueError(f"expected {depth} phases, got {len(phases)}")
    layers = []
    n = length
    for b in range(depth):
        layers.append(Layer(3, 1, 1, n))
        if phases is None:
            layers.append(Layer(2, 2, 0, n))
        else:
            layers.append(Layer(1, 2, -int(phases[b]), n))
        if n is not None:
            n = (n + 1) // 2
    return LayerGeometry(layers)


def closed_form(geom: LayerGeometry, v: int, u: int) -> Tuple[int, int]:
    """Unclamped ``(start, end)`` of the input region seen by ``[v, u]``."""
    stride_prod = 1
    start_off = 0
    end_off = 0
    for layer in geom.layers:
        start_off += layer.padding * stride_prod
        end_off += (1 + layer.padding - layer.kernel) * stride_prod
        stride_prod *= layer.stride
    return v * stride_prod - start_off, u * stride_prod - end_off


def _propagate(geom: LayerGeometry, v: int, u: int) -> Tuple[int, int]:
    # layer-by-layer with clamping to each layer's input length; needed at
    # boundaries where zero padding or the odd-length edge pad is involved
    a, b = v, u
    for layer in reversed(geom.layers):
        a = a * layer.stride - layer.padding
        b = b * layer.stride - layer.padding + layer.kernel - 1
        if layer.in_length is not None:
            # an index past the end is the edge-pad copy of the last sample
            last = layer.in_length - 1
            a = min(max(a, 0), last)
            b = max(min(b, last), 0)
    return a, b


def preimage(geom: LayerGeometry, v: int, u: Optional[int] = None) -> PreImage:
    """Input span that representation positions ``v..u`` depend on."""
    if u is None:
        u = v
    if not 0 <= v <= u:
        raise ValueError(f"need 0 <= v <= u, got v={v}, u={u}")
    raw_start, raw_end = closed_form(geom, v, u)
    length = geom.input_length
    if length is None:
        start, end = max(raw_start, 0), raw_end
    else:
        if raw_end < 0 or raw_start > length - 1:
            raise SpanError(f"span [{raw_start}, {raw_end}] lies outside [0, {length - 1}]")
        start, end = _propagate(geom, v, u)
    if end < start:
        raise SpanError(f"empty span for positions [{v}, {u}]")
    return PreImage(start, end, raw_start, raw_end, v, u)


def output_span(geom: LayerGeometry, v: int, u: Optional[int] = None) -> PreImage:
    """Span of the reconstruction written by decoding positions ``v..u``."""
    return preimage(geom, v, u)


def verify_preimage(model, x: np.ndarray, position: int, n_perturb: int = 100,
                    seed: int = 0, atol: float = 1e-9) -> bool:
    """Perturbation check of :func:`preimage` on a model with pinned phases.

    Each of ``n_perturb`` single-sample perturbations outside the computed
    span must leave the embedding at ``position`` unchanged (to ``atol``),
    and a perturbation at the span centre must change it.
    """
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    emb, phases = model.encode(x)
    geom = encoder_geometry(model.config.depth, len(x), phases.phases)
    span = preimage(geom, position)
    base = emb[position]
    outside = np.setdiff1d(np.arange(len(x)), np.arange(span.start, span.end + 1))
    if outside.size:
        for i in rng.choice(outside, size=n_perturb, replace=True):
            xp = x.copy()
            xp[i] += rng.normal() * 10.0
            e2, _ = model.encode(xp, phases=phases)
            if np.max(np.abs(e2[position] - base)) > atol:
                return False
    xp = x.copy()
    xp[(span.start + span.end) // 2] += 10.0
    e2, _ = model.encode(xp, phases=phases)
    return bool(np.max(np.abs(e2[position] - base)) > 0)
