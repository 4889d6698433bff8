"""Vector quantization bottleneck.

Embeddings are rows of a ``[T', Z]`` array; each row is replaced by its
nearest centroid (squared Euclidean distance, ties to the lowest index).
The codebook loss and the commitment loss share the same value,
``mean((e - e_q)**2)``, and differ only in where their gradient goes:
the codebook loss moves centroids, the commitment loss moves embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .nn import ShapeError

DEFAULT_CODEBOOK_SIZE = 32
DEFAULT_LATENT_DIM = 64
_CHUNK = 4096


@dataclass
class Codebook:
    centroids: np.ndarray  # [K, Z]
    usage: np.ndarray = field(default=None)

    def __post_init__(self):
        self.centroids = np.asarray(self.centroids, dtype=np.float64)
        if self.centroids.ndim != 2 or self.centroids.shape[0] < 2:
            raise ShapeError(f"centroids must be [K>=2, Z], got {self.centroids.shape}")
        if not np.all(np.isfinite(self.centroids)):
            raise ValueError("centroids must be finite")
        if self.usage is None:
            self.usage = np.zeros(self.size, dtype=np.int64)

    @property
    def size(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def reset_usage(self) -> None:
        self.usage[:] = 0

    def used(self) -> int:
        return int(np.count_nonzero(self.usage))


@dataclass
class QuantizedSequence:
    indices: np.ndarray  # [T'] int
    vectors: np.ndarray  # [T', Z], rows of the codebook
    commit_input: np.ndarray  # [T', Z], embeddings before quantization

    def __len__(self) -> int:
        return len(self.indices)


def init_codebook(K: int = DEFAULT_CODEBOOK_SIZE, Z: int = DEFAULT_LATENT_DIM,
                  seed: Optional[int] = 0, std: float = 1.0) -> Codebook:
    """Centroids drawn i.i.d. from ``N(0, std**2)``."""
    if K < 1 or Z < 1:
        raise ValueError("K and Z must be positive")
    if std <= 0:
        raise ValueError(f"std must be positive, got {std}")
    rng = np.random.default_rng(seed)
    return Codebook(std * rng.standard_normal((K, Z)))


def nearest(centroids: np.ndarray, embeddings: np.ndarray) -> np.ndarray:
    """Index of the nearest centroid for each row of ``embeddings``.

    Ties go to the lowest index.
    """
    e = np.asarray(embeddings, dtype=np.float64)
    if e.ndim != 2 or e.shape[1] != centroids.shape[1]:
        raise ShapeError(
            f"embeddings must be [n, {centroids.shape[1]}], got {e.shape}"
        )
    if e.shape[0] == 0:
        raise ShapeError("cannot quantize an empty sequence")
    c2 = np.einsum("kz,kz->k", centroids, centroids)
    d = c2[None, :] - 2.0 * (e @ centroids.T)
    idx = np.argmin(d, axis=1)
    # the expansion loses exact ties to rounding; rows whose best two
    # candidates are this close are recomputed from direct differences
    part = np.partition(d, 1, axis=1)[:, :2] if d.shape[1] > 1 else d
    scale = np.einsum("nz,nz->n", e, e) + c2.max()
    close = np.nonzero(part[:, -1] - part[:, 0] <= 1e-9 * (1.0 + scale))[0]
    for start in range(0, close.size, _CHUNK):
        rows = close[start:start + _CHUNK]
        exact = ((e[rows, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        idx[rows] = np.argmin(exact, axis=1)
    return idx


def quantize(cb: Codebook, embeddings: np.ndarray, count: bool = True) -> QuantizedSequence:
    e = np.asarray(embeddings, dtype=np.float64)
    idx = nearest(cb.centroids, e)
    if count:
        np.add.at(cb.usage, idx, 1)
    return QuantizedSequence(idx, cb.centroids[idx].copy(), e)


def vq_losses(q: QuantizedSequence) -> Tuple[float, float]:
    """``(codebook_loss, commitment_loss)``; numerically equal."""
    d = float(np.mean((q.commit_input - q.vectors) ** 2))
    return d, d


def codebook_loss_grad(q: QuantizedSequence, K: int) -> np.ndarray:
    """Gradient of the codebook loss w.r.t. the ``[K, Z]`` centroids (embeddings held fixed)."""
    e = q.commit_input
    g_rows = 2.0 * (q.vectors - e) / e.size
    grad = np.zeros((K, e.shape[1]))
    np.add.at(grad, q.indices, g_rows)
    return grad


def commitment_loss_grad(q: QuantizedSequence) -> np.ndarray:
    """Gradient of the commitment loss w.r.t. the embeddings (centroids held fixed)."""
    e = q.commit_input
    return 2.0 * (e - q.vectors) / e.size


def straight_through(grad_wrt_quantized: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the quantized vectors copied onto the embeddings."""
    return np.array(grad_wrt_quantized, dtype=np.float64, copy=True)
