"""Synthetic datasets with known ground truth.

:func:`shapelet_sim` builds a two-class problem in the style of the UCR
ShapeletSim set: every series is white noise, and class 1 series also carry
one triangular bump at a random position.  The bump locations are returned
so interpretability output can be scored against them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .dataset import TimeSeriesDataset, from_arrays, znormalize


@dataclass
class ShapeletTruth:
    """Inclusive ``[start, end]`` of the triangle per instance (``None`` for class 0)."""

    train: List[Optional[Tuple[int, int]]]
    test: List[Optional[Tuple[int, int]]]


def triangle(width: int, height: float = 1.0) -> np.ndarray:
    """Symmetric triangle of ``width`` samples peaking at ``height``."""
    if width < 3:
        raise ValueError("triangle width must be >= 3")
    half = (width - 1) / 2.0
    t = np.arange(width)
    return height * (1.0 - np.abs(t - half) / half)


def _split(n: int, length: int, width: int, height: float, noise: float,
           rng: np.random.Generator):
    labels = np.array([i % 2 for i in range(n)], dtype=np.int64)
    X = rng.normal(0.0, noise, size=(n, length))
    spots: List[Optional[Tuple[int, int]]] = []
    bump = triangle(width, height)
    for i in range(n):
        if labels[i] == 1:
            start = int(rng.integers(0, length - width + 1))
            X[i, start:start + width] += bump
            spots.append((start, start + width - 1))
        else:
            spots.append(None)
    return X, labels, spots


def shapelet_sim(n_train: int = 20, n_test: int = 180, length: int = 500, width: int = 60,
                 height: float = 4.0, noise: float = 1.0, seed: int = 0,
                 normalize: bool = True) -> Tuple[TimeSeriesDataset, ShapeletTruth]:
    """Noise vs noise-plus-triangle, balanced classes, z-normalised by default."""
    if width > length:
        raise ValueError("triangle wider than the series")
    rng = np.random.default_rng(seed)
    Xtr, ytr, str_ = _split(n_train, length, width, height, noise, rng)
    Xte, yte, ste = _split(n_test, length, width, height, noise, rng)
    ds = from_arrays(Xtr, ytr, Xte, yte, name="ShapeletSimSynthetic",
                     label_names=["noise", "triangle"])
    if normalize:
        ds = znormalize(ds)
    return ds, ShapeletTruth(str_, ste)
