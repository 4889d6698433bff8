"""Presence features over one- and two-symbol subsequences.

A :class:`FeatureDictionary` lists the unigrams and bigrams seen in the
training representations of one depth, sorted as index tuples.  Test
representations are projected onto that same dictionary; patterns that
never occurred in training are dropped.
"""

from __future__ import annotations

import csv
import string
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

Subsequence = Tuple[int, ...]

ALPHABET = string.ascii_lowercase + string.ascii_uppercase + string.digits


class AlignmentError(ValueError):
    """Feature vectors or representations do not match a dictionary."""


def symbol(index: int) -> str:
    """Printable name of codebook index ``index`` (``a..z``, ``A..Z``, ``0..9``)."""
    if index < 0:
        raise ValueError(f"negative symbol index {index}")
    if index < len(ALPHABET):
        return ALPHABET[index]
    return f"<{index}>"


def render(indices: Iterable[int]) -> str:
    return "".join(symbol(int(i)) for i in indices)


def parse(text: str) -> Subsequence:
    """Inverse of :func:`render`."""
    out = []
    i = 0
    while i < len(text):
        if text[i] == "<":
            j = text.index(">", i)
            out.append(int(text[i + 1:j]))
            i = j + 1
        else:
            pos = ALPHABET.find(text[i])
            if pos < 0:
                raise ValueError(f"unknown symbol {text[i]!r}")
            out.append(pos)
            i += 1
    return tuple(out)


def _indices(rep) -> np.ndarray:
    if hasattr(rep, "indices"):
        rep = rep.indices
    if isinstance(rep, str):
        rep = parse(rep)
    return np.asarray(rep, dtype=np.int64).ravel()


def _depth_of(rep) -> Optional[int]:
    return getattr(rep, "depth", None)


def subsequences(rep) -> set:
    """Set of unigrams and bigrams occurring in ``rep``."""
    idx = _indices(rep).tolist()
    found = {(a,) for a in idx}
    found.update(zip(idx[:-1], idx[1:]))
    return found


@dataclass
class FeatureDictionary:
    entries: List[Subsequence]
    depth: Optional[int] = None
    _lookup: Dict[Subsequence, int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.entries = [tuple(int(v) for v in e) for e in self.entries]
        if len(set(self.entries)) != len(self.entries):
            raise ValueError("duplicate subsequences in dictionary")
        if any(len(e) not in (1, 2) for e in self.entries):
            raise ValueError("only subsequences of length 1 or 2 are supported")
        self._lookup = {e: j for j, e in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, sub) -> bool:
        return tuple(sub) in self._lookup

    def index(self, sub) -> int:
        return self._lookup[tuple(sub)]

    def names(self) -> List[str]:
        return [render(e) for e in self.entries]

    def to_dict(self) -> dict:
        return {"depth": self.depth, "entries": [list(e) for e in self.entries]}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureDictionary":
        return cls([tuple(e) for e in d["entries"]], depth=d.get("depth"))


@dataclass
class FeatureVector:
    bits: np.ndarray
    depth: Optional[int] = None


def build_dictionary(train_reps: Sequence) -> FeatureDictionary:
    reps = list(train_reps)
    if not reps:
        raise ValueError("cannot build a dictionary from no representations")
    depths = {_depth_of(r) for r in reps} - {None}
    if len(depths) > 1:
        raise AlignmentError(f"representations mix depths {sorted(depths)}")
    seen = set()
    for r in reps:
        seen |= subsequences(r)
    return FeatureDictionary(sorted(seen), depth=depths.pop() if depths else None)


def _check_depth(rep, dictionary: FeatureDictionary) -> None:
    d = _depth_of(rep)
    if d is not None and dictionary.depth is not None and d != dictionary.depth:
        raise AlignmentError(f"representation depth {d} != dictionary depth {dictionary.depth}")


def extract(rep, dictionary: FeatureDictionary, counts: bool = False) -> FeatureVector:
    """Presence bits of ``dictionary`` entries in ``rep``.

    With ``counts=True`` the number of occurrences is returned instead.
    """
    _check_depth(rep, dictionary)
    bits = np.zeros(len(dictionary), dtype=np.int64 if counts else np.uint8)
    idx = _indices(rep).tolist()
    grams = [(a,) for a in idx] + list(zip(idx[:-1], idx[1:]))
    lookup = dictionary._lookup
    for g in grams:
        j = lookup.get(g)
        if j is not None:
            if counts:
                bits[j] += 1
            else:
                bits[j] = 1
    return FeatureVector(bits, dictionary.depth)


def extract_matrix(reps: Sequence, dictionary: FeatureDictionary,
                   counts: bool = False) -> np.ndarray:
    """``[N, d]`` matrix of feature vectors."""
    if not reps:
        return np.zeros((0, len(dictionary)), dtype=np.int64 if counts else np.uint8)
    return np.stack([extract(r, dictionary, counts).bits for r in reps])


def write_feature_csv(path, matrix: np.ndarray, dictionary: FeatureDictionary,
                      labels: Optional[Sequence[int]] = None) -> None:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[1] != len(dictionary):
        raise AlignmentError(f"matrix shape {matrix.shape} does not match d={len(dictionary)}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = dictionary.names()
        w.writerow((["label"] if labels is not None else []) + head)
        for i, row in enumerate(matrix):
            prefix = [int(labels[i])] if labels is not None else []
            w.writerow(prefix + [int(v) for v in row])
