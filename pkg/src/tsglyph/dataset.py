"""UCR-style univariate datasets.

Files hold one instance per row: the class label followed by the ``T``
sample values, separated by tabs or commas (whitespace-aligned legacy UCR
files are accepted too).  Labels are remapped to ``0..C-1`` in sorted order;
the original labels are kept in ``TimeSeriesDataset.label_names``.
"""

from __future__ import annotations

import logging
import re
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

log = logging.getLogger(__name__)

MIN_LENGTH = 8


class DatasetError(ValueError):
    """Base class for dataset loading problems."""


class FormatError(DatasetError):
    pass


class ParseError(DatasetError):
    pass


class EmptyDatasetError(DatasetError):
    pass


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    label: int

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class TimeSeriesDataset:
    train: List[TimeSeries]
    test: List[TimeSeries]
    name: str = ""
    label_names: List[str] = field(default_factory=list)

    @property
    def class_count(self) -> int:
        return len(self.label_names)

    @property
    def length(self) -> int:
        return len(self.train[0]) if self.train else len(self.test[0])

    def train_values(self) -> np.ndarray:
        return np.stack([s.values for s in self.train])

    def test_values(self) -> np.ndarray:
        return np.stack([s.values for s in self.test])

    def train_labels(self) -> np.ndarray:
        return np.array([s.label for s in self.train], dtype=np.int64)

    def test_labels(self) -> np.ndarray:
        return np.array([s.label for s in self.test], dtype=np.int64)

    def validate(self) -> None:
        lengths = {len(s) for s in self.train} | {len(s) for s in self.test}
        if len(lengths) != 1:
            raise FormatError(f"{self.name}: train/test series lengths differ: {sorted(lengths)}")
        (length,) = lengths
        if length < MIN_LENGTH:
            raise FormatError(f"{self.name}: series length {length} < {MIN_LENGTH}")
        for s in self.train + self.test:
            if not np.all(np.isfinite(s.values)):
                raise ParseError(f"{self.name}: non-finite values in a series")


def _label_key(label: str):
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)


def _split(line: str) -> List[str]:
    if "\t" in line:
        return line.split("\t")
    if "," in line:
        return line.split(",")
    return line.split()


def read_rows(path) -> List[Tuple[str, np.ndarray]]:
    """Raw ``(label, values)`` rows of a delimited file, in file order."""
    path = Path(path)
    rows = []
    width = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields_ = [f.strip() for f in _split(line)]
        if len(fields_) < 2:
            raise FormatError(f"{path}:{lineno}: expected a label and at least one value")
        if width is None:
            width = len(fields_)
        elif len(fields_) != width:
            raise FormatError(
                f"{path}:{lineno}: row has {len(fields_) - 1} values, expected {width - 1}"
            )
        label = fields_[0]
        try:
            label = _normalise_label(label)
            values = np.array([float(v) for v in fields_[1:]], dtype=np.float64)
        except ValueError:
            bad = next(i for i, v in enumerate(fields_) if not _is_number(v))
            raise ParseError(
                f"{path}:{lineno}: field {bad + 1} ({fields_[bad]!r}) is not numeric"
            ) from None
        rows.append((label, values))
    if not rows:
        raise EmptyDatasetError(f"{path}: no instances")
    return rows


def _is_number(v: str) -> bool:
    try:
        float(v)
    except ValueError:
        return False
    return True


def _normalise_label(label: str) -> str:
    f = float(label)
    return str(int(f)) if f.is_integer() else repr(f)


def load_dataset(train_path, test_path, name: Optional[str] = None) -> TimeSeriesDataset:
    train_rows = read_rows(train_path)
    test_rows = read_rows(test_path)
    names = sorted({r[0] for r in train_rows}, key=_label_key)
    test_only = sorted({r[0] for r in test_rows} - set(names), key=_label_key)
    if test_only:
        raise FormatError(f"{test_path}: labels {test_only} do not occur in the train split")
    remap = {lab: i for i, lab in enumerate(names)}
    if name is None:
        name = re.sub(r"_TRAIN$", "", Path(train_path).stem, flags=re.I)
    ds = TimeSeriesDataset(
        [TimeSeries(v, remap[lab]) for lab, v in train_rows],
        [TimeSeries(v, remap[lab]) for lab, v in test_rows],
        name=name,
        label_names=names,
    )
    ds.validate()
    return ds


def find_dataset(name: str, root) -> Tuple[Path, Path]:
    """Locate ``<name>_TRAIN`` / ``<name>_TEST`` files under ``root``."""
    root = Path(root)
    for base in (root / name, root):
        for ext in (".tsv", ".txt", ".csv", ""):
            tr, te = base / f"{name}_TRAIN{ext}", base / f"{name}_TEST{ext}"
            if tr.is_file() and te.is_file():
                return tr, te
    raise FileNotFoundError(f"dataset {name!r} not found under {root}")


def save_split(series: Sequence[TimeSeries], path, label_names: Optional[Sequence[str]] = None,
               delimiter: str = "\t") -> None:
    lines = []
    for s in series:
        label = label_names[s.label] if label_names else str(s.label)
        lines.append(delimiter.join([label] + [repr(float(v)) for v in s.values]))
    Path(path).write_text("\n".join(lines) + "\n")


def export_dataset(ds: TimeSeriesDataset, directory) -> Tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tr = directory / f"{ds.name}_TRAIN.tsv"
    te = directory / f"{ds.name}_TEST.tsv"
    save_split(ds.train, tr, ds.label_names)
    save_split(ds.test, te, ds.label_names)
    return tr, te


def znormalize_values(x: np.ndarray, ddof: int = 0) -> np.ndarray:
    """Standardise one series; a constant series maps to zeros with a warning."""
    x = np.asarray(x, dtype=np.float64)
    sd = x.std(ddof=ddof)
    if sd == 0 or not np.isfinite(sd):
        warnings.warn("constant series normalised to zeros", RuntimeWarning, stacklevel=3)
        return np.zeros_like(x)
    return (x - x.mean()) / sd


def znormalize(ds: TimeSeriesDataset, ddof: int = 0) -> TimeSeriesDataset:
    """Per-instance z-normalisation (population std by default)."""
    def norm(series):
        return [TimeSeries(znormalize_values(s.values, ddof), s.label) for s in series]
    return replace(ds, train=norm(ds.train), test=norm(ds.test))


def from_arrays(X_train, y_train, X_test, y_test, name: str = "",
                label_names: Optional[Sequence[str]] = None) -> TimeSeriesDataset:
    """Build a dataset from arrays whose labels are already ``0..C-1``."""
    y_train = np.asarray(y_train, dtype=np.int64)
    y_test = np.asarray(y_test, dtype=np.int64)
    C = int(max(y_train.max(), y_test.max())) + 1
    ds = TimeSeriesDataset(
        [TimeSeries(np.asarray(v, dtype=np.float64), int(l)) for v, l in zip(X_train, y_train)],
        [TimeSeries(np.asarray(v, dtype=np.float64), int(l)) for v, l in zip(X_test, y_test)],
        name=name,
        label_names=list(label_names) if label_names else [str(i) for i in range(C)],
    )
    ds.validate()
    return ds
