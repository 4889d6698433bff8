"""Global and local explanations of a multi-depth symbolic classifier.

Global: the strongest features pointing toward a class are decoded into
waveforms by placing the subsequence in the middle of an otherwise zero
representation (phase 0 at every block) and cropping to its output span.

Local: each occurrence of a selected subsequence in an instance's
representation is mapped back to the input samples it depends on.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import plotting, receptive
from .aps import PhaseRecord
from .autoencoder import Autoencoder, SymbolicRepresentation, block_lengths
from .classifier import BinaryTask, MultiDepthClassifier, relative_importance
from .features import render as render_symbols

FeatureKey = Tuple[int, Tuple[int, ...]]


@dataclass
class GlobalExplanation:
    class_id: int
    depth: int
    subsequence: Tuple[int, ...]
    coefficient: float
    importance: float
    waveform: np.ndarray
    span: Tuple[int, int]

    @property
    def name(self) -> str:
        return render_symbols(self.subsequence)

    def to_dict(self) -> dict:
        return {"class_id": self.class_id, "depth": self.depth,
                "subsequence": self.name, "coefficient": self.coefficient,
                "importance": self.importance, "span": list(self.span),
                "waveform": [float(v) for v in self.waveform]}


@dataclass
class Occurrence:
    depth: int
    subsequence: Tuple[int, ...]
    position: int
    span: Tuple[int, int]
    raw_span: Tuple[int, int]
    coefficient: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["subsequence"] = render_symbols(self.subsequence)
        return d


@dataclass
class LocalExplanation:
    instance_id: int
    series: np.ndarray
    occurrences: List[Occurrence] = field(default_factory=list)
    note: str = ""

    @property
    def spans(self) -> List[Tuple[int, int]]:
        return [o.span for o in self.occurrences]

    def mask(self) -> np.ndarray:
        m = np.zeros(len(self.series), dtype=bool)
        for a, b in self.spans:
            m[a:b + 1] = True
        return m

    def to_dict(self) -> dict:
        return {"instance_id": self.instance_id, "note": self.note,
                "occurrences": [o.to_dict() for o in self.occurrences]}


def class_task(clf: MultiDepthClassifier, class_id: int) -> Tuple[BinaryTask, float]:
    """Task whose score separates ``class_id``, and the sign that favours it."""
    if not 0 <= class_id < clf.class_count:
        raise ValueError(f"class {class_id} out of range for {clf.class_count} classes")
    if len(clf.tasks) == 1:
        t = clf.tasks[0]
        return t, (1.0 if class_id == t.positive else -1.0)
    return clf.tasks[class_id], 1.0


def ranked_features(clf: MultiDepthClassifier, class_id: int) -> List[Tuple[FeatureKey, float, float]]:
    """``(key, coefficient, importance)`` of features favouring ``class_id``, strongest first."""
    task, sign = class_task(clf, class_id)
    w = task.final.weights
    imp = relative_importance(w)
    idx = [j for j in np.argsort(-np.abs(w), kind="stable") if sign * w[j] > 0]
    return [(task.keys[j], float(w[j]), float(imp[j])) for j in idx]


def canonical_representation(model: Autoencoder, subsequence: Sequence[int],
                             length: Optional[int] = None) -> Tuple[SymbolicRepresentation, np.ndarray]:
    """Subsequence centred in a representation of the model's length, phases all 0."""
    T = length or model.input_length
    lengths = block_lengths(T, model.config.depth)
    tp = lengths[-1]
    sub = np.asarray(subsequence, dtype=np.int64)
    if sub.size > tp:
        raise ValueError(f"subsequence longer than the representation ({tp})")
    start = (tp - sub.size) // 2
    idx = np.zeros(tp, dtype=np.int64)
    idx[start:start + sub.size] = sub
    rep = SymbolicRepresentation(idx, PhaseRecord.constant(lengths[:-1], 0), T,
                                 model.config.depth)
    return rep, np.arange(start, start + sub.size)


def decode_subsequence(model: Autoencoder, subsequence: Sequence[int],
                       length: Optional[int] = None) -> Tuple[np.ndarray, Tuple[int, int]]:
    rep, keep = canonical_representation(model, subsequence, length)
    wave, span = model.decode_partial(rep, keep)
    return wave, (span.start, span.end)


def explain_global(models: Dict[int, Autoencoder], clf: MultiDepthClassifier, class_id: int,
                   top_n: int = 3) -> List[GlobalExplanation]:
    """Decoded waveforms of the ``top_n`` features favouring ``class_id``.

    Returns an empty list if no feature favours the class.
    """
    if top_n <= 0:
        return []
    out = []
    for (depth, sub), coef, imp in ranked_features(clf, class_id)[:top_n]:
        wave, span = decode_subsequence(models[depth], sub)
        out.append(GlobalExplanation(class_id, depth, sub, coef, imp, wave, span))
    return out


def find_occurrences(indices: Sequence[int], subsequence: Sequence[int]) -> List[int]:
    idx = np.asarray(indices)
    sub = np.asarray(subsequence)
    n = len(sub)
    return [p for p in range(len(idx) - n + 1) if np.array_equal(idx[p:p + n], sub)]


def explain_local(models: Dict[int, Autoencoder], clf: MultiDepthClassifier,
                  reps: Dict[int, SymbolicRepresentation], series: np.ndarray,
                  instance_id: int = 0, class_id: Optional[int] = None,
                  features: Optional[Sequence[FeatureKey]] = None) -> LocalExplanation:
    """Input spans of every occurrence of the selected features in one instance.

    ``reps`` maps depth to the instance's representation.  Without
    ``class_id`` all nonzero final features are used; with it, only the ones
    favouring that class.  ``features`` restricts the set further.
    """
    series = np.asarray(series, dtype=np.float64)
    if class_id is None:
        chosen = []
        for t in clf.tasks:
            chosen.extend((k, float(w)) for k, w in zip(t.keys, t.final.weights) if w != 0)
    else:
        chosen = [(k, c) for k, c, _ in ranked_features(clf, class_id)]
    if features is not None:
        wanted = {(int(d), tuple(s)) for d, s in features}
        chosen = [(k, c) for k, c in chosen if k in wanted]
    expl = LocalExplanation(instance_id, series)
    seen = set()
    for (depth, sub), coef in chosen:
        rep = reps.get(depth)
        if rep is None:
            continue
        geom = models[depth].geometry(rep.phases)
        for p in find_occurrences(rep.indices, sub):
            if (depth, sub, p) in seen:
                continue
            seen.add((depth, sub, p))
            pre = receptive.preimage(geom, p, p + len(sub) - 1)
            expl.occurrences.append(Occurrence(depth, tuple(sub), p, (pre.start, pre.end),
                                               (pre.raw_start, pre.raw_end), coef))
    if not expl.occurrences:
        expl.note = "no selected feature occurs in this instance; decision rests on the bias"
    return expl


# -------------------------------------------------------------------- output
def _write_csv(path: Path, t, values, highlighted) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value", "highlighted"])
        for ti, v, h in zip(t, values, highlighted):
            w.writerow([int(ti), repr(float(v)), int(bool(h))])


def render_local(expl: LocalExplanation, path, title: Optional[str] = None) -> Tuple[Path, Path]:
    """Write ``<path>.svg`` (series with shaded spans) and ``<path>.csv``."""
    path = Path(path)
    svg, csvp = path.with_suffix(".svg"), path.with_suffix(".csv")
    t = np.arange(len(expl.series))
    mask = expl.mask()
    with plotting.figure() as (fig, ax):
        for a, b in sorted(set(expl.spans)):
            ax.axvspan(a - 0.5, b + 0.5, color=plotting.HIGHLIGHT_COLOR, alpha=0.25, lw=0)
        ax.plot(t, expl.series, color=plotting.SERIES_COLOR, lw=1.0)
        ax.set_xlabel("t")
        ax.set_title(title or f"instance {expl.instance_id}")
        plotting.save(fig, svg)
    _write_csv(csvp, t, expl.series, mask)
    return svg, csvp


def render_global(expls: Sequence[GlobalExplanation], path, length: Optional[int] = None,
                  title: Optional[str] = None) -> Tuple[Path, Path]:
    """Decoded waveforms on the time axis of their canonical spans."""
    path = Path(path)
    svg, csvp = path.with_suffix(".svg"), path.with_suffix(".csv")
    with plotting.figure() as (fig, ax):
        for e in expls:
            t = np.arange(e.span[0], e.span[1] + 1)
            ax.plot(t, e.waveform, lw=1.2,
                    label=f"B={e.depth} {e.name} ({e.importance:.1%})")
        if expls:
            ax.legend(loc="best", fontsize=7)
        if length:
            ax.set_xlim(0, length - 1)
        ax.set_xlabel("t")
        ax.set_title(title or "decoded discriminative subsequences")
        plotting.save(fig, svg)
    with open(csvp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "depth", "t", "value", "highlighted"])
        for e in expls:
            for ti, v in zip(range(e.span[0], e.span[1] + 1), e.waveform):
                w.writerow([e.name, e.depth, ti, repr(float(v)), 1])
    return svg, csvp


def render(expl, path, **kwargs) -> Tuple[Path, Path]:
    if isinstance(expl, LocalExplanation):
        return render_local(expl, path, **kwargs)
    return render_global(list(expl), path, **kwargs)


def write_report(path, global_expls: Sequence[GlobalExplanation],
                 local_expls: Sequence[LocalExplanation] = ()) -> Path:
    path = Path(path)
    doc = {"global": [e.to_dict() for e in global_expls],
           "local": [e.to_dict() for e in local_expls]}
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path
