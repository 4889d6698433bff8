"""End-to-end run on one dataset: models per depth, symbols, features, classifier."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .autoencoder import (Autoencoder, ModelConfig, SymbolicRepresentation, max_depth,
                          reconstruction_mae, train)
from .classifier import (DEFAULT_LAMBDA_GRID, DEFAULT_RHO_GRID, MultiDepthClassifier,
                         fit_multidepth)
from .dataset import TimeSeriesDataset
from .features import FeatureDictionary, build_dictionary, extract_matrix

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    max_depth: int = 5
    lam_grid: Sequence[float] = DEFAULT_LAMBDA_GRID
    rho_grid: Sequence[float] = DEFAULT_RHO_GRID
    seed: int = 0

    def model_config(self, depth: int) -> ModelConfig:
        # each depth gets its own stream so adding depths leaves others unchanged
        return replace(self.model, depth=depth, seed=self.seed * 1000 + depth)


@dataclass
class DepthResult:
    depth: int
    model: Autoencoder
    train_reps: List[SymbolicRepresentation]
    test_reps: List[SymbolicRepresentation]
    train_mae: float
    test_mae: float
    centroids_used: int
    epochs: int
    seconds: float

    @property
    def repr_length(self) -> int:
        return len(self.train_reps[0].indices)


@dataclass
class PipelineResult:
    dataset: str
    seed: int
    depths: Dict[int, DepthResult]
    dictionaries: Dict[int, FeatureDictionary]
    classifier: MultiDepthClassifier
    train_acc: float
    test_acc: float
    seconds: float
    requested_depth: int = 0

    @property
    def n_features_initial(self) -> int:
        return self.classifier.n_features_initial

    @property
    def n_features_selected(self) -> int:
        return self.classifier.n_features_selected

    @property
    def n_features_final(self) -> int:
        return self.classifier.n_features_final

    def metrics(self) -> dict:
        return {
            "dataset": self.dataset,
            "seed": self.seed,
            "train_acc": self.train_acc,
            "test_acc": self.test_acc,
            "n_features_initial": self.n_features_initial,
            "n_features_selected": self.n_features_selected,
            "n_features_final": self.n_features_final,
            "seconds": round(self.seconds, 3),
            "depths": {str(d): {"repr_length": r.repr_length, "train_mae": r.train_mae,
                                "test_mae": r.test_mae, "centroids_used": r.centroids_used,
                                "dictionary_size": len(self.dictionaries[d]),
                                "epochs": r.epochs, "seconds": round(r.seconds, 3)}
                       for d, r in sorted(self.depths.items())},
        }


def usable_depth(length: int, requested: int, min_repr_length: int = 4) -> int:
    cap = max_depth(length, min_repr_length)
    if requested > cap:
        log.warning("depth %d capped to %d for series length %d", requested, cap, length)
    return max(1, min(requested, cap))


def distinct_symbols(reps: Sequence[SymbolicRepresentation]) -> int:
    return int(np.unique(np.concatenate([r.indices for r in reps])).size)


def train_depth(ds: TimeSeriesDataset, cfg: ModelConfig, callback=None) -> DepthResult:
    t0 = time.perf_counter()
    model = train(ds, cfg, callback=callback)
    Xtr, Xte = ds.train_values(), ds.test_values()
    tr, te = model.represent(Xtr), model.represent(Xte) if len(ds.test) else []
    return DepthResult(cfg.depth, model, tr, te, reconstruction_mae(model, Xtr),
                       reconstruction_mae(model, Xte) if len(ds.test) else float("nan"),
                       distinct_symbols(tr), len(model.loss_trace), time.perf_counter() - t0)


def features_for(results: Dict[int, DepthResult]):
    dicts, ftr, fte = {}, {}, {}
    for d, r in sorted(results.items()):
        dct = build_dictionary(r.train_reps)
        dicts[d] = dct
        ftr[d] = extract_matrix(r.train_reps, dct)
        fte[d] = extract_matrix(r.test_reps, dct)
    return dicts, ftr, fte


def classify(results: Dict[int, DepthResult], ds: TimeSeriesDataset, cfg: PipelineConfig):
    dicts, ftr, fte = features_for(results)
    clf = fit_multidepth(ftr, dicts, ds.train_labels(), ds.class_count, cfg.lam_grid,
                         cfg.rho_grid, seed=cfg.seed, label_names=ds.label_names)
    train_acc = float(np.mean(clf.predict(ftr) == ds.train_labels()))
    test_acc = float(np.mean(clf.predict(fte) == ds.test_labels())) if len(ds.test) else float("nan")
    return dicts, clf, train_acc, test_acc


def run(ds: TimeSeriesDataset, cfg: Optional[PipelineConfig] = None,
        progress: Optional[Callable[[str], None]] = None) -> PipelineResult:
    """Train every depth up to the usable maximum and fit the classifier."""
    cfg = cfg or PipelineConfig()
    t0 = time.perf_counter()
    D = usable_depth(ds.length, cfg.max_depth, cfg.model.min_repr_length)
    results = {}
    for d in range(1, D + 1):
        results[d] = train_depth(ds, cfg.model_config(d))
        if progress:
            r = results[d]
            progress(f"{ds.name} seed {cfg.seed} depth {d}: T'={r.repr_length} "
                     f"mae {r.train_mae:.4f}/{r.test_mae:.4f} symbols {r.centroids_used} "
                     f"epochs {r.epochs} ({r.seconds:.1f}s)")
    dicts, clf, tr_acc, te_acc = classify(results, ds, cfg)
    return PipelineResult(ds.name, cfg.seed, results, dicts, clf, tr_acc, te_acc,
                          time.perf_counter() - t0, cfg.max_depth)
