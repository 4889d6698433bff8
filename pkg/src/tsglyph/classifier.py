"""Elastic-net logistic regression and the multi-depth feature aggregation.

The binary objective is

    F(w, b) = (1 - rho)/2 * ||w||^2 + rho * ||w||_1
              + lam * sum_i log(1 + exp(-y_i (x_i . w + b)))

with ``y_i`` in {-1, +1} and an unpenalised bias.  ``lam`` multiplies the
data term, so it plays the role of the usual inverse regularisation
strength ``C`` (scikit-learn's ``LogisticRegression(penalty="elasticnet",
C=lam, l1_ratio=rho)`` minimises the same function).

The solver is a proximal Newton method: each outer step builds the
quadratic model of the smooth part and minimises it plus the L1 term by
cyclic coordinate descent, then backtracks on the exact objective.
Coordinate updates go through soft-thresholding, so weights are exactly
zero rather than merely small.
"""

from __future__ import annotations

import csv
import json
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numba
import numpy as np
from scipy import sparse
from sklearn.model_selection import StratifiedKFold

from .features import FeatureDictionary, render

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-2, 3, 6))
DEFAULT_RHO_GRID = (0.5, 0.8, 0.9, 1.0)
# relative stopping tolerances: final fits, and the many fits inside model selection
FIT_TOL = 1e-9
CV_TOL = 1e-6
FORMAT = "tsglyph-classifier"
FORMAT_VERSION = 1
_MAX_SWEEPS = 100_000


class DegenerateLabelError(ValueError):
    """Only one class present in the labels of a binary fit."""


class FoldError(ValueError):
    """Too few members in a class to build cross-validation folds."""


class AlignmentError(ValueError):
    """Feature matrices do not match the classifier's dictionaries."""


# --------------------------------------------------------------------- solver
def _as_pm1(y) -> np.ndarray:
    y = np.asarray(y).ravel()
    vals = set(np.unique(y).tolist())
    if vals <= {-1, 1}:
        out = y.astype(np.float64)
    elif vals <= {0, 1} or y.dtype == bool:
        out = np.where(y.astype(bool), 1.0, -1.0)
    else:
        raise ValueError(f"binary labels must be in {{-1, 1}} or {{0, 1}}, got {sorted(vals)}")
    if np.unique(out).size < 2:
        raise DegenerateLabelError("both classes must be present to fit a binary model")
    return out


def _logloss(m: np.ndarray) -> np.ndarray:
    # log(1 + exp(-m)), stable for both signs
    return np.logaddexp(0.0, -m)


def objective(w, b, X, y, lam, rho) -> float:
    """Value of the elastic-net logistic objective at ``(w, b)``."""
    X = np.asarray(X, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    y = _as_pm1(y)
    m = y * (X @ w + b)
    return float(0.5 * (1 - rho) * w @ w + rho * np.abs(w).sum()
                 + lam * _logloss(m).sum())


@numba.njit(cache=True)
def _cd_quadratic(indptr, rows, vals, Wt, res, w, b, l1, l2, tol,
                  max_sweeps):  # pragma: no cover - jitted
    # minimise 1/2 sum Wt (res - dX)^2 + sum_j l2_j/2 w_j^2 + l1 ||w||_1 over (w, b)
    # with X in CSC form; res is the working residual for the current (w, b)
    n = Wt.shape[0]
    d = w.shape[0]
    a = np.zeros(d)
    for j in range(d):
        s = 0.0
        for k in range(indptr[j], indptr[j + 1]):
            s += Wt[rows[k]] * vals[k] * vals[k]
        a[j] = s
    sw = 0.0
    for i in range(n):
        sw += Wt[i]
    active = np.ones(d, dtype=np.bool_)
    full = True
    for sweep in range(max_sweeps):
        biggest = 0.0
        num = 0.0
        for i in range(n):
            num += Wt[i] * res[i]
        if sw > 0:
            step = num / sw
            b += step
            for i in range(n):
                res[i] -= step
            if sw * step * step > biggest:
                biggest = sw * step * step
        for j in range(d):
            if not full and not active[j]:
                continue
            denom = a[j] + l2[j]
            if denom <= 0.0:
                continue
            c = a[j] * w[j]
            for k in range(indptr[j], indptr[j + 1]):
                c += Wt[rows[k]] * vals[k] * res[rows[k]]
            if c > l1:
                new = (c - l1) / denom
            elif c < -l1:
                new = (c + l1) / denom
            else:
                new = 0.0
            diff = new - w[j]
            if diff != 0.0:
                for k in range(indptr[j], indptr[j + 1]):
                    res[rows[k]] -= vals[k] * diff
                w[j] = new
                if denom * diff * diff > biggest:
                    biggest = denom * diff * diff
        if full:
            for j in range(d):
                active[j] = w[j] != 0.0
            if biggest < tol:
                break
            full = False
        elif biggest < tol:
            full = True
    return b


@dataclass
class SolverInfo:
    iterations: int
    converged: bool
    objective: float
    kkt: float


def kkt_violation(w, b, X, y, lam, rho) -> float:
    """Largest violation of the optimality conditions, in gradient units."""
    if not sparse.issparse(X):
        X = np.asarray(X, dtype=np.float64)
    y = _as_pm1(y)
    m = y * (X @ w + b)
    g_eta = -y * _sigmoid(-m) * lam
    gw = X.T @ g_eta + (1 - rho) * w
    gb = g_eta.sum()
    viol = np.where(w != 0, np.abs(gw + rho * np.sign(w)), np.maximum(np.abs(gw) - rho, 0.0))
    return float(max(np.max(viol, initial=0.0), abs(gb)))


def _sigmoid(t: np.ndarray) -> np.ndarray:
    return np.where(t >= 0, 1.0 / (1.0 + np.exp(-np.abs(t))),
                    np.exp(-np.abs(t)) / (1.0 + np.exp(-np.abs(t))))


def _prox_newton(X, y, lam, rho, w, b, tol, max_iter, l2=None):
    # l2[j] is the ridge weight of column j (defaults to 1 - rho everywhere)
    n, d = X.shape
    l2 = np.full(d, 1.0 - rho) if l2 is None else np.asarray(l2, dtype=np.float64)
    csc = sparse.csc_matrix(X)
    csc.sort_indices()
    indptr, rows, vals = csc.indptr.astype(np.int64), csc.indices.astype(np.int64), csc.data
    X = csc
    l1 = rho
    eta = X @ w + b
    F = 0.5 * (l2 * w) @ w + l1 * np.abs(w).sum() + lam * _logloss(y * eta).sum()
    scale = max(1.0, abs(F))
    # tol is relative: to the objective for decreases, to lam * n for the KKT test
    kkt_tol = tol * max(1.0, lam * n)
    converged = False
    it = 0
    stalled = 0
    inner_tol = 1e-6 * scale
    for it in range(1, max_iter + 1):
        s = _sigmoid(-y * eta)            # 1 - sigma(margin)
        h = np.maximum(s * (1.0 - s), 1e-10)
        g = -y * s                         # d loss / d eta
        Wt = lam * h
        res = -g / h
        w_new = w.copy()
        b_new = _cd_quadratic(indptr, rows, vals, Wt, res, w_new, b, l1, l2,
                              inner_tol, _MAX_SWEEPS)
        dw, db = w_new - w, b_new - b
        if not np.any(dw) and db == 0.0:
            converged = True
            break
        grad_dot = lam * g @ (X @ dw + db) + (l2 * w) @ dw
        delta = grad_dot + l1 * (np.abs(w_new).sum() - np.abs(w).sum())
        t = 1.0
        accepted = False
        for _ in range(50):
            wt = w + t * dw if t < 1.0 else w_new
            bt = b + t * db
            eta_t = X @ wt + bt
            Ft = 0.5 * (l2 * wt) @ wt + l1 * np.abs(wt).sum() + lam * _logloss(y * eta_t).sum()
            if Ft <= F + 1e-4 * t * min(delta, 0.0) + 1e-15 * scale:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            converged = True
            break
        decrease = F - Ft
        w, b, eta, F = wt, bt, eta_t, Ft
        inner_tol = max(min(inner_tol, 1e-3 * max(decrease, 0.0)), 1e-5 * tol * scale)
        stalled = stalled + 1 if decrease <= 1e-2 * tol * scale else 0
        if stalled >= 2 or (decrease <= tol * scale
                            and kkt_violation(w, b, X, y, lam, rho) <= kkt_tol):
            converged = True
            break
    return w, b, SolverInfo(it, converged, float(F), 0.0)


def _unique_columns(X: np.ndarray):
    if X.shape[1] == 0:
        return X, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0)
    _, first, inverse, counts = np.unique(X.T, axis=0, return_index=True,
                                          return_inverse=True, return_counts=True)
    order = np.argsort(first, kind="stable")  # keep first-appearance order
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    inverse = rank[np.asarray(inverse).ravel()]
    return X[:, first[order]], first[order], inverse, counts[order].astype(np.float64)


@dataclass
class ElasticNetLogit:
    weights: np.ndarray
    bias: float
    lam: float
    rho: float
    info: Optional[SolverInfo] = None

    @property
    def C(self) -> float:
        """Inverse regularisation strength in the conventional parametrisation (equals ``lam``)."""
        return self.lam

    @property
    def strength(self) -> float:
        """Conventional regularisation strength ``1 / lam``."""
        return 1.0 / self.lam

    @property
    def nonzero(self) -> int:
        return int(np.count_nonzero(self.weights))

    @property
    def zeros(self) -> int:
        return int(self.weights.size - self.nonzero)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.weights.size:
            raise AlignmentError(f"expected [N, {self.weights.size}] features, got {X.shape}")
        return X @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        """Labels in {-1, +1}; a score of exactly zero maps to +1."""
        return np.where(self.decision_function(X) >= 0, 1, -1)

    def objective(self, X, y) -> float:
        return objective(self.weights, self.bias, X, y, self.lam, self.rho)

    def to_dict(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias, "lam": self.lam,
                "rho": self.rho, "C": self.C, "strength": self.strength}

    @classmethod
    def from_dict(cls, d: dict) -> "ElasticNetLogit":
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d["bias"]),
                   float(d["lam"]), float(d["rho"]))


def fit_logit(X, y, lam: float, rho: float, tol: float = FIT_TOL, max_iter: int = 500,
              warm_start: Optional[ElasticNetLogit] = None) -> ElasticNetLogit:
    """Minimise the elastic-net logistic objective.

    ``y`` is in {-1, +1} (or {0, 1}); ``lam > 0`` weighs the data term and
    ``rho`` in [0, 1] mixes the L1 and L2 penalties.  ``tol`` bounds the
    final relative decrease and the KKT residual relative to ``lam * N``.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"X must be 2-D, got shape {X.shape}")
    yy = _as_pm1(y)
    if X.shape[0] != yy.size or X.shape[0] < 2:
        raise ValueError(f"need N >= 2 rows matching y, got X {X.shape}, y {yy.size}")
    if lam <= 0 or not 0 <= rho <= 1:
        raise ValueError(f"need lam > 0 and rho in [0, 1], got lam={lam}, rho={rho}")
    # identical columns are merged: the merged weight carries the L1 term once
    # and a ridge term divided by the multiplicity, which is what an equal
    # split of that weight over the copies costs.  The equal split is used
    # on expansion, so the fit does not depend on column order.
    Xu, first, inverse, mult = _unique_columns(X)
    if warm_start is not None and warm_start.weights.size == X.shape[1]:
        w = np.bincount(inverse, weights=warm_start.weights, minlength=len(first))
        b = float(warm_start.bias)
    else:
        w = np.zeros(Xu.shape[1])
        p = (yy > 0).mean()
        b = float(np.log(p / (1 - p)))
    l2 = (1.0 - float(rho)) / mult
    wu, b, info = _prox_newton(Xu, yy, float(lam), float(rho), w, b, tol, max_iter, l2)
    w = wu[inverse] / mult[inverse]
    info.kkt = kkt_violation(w, b, X, yy, lam, rho)
    info.objective = objective(w, b, X, yy, lam, rho)
    if not info.converged:
        log.warning("elastic-net solver stopped after %d iterations (kkt %.2e)",
                    info.iterations, info.kkt)
    return ElasticNetLogit(w, float(b), float(lam), float(rho), info)


# ------------------------------------------------------------ model selection
@dataclass
class CVResult:
    lam: float
    rho: float
    score: float
    table: Dict[Tuple[float, float], float]
    folds: int


def _n_folds(y_pm: np.ndarray, max_folds: int = 5) -> int:
    smallest = int(min(np.sum(y_pm > 0), np.sum(y_pm < 0)))
    if smallest < 2:
        raise FoldError(f"smallest class has {smallest} member(s); need at least 2 for CV")
    return min(max_folds, smallest)


def cross_validate(X, y, lam_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
                   rho_grid: Sequence[float] = DEFAULT_RHO_GRID, seed: int = 0,
                   max_folds: int = 5, tol: float = CV_TOL) -> CVResult:
    """Pick ``(lam, rho)`` by stratified k-fold validation accuracy.

    Ties go to the sparser setting: larger ``rho`` first, then smaller ``lam``
    (a smaller data weight means a relatively stronger L1 term).
    """
    X = np.asarray(X, dtype=np.float64)
    yy = _as_pm1(y)
    lam_grid = sorted(float(v) for v in lam_grid)
    rho_grid = sorted(float(v) for v in rho_grid)
    if not lam_grid or not rho_grid:
        raise ValueError("empty hyperparameter grid")
    k = _n_folds(yy, max_folds)
    if len(lam_grid) == 1 and len(rho_grid) == 1:
        return CVResult(lam_grid[0], rho_grid[0], float("nan"), {}, k)
    splitter = StratifiedKFold(n_splits=k, shuffle=True, random_state=seed)
    scores = {(lam, rho): [] for lam in lam_grid for rho in rho_grid}
    for tr, va in splitter.split(X, yy):
        Xtr, ytr = X[tr], yy[tr]
        for rho in rho_grid:
            prev = None
            for lam in lam_grid:  # ascending: sparsest first, warm-started
                m = fit_logit(Xtr, ytr, lam, rho, tol=tol, warm_start=prev)
                prev = m
                scores[(lam, rho)].append(float(np.mean(m.predict(X[va]) == yy[va])))
    table = {key: float(np.mean(v)) for key, v in scores.items()}
    best = max(table.items(), key=lambda kv: (round(kv[1], 12), kv[0][1], -kv[0][0]))
    (lam, rho), score = best
    return CVResult(lam, rho, score, table, k)


# --------------------------------------------------------- multi-depth model
FeatureKey = Tuple[int, Tuple[int, ...]]


@dataclass
class BinaryTask:
    """Three-step fit for one positive class."""

    positive: int
    depth_models: Dict[int, ElasticNetLogit]
    depth_cv: Dict[int, CVResult]
    ledger: List[Tuple[int, Tuple[int, ...], float]]
    keys: List[FeatureKey]
    final: ElasticNetLogit
    final_cv: Optional[CVResult] = None
    fallback_depth: Optional[int] = None


@dataclass
class MultiDepthClassifier:
    dictionaries: Dict[int, FeatureDictionary]
    tasks: List[BinaryTask]
    class_count: int
    label_names: List[str] = field(default_factory=list)

    @property
    def depths(self) -> List[int]:
        return sorted(self.dictionaries)

    @property
    def n_features_initial(self) -> int:
        return sum(len(d) for d in self.dictionaries.values())

    def selected_keys(self) -> List[FeatureKey]:
        """Aggregated feature keys across tasks (step-2 unions)."""
        seen = []
        for t in self.tasks:
            for k in t.keys:
                if k not in seen:
                    seen.append(k)
        return seen

    def final_keys(self) -> List[FeatureKey]:
        """Keys with a nonzero final coefficient in at least one task."""
        out = set()
        for t in self.tasks:
            out.update(k for k, w in zip(t.keys, t.final.weights) if w != 0)
        return sorted(out)

    @property
    def n_features_selected(self) -> int:
        return len(self.selected_keys())

    @property
    def n_features_final(self) -> int:
        return len(self.final_keys())

    # ----------------------------------------------------------- prediction
    def _check(self, feats: Dict[int, np.ndarray]) -> int:
        n = None
        for depth, dct in self.dictionaries.items():
            if depth not in feats:
                raise AlignmentError(f"missing features for depth {depth}")
            m = np.asarray(feats[depth])
            if m.ndim != 2 or m.shape[1] != len(dct):
                raise AlignmentError(
                    f"depth {depth}: expected {len(dct)} columns, got shape {m.shape}"
                )
            if n is not None and m.shape[0] != n:
                raise AlignmentError("feature matrices have different row counts")
            n = m.shape[0]
        return n

    def task_matrix(self, task: BinaryTask, feats: Dict[int, np.ndarray]) -> np.ndarray:
        return _assemble(feats, self.dictionaries, task.keys)

    def decision_function(self, feats: Dict[int, np.ndarray]) -> np.ndarray:
        """``[N]`` scores for binary problems, ``[N, C]`` for OvA."""
        self._check(feats)
        scores = [t.final.decision_function(self.task_matrix(t, feats)) for t in self.tasks]
        return scores[0] if len(self.tasks) == 1 else np.stack(scores, axis=1)

    def predict(self, feats: Dict[int, np.ndarray]) -> np.ndarray:
        s = self.decision_function(feats)
        if s.ndim == 1:
            return np.where(s >= 0, self.tasks[0].positive, 1 - self.tasks[0].positive)
        return np.argmax(s, axis=1)

    def explain(self, feats: Dict[int, np.ndarray], task_index: Optional[int] = None):
        """Per-instance list of active features for the predicted (or given) task."""
        self._check(feats)
        pred = self.predict(feats)
        out = []
        for i in range(len(pred)):
            t = self.tasks[task_index] if task_index is not None else self._task_for(int(pred[i]))
            imp = relative_importance(t.final.weights)
            Xi = self.task_matrix(t, {d: np.asarray(m)[i:i + 1] for d, m in feats.items()})[0]
            items = []
            for j, key in enumerate(t.keys):
                if Xi[j] and t.final.weights[j] != 0:
                    items.append(Contribution(key[0], key[1], float(t.final.weights[j]),
                                              float(imp[j])))
            items.sort(key=lambda c: -abs(c.coefficient))
            out.append(Explanation(int(pred[i]), t.positive, float(t.final.bias), items))
        return out

    def _task_for(self, label: int) -> BinaryTask:
        if len(self.tasks) == 1:
            return self.tasks[0]
        return self.tasks[label]

    # ------------------------------------------------------------ reporting
    def coefficient_table(self) -> List[dict]:
        rows = []
        for t in self.tasks:
            imp = relative_importance(t.final.weights)
            order = np.argsort(-np.abs(t.final.weights), kind="stable")
            for j in order:
                if t.final.weights[j] == 0:
                    continue
                depth, sub = t.keys[j]
                rows.append({"class": self._class_name(t.positive), "depth": depth,
                             "subsequence": render(sub),
                             "coefficient": float(t.final.weights[j]),
                             "relative_importance": float(imp[j])})
        return rows

    def _class_name(self, c: int) -> str:
        return self.label_names[c] if self.label_names else str(c)

    def write_coefficients_csv(self, path) -> None:
        rows = self.coefficient_table()
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, ["class", "depth", "subsequence", "coefficient",
                                    "relative_importance"], lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({**r, "coefficient": f"{r['coefficient']:.6g}",
                            "relative_importance": f"{r['relative_importance']:.6g}"})

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "format_version": FORMAT_VERSION,
            "class_count": self.class_count,
            "label_names": list(self.label_names),
            "dictionaries": {str(k): v.to_dict() for k, v in sorted(self.dictionaries.items())},
            "tasks": [_task_to_dict(t) for t in self.tasks],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MultiDepthClassifier":
        if d.get("format") != FORMAT or d.get("format_version") != FORMAT_VERSION:
            raise ValueError("not a tsglyph classifier file (or unsupported version)")
        dicts = {int(k): FeatureDictionary.from_dict(v) for k, v in d["dictionaries"].items()}
        return cls(dicts, [_task_from_dict(t) for t in d["tasks"]], int(d["class_count"]),
                   list(d.get("label_names", [])))


@dataclass
class Contribution:
    depth: int
    subsequence: Tuple[int, ...]
    coefficient: float
    importance: float


@dataclass
class Explanation:
    predicted: int
    task_class: int
    bias: float
    contributions: List[Contribution]


def relative_importance(weights) -> np.ndarray:
    """``|w_j| / sum_k |w_k|`` (all zeros when every weight is zero)."""
    a = np.abs(np.asarray(weights, dtype=np.float64))
    total = a.sum()
    return a / total if total > 0 else a


def _assemble(feats, dictionaries, keys) -> np.ndarray:
    n = next(iter(feats.values())).shape[0] if feats else 0
    out = np.zeros((n, len(keys)))
    for j, (depth, sub) in enumerate(keys):
        out[:, j] = np.asarray(feats[depth])[:, dictionaries[depth].index(sub)]
    return out


def _fit_task(feats, dictionaries, y_pm, positive, lam_grid, rho_grid, seed) -> BinaryTask:
    depth_models, depth_cv, ledger = {}, {}, []
    for depth in sorted(dictionaries):
        X = np.asarray(feats[depth], dtype=np.float64)
        cv = cross_validate(X, y_pm, lam_grid, rho_grid, seed=seed)
        m = fit_logit(X, y_pm, cv.lam, cv.rho)
        depth_models[depth], depth_cv[depth] = m, cv
        for j in np.flatnonzero(m.weights):
            ledger.append((depth, dictionaries[depth].entries[j], float(m.weights[j])))
    keys = [(d, s) for d, s, _ in ledger]
    if not keys:
        best = max(depth_cv, key=lambda d: (depth_cv[d].score, -d))
        warnings.warn(f"no feature survived step 1 for class {positive}; "
                      f"falling back to depth {best}", RuntimeWarning, stacklevel=3)
        keys = [(best, s) for s in dictionaries[best].entries]
        return BinaryTask(positive, depth_models, depth_cv, ledger, keys,
                          depth_models[best], depth_cv[best], fallback_depth=best)
    Xa = _assemble(feats, dictionaries, keys)
    cv = cross_validate(Xa, y_pm, lam_grid, rho_grid, seed=seed)
    final = fit_logit(Xa, y_pm, cv.lam, cv.rho)
    return BinaryTask(positive, depth_models, depth_cv, ledger, keys, final, cv)


def fit_multidepth(feats: Dict[int, np.ndarray], dictionaries: Dict[int, FeatureDictionary],
                   y, class_count: Optional[int] = None,
                   lam_grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
                   rho_grid: Sequence[float] = DEFAULT_RHO_GRID, seed: int = 0,
                   label_names: Optional[Sequence[str]] = None) -> MultiDepthClassifier:
    """Per-depth selection, union of surviving features, final fit.

    ``y`` holds class ids ``0..C-1``.  Two classes give one task with class 1
    as the positive side; more classes run the whole procedure One-vs-All.
    """
    if not dictionaries:
        raise ValueError("at least one depth is required")
    y = np.asarray(y, dtype=np.int64)
    C = int(class_count if class_count is not None else y.max() + 1)
    if np.unique(y).size < 2:
        raise DegenerateLabelError("need at least two classes")
    clf = MultiDepthClassifier(dict(dictionaries), [], C, list(label_names or []))
    clf._check(feats)
    positives = [1] if C == 2 else list(range(C))
    for c in positives:
        y_pm = np.where(y == c, 1.0, -1.0)
        clf.tasks.append(_fit_task(feats, dictionaries, y_pm, c, lam_grid, rho_grid, seed))
    return clf


def _task_to_dict(t: BinaryTask) -> dict:
    return {
        "positive": t.positive,
        "depth_models": {str(d): m.to_dict() for d, m in sorted(t.depth_models.items())},
        "depth_cv": {str(d): {"lam": c.lam, "rho": c.rho, "score": c.score}
                     for d, c in sorted(t.depth_cv.items())},
        "ledger": [{"depth": d, "subsequence": list(s), "coefficient": w} for d, s, w in t.ledger],
        "keys": [[d, list(s)] for d, s in t.keys],
        "final": t.final.to_dict(),
        "fallback_depth": t.fallback_depth,
    }


def _task_from_dict(d: dict) -> BinaryTask:
    cvs = {int(k): CVResult(v["lam"], v["rho"], v["score"], {}, 0)
           for k, v in d["depth_cv"].items()}
    return BinaryTask(
        int(d["positive"]),
        {int(k): ElasticNetLogit.from_dict(v) for k, v in d["depth_models"].items()},
        cvs,
        [(e["depth"], tuple(e["subsequence"]), e["coefficient"]) for e in d["ledger"]],
        [(int(k[0]), tuple(k[1])) for k in d["keys"]],
        ElasticNetLogit.from_dict(d["final"]),
        fallback_depth=d.get("fallback_depth"),
    )


def save_classifier(clf: MultiDepthClassifier, path) -> None:
    Path(path).write_text(json.dumps(clf.to_dict(), indent=1, sort_keys=True) + "\n")


def load_classifier(path) -> MultiDepthClassifier:
    return MultiDepthClassifier.from_dict(json.loads(Path(path).read_text()))
