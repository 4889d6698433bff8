"""``tsglyph`` command line: train, encode, classify, explain, benchmark, sweep.

Exit codes: 0 success, 2 usage/config/input error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import interpret, plotting
from .aps import PhaseRecord
from .autoencoder import (MAX_DEPTH, DepthError, ModelConfig, ModelFormatError,
                          SymbolicRepresentation, TrainingError, load_model, save_model)
from .classifier import (DEFAULT_LAMBDA_GRID, DEFAULT_RHO_GRID, DegenerateLabelError, FoldError,
                         load_classifier, save_classifier)
from .dataset import DatasetError, TimeSeriesDataset, find_dataset, load_dataset, znormalize
from .features import ALPHABET, build_dictionary, extract_matrix, parse, symbol
from .pipeline import PipelineConfig, PipelineResult, run, train_depth, usable_depth
from .synthetic import shapelet_sim

log = logging.getLogger("tsglyph")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
REPORT_SCHEMA = "tsglyph-benchmark/1"
SWEEP_SCHEMA = "tsglyph-sweep/1"
MANIFEST_SCHEMA = "tsglyph-manifest/1"
SYNTHETIC_SHAPELET = "synthetic-shapeletsim"
SMOKE_SUBSET = ("Coffee", "GunPoint", SYNTHETIC_SHAPELET, "ECG5000", "Strawberry")
# datasets scored in the published accuracy table; listed for convenience only
TABLE_DATASETS = (
    "Adiac", "Beef", "ChlorineConcentration", "Coffee", "ECG200", "ECG5000",
    "ECGFiveDays", "FaceFour", "FacesUCR", "GunPoint", "ItalyPowerDemand", "Lightning2",
    "Lightning7", "MedicalImages", "MoteStrain", "OliveOil", "ShapeletSim", "SonyAIBORobotSurface1",
    "SonyAIBORobotSurface2", "Strawberry", "SwedishLeaf", "Symbols", "SyntheticControl",
    "Trace", "TwoLeadECG",
)


class UsageError(Exception):
    """Bad flags, config values or input files (exit 2)."""


# ------------------------------------------------------------------ config
@dataclass
class RunConfig:
    dataset: str = ""
    train_path: str = ""
    test_path: str = ""
    data_root: str = "data/ucr"
    depths: int = MAX_DEPTH
    seed: int = 0
    seeds: int = 1
    jobs: int = 1
    out: str = "out"
    normalize: bool = True
    lam_grid: Tuple[float, ...] = DEFAULT_LAMBDA_GRID
    rho_grid: Tuple[float, ...] = DEFAULT_RHO_GRID
    model: ModelConfig = field(default_factory=ModelConfig)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "model"}
        d["lam_grid"] = list(self.lam_grid)
        d["rho_grid"] = list(self.rho_grid)
        d["model"] = asdict(self.model)
        return d

    def pipeline(self, seed: Optional[int] = None, codebook_size: Optional[int] = None) -> PipelineConfig:
        model = self.model if codebook_size is None else replace(self.model, codebook_size=codebook_size)
        return PipelineConfig(model=model, max_depth=self.depths, lam_grid=self.lam_grid,
                              rho_grid=self.rho_grid, seed=self.seed if seed is None else seed)


_RUN_KEYS = {f.name: f for f in fields(RunConfig) if f.name != "model"}
_MODEL_KEYS = {f.name: f for f in fields(ModelConfig) if f.name not in ("depth", "seed")}


def _coerce(text: str, current):
    text = text.strip()
    if isinstance(current, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(current, tuple):
        return tuple(float(v) for v in text.split(",") if v.strip())
    if isinstance(current, int):
        return int(text)
    if isinstance(current, float):
        return float(text)
    if current is None:
        if text.lower() in ("", "none"):
            return None
        try:
            return int(text)
        except ValueError:
            return float(text)
    return text


def read_config_file(path) -> Dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for n, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def build_config(settings: Dict[str, str]) -> RunConfig:
    """Apply string settings over the defaults and validate before any work starts."""
    cfg = RunConfig()
    mdl = {}
    for key, text in settings.items():
        try:
            if key in _RUN_KEYS:
                setattr(cfg, key, _coerce(text, getattr(cfg, key)))
            elif key in _MODEL_KEYS:
                mdl[key] = _coerce(text, getattr(cfg.model, key))
            else:
                raise UsageError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {exc}") from exc
    try:
        cfg.model = replace(cfg.model, **mdl)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid model config: {exc}") from exc
    if cfg.depths < 1:
        raise UsageError("depths must be >= 1")
    if cfg.seeds < 1 or cfg.jobs < 1:
        raise UsageError("seeds and jobs must be >= 1")
    if not cfg.lam_grid or any(v <= 0 for v in cfg.lam_grid):
        raise UsageError("lam_grid needs positive values")
    if not cfg.rho_grid or any(not 0 <= v <= 1 for v in cfg.rho_grid):
        raise UsageError("rho_grid values must lie in [0, 1]")
    if cfg.model.codebook_size > len(ALPHABET):
        log.warning("codebook_size %d exceeds the %d-letter alphabet; extra symbols render as <n>",
                    cfg.model.codebook_size, len(ALPHABET))
    return cfg


_FLAG_KEYS = {"seed": "seed", "depths": "depths", "codebook_size": "codebook_size",
              "latent_dim": "latent_dim", "beta": "beta", "seeds": "seeds", "jobs": "jobs",
              "data_root": "data_root", "dataset": "dataset", "train": "train_path",
              "test": "test_path"}


def config_from_args(args) -> RunConfig:
    settings = read_config_file(args.config) if getattr(args, "config", None) else {}
    for flag, key in _FLAG_KEYS.items():
        v = getattr(args, flag, None)
        if v is not None:
            settings[key] = str(v)
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        settings[k.strip().replace("-", "_")] = v
    if getattr(args, "out", None):
        settings["out"] = args.out
    return build_config(settings)


# ---------------------------------------------------------------- datasets
def resolve_dataset(name: str, cfg: RunConfig) -> TimeSeriesDataset:
    """Load ``name`` from the data root; the synthetic set is generated in memory."""
    if name == SYNTHETIC_SHAPELET:
        # the data stay fixed across training seeds
        ds, _ = shapelet_sim(seed=0)
        return ds
    try:
        tr, te = find_dataset(name, cfg.data_root)
        ds = load_dataset(tr, te, name=name)
    except (DatasetError, FileNotFoundError, OSError) as exc:
        raise UsageError(f"dataset {name!r}: {exc}") from exc
    return znormalize(ds) if cfg.normalize else ds


def dataset_from_config(cfg: RunConfig) -> TimeSeriesDataset:
    if cfg.train_path or cfg.test_path:
        if not (cfg.train_path and cfg.test_path):
            raise UsageError("--train and --test must be given together")
        try:
            ds = load_dataset(cfg.train_path, cfg.test_path,
                              name=cfg.dataset or Path(cfg.train_path).stem.replace("_TRAIN", ""))
        except (DatasetError, FileNotFoundError, OSError) as exc:
            raise UsageError(str(exc)) from exc
        return znormalize(ds) if cfg.normalize else ds
    if not cfg.dataset:
        raise UsageError("no dataset: pass --dataset NAME or --train/--test paths")
    return resolve_dataset(cfg.dataset, cfg)


# ---------------------------------------------------------- small file I/O
def _out_dir(cfg: RunConfig) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")
    return path


def _model_path(directory: Path, depth: int) -> Path:
    return directory / f"model_B{depth}.json"


def _repr_path(directory: Path, depth: int, split: str) -> Path:
    return directory / f"repr_B{depth}_{split}.csv"


def write_representations(path: Path, reps: Sequence[SymbolicRepresentation],
                          labels: Sequence[int]) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        tp = len(reps[0].indices) if reps else 0
        w.writerow(["instance_id", "label"] + [f"s{i}" for i in range(tp)])
        for i, (r, y) in enumerate(zip(reps, labels)):
            w.writerow([i, int(y)] + [symbol(int(v)) for v in r.indices])
    return path


def read_representations(path: Path, depth: int) -> Tuple[List[SymbolicRepresentation], np.ndarray]:
    reps, labels = [], []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:2] != ["instance_id", "label"]:
        raise UsageError(f"{path}: not a representation file")
    for row in rows[1:]:
        idx = np.array(parse("".join(row[2:])), dtype=np.int64)
        reps.append(SymbolicRepresentation(idx, PhaseRecord([], []), 0, depth))
        labels.append(int(row[1]))
    return reps, np.array(labels, dtype=np.int64)


def manifest(cfg: RunConfig, command: str, extra: Optional[dict] = None) -> dict:
    doc = {"schema": MANIFEST_SCHEMA, "command": command, "config": cfg.to_dict()}
    doc.update(extra or {})
    return doc


def _load_models(directory: Path) -> Dict[int, "object"]:
    models = {}
    for d in range(1, MAX_DEPTH + 1):
        p = _model_path(directory, d)
        if p.exists():
            try:
                models[d] = load_model(p)
            except (ModelFormatError, KeyError, ValueError) as exc:
                raise UsageError(f"{p}: {exc}") from exc
    if not models:
        raise UsageError(f"no model_B*.json files in {directory}")
    return models


# ----------------------------------------------------------------- commands
def cmd_train(cfg: RunConfig) -> int:
    ds = dataset_from_config(cfg)
    D = usable_depth(ds.length, cfg.depths, cfg.model.min_repr_length)
    out = _out_dir(cfg)
    pcfg = cfg.pipeline()

    def one(d):
        r = train_depth(ds, pcfg.model_config(d))
        log.info("depth %d: T'=%d train MAE %.4f symbols %d epochs %d (%.1fs)",
                 d, r.repr_length, r.train_mae, r.centroids_used, r.epochs, r.seconds)
        return r

    results = _fan_out(one, range(1, D + 1), cfg.jobs)
    depth_info = {}
    for r in results:
        save_model(r.model, _model_path(out, r.depth))
        depth_info[str(r.depth)] = {"file": _model_path(out, r.depth).name,
                                    "repr_length": r.repr_length, "train_mae": r.train_mae,
                                    "centroids_used": r.centroids_used, "epochs": r.epochs}
    _write_json(out / "manifest.json", manifest(cfg, "train", {
        "dataset": ds.name, "series_length": ds.length, "requested_depth": cfg.depths,
        "depths": depth_info}))
    print(json.dumps({d: v["repr_length"] for d, v in depth_info.items()}, sort_keys=True))
    return EXIT_OK


def cmd_encode(cfg: RunConfig, models_dir: str) -> int:
    ds = dataset_from_config(cfg)
    models = _load_models(Path(models_dir))
    out = _out_dir(cfg)
    for d, m in sorted(models.items()):
        if m.input_length is not None and m.input_length != ds.length:
            raise UsageError(f"model depth {d} expects length {m.input_length}, data has {ds.length}")
        for split, X, y in (("train", ds.train_values(), ds.train_labels()),
                            ("test", ds.test_values(), ds.test_labels())):
            if len(X):
                write_representations(_repr_path(out, d, split), m.represent(X), y)
    _write_json(out / "encode_manifest.json", manifest(cfg, "encode", {
        "dataset": ds.name, "models": models_dir, "depths": sorted(models),
        "label_names": ds.label_names}))
    return EXIT_OK


def _collect_reprs(directory: Path):
    train, test, ytr, yte = {}, {}, None, None
    for d in range(1, MAX_DEPTH + 1):
        ptr, pte = _repr_path(directory, d, "train"), _repr_path(directory, d, "test")
        if not ptr.exists():
            continue
        if not pte.exists():
            raise UsageError(f"{ptr} has no matching test file")
        train[d], a = read_representations(ptr, d)
        test[d], b = read_representations(pte, d)
        if ytr is not None and (not np.array_equal(a, ytr) or not np.array_equal(b, yte)):
            raise UsageError(f"labels of depth {d} disagree with the other depths")
        ytr, yte = a, b
    if not train:
        raise UsageError(f"no repr_B*_train.csv files in {directory}")
    return train, test, ytr, yte


def cmd_classify(cfg: RunConfig, reprs_dir: str) -> int:
    rdir = Path(reprs_dir)
    train, test, ytr, yte = _collect_reprs(rdir)
    names = []
    enc = rdir / "encode_manifest.json"
    if enc.exists():
        names = json.loads(enc.read_text()).get("label_names", [])
    C = max(len(names), int(max(ytr.max(), yte.max() if len(yte) else 0)) + 1)
    if len(np.unique(ytr)) < 2:
        raise UsageError("training labels contain a single class")
    dicts = {d: build_dictionary(r) for d, r in train.items()}
    ftr = {d: extract_matrix(train[d], dicts[d]) for d in train}
    fte = {d: extract_matrix(test[d], dicts[d]) for d in test}
    from .classifier import fit_multidepth
    clf = fit_multidepth(ftr, dicts, ytr, C, cfg.lam_grid, cfg.rho_grid, seed=cfg.seed,
                         label_names=names or None)
    metrics = {"train_acc": float(np.mean(clf.predict(ftr) == ytr)),
               "test_acc": float(np.mean(clf.predict(fte) == yte)) if len(yte) else None,
               "n_features_initial": clf.n_features_initial,
               "n_features_selected": clf.n_features_selected,
               "n_features_final": clf.n_features_final}
    out = _out_dir(cfg)
    save_classifier(clf, out / "classifier.json")
    clf.write_coefficients_csv(out / "coefficients.csv")
    _write_json(out / "metrics.json", metrics)
    print(json.dumps(metrics, sort_keys=True))
    return EXIT_OK


def cmd_explain(cfg: RunConfig, models_dir: str, classifier_path: str, instance: Optional[int],
                split: str, top: int) -> int:
    models = _load_models(Path(models_dir))
    try:
        clf = load_classifier(classifier_path)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"classifier {classifier_path}: {exc}") from exc
    missing = sorted(set(clf.depths) - set(models))
    if missing:
        raise UsageError(f"classifier uses depths {missing} with no model file")
    out = _out_dir(cfg)
    globals_ = []
    for c in range(clf.class_count):
        expls = interpret.explain_global(models, clf, c, top_n=top)
        interpret.render_global(expls, out / f"global_class{c}", title=f"class {c}")
        globals_.extend(expls)
    locals_ = []
    if instance is not None:
        ds = dataset_from_config(cfg)
        X = ds.test_values() if split == "test" else ds.train_values()
        if not 0 <= instance < len(X):
            raise UsageError(f"unknown instance id {instance} ({len(X)} {split} instances)")
        series = X[instance]
        reps = {d: models[d].represent(series) for d in clf.depths}
        feats = {d: extract_matrix([reps[d]], clf.dictionaries[d]) for d in clf.depths}
        pred = int(clf.predict(feats)[0])
        expl = interpret.explain_local(models, clf, reps, series, instance, class_id=pred)
        interpret.render_local(expl, out / f"local_{split}{instance}",
                               title=f"{split} instance {instance}, predicted class {pred}")
        locals_.append(expl)
    interpret.write_report(out / "explanation.json", globals_, locals_)
    return EXIT_OK


# ------------------------------------------------------- benchmark / sweep
def _fan_out(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


@dataclass
class RunRecord:
    dataset: str
    seed: int
    codebook_size: int
    result: Optional[PipelineResult] = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.result is not None


def run_one(cfg: RunConfig, name: str, seed: int, codebook_size: Optional[int] = None,
            progress=None) -> RunRecord:
    K = codebook_size or cfg.model.codebook_size
    try:
        ds = resolve_dataset(name, cfg)
        res = run(ds, cfg.pipeline(seed, K), progress=progress)
        return RunRecord(name, seed, K, res)
    except (UsageError, DatasetError, DegenerateLabelError, FoldError, DepthError,
            TrainingError, FloatingPointError, ValueError) as exc:
        log.error("%s seed %d K=%d failed: %s", name, seed, K, exc)
        return RunRecord(name, seed, K, error=f"{type(exc).__name__}: {exc}")


def _seed_list(cfg: RunConfig) -> List[int]:
    return [cfg.seed + i for i in range(cfg.seeds)]


def run_grid(cfg: RunConfig, datasets: Sequence[str], ks: Sequence[int]) -> List[RunRecord]:
    jobs = [(n, s, k) for k in ks for n in datasets for s in _seed_list(cfg)]
    progress = (lambda msg: log.info("%s", msg))
    return _fan_out(lambda j: run_one(cfg, j[0], j[1], j[2], progress), jobs, cfg.jobs)


def summarize(records: Sequence[RunRecord]) -> List[dict]:
    """One row per (K, dataset): means over successful seeds."""
    rows, groups = [], {}
    for r in records:
        groups.setdefault((r.codebook_size, r.dataset), []).append(r)
    for (K, name), recs in groups.items():
        good = [r.result for r in recs if r.ok]
        row = {"dataset": name, "codebook_size": K, "seeds": len(recs), "succeeded": len(good),
               "error": "; ".join(r.error for r in recs if not r.ok)}
        if good:
            row["test_acc"] = float(np.mean([g.test_acc for g in good]))
            row["test_acc_std"] = float(np.std([g.test_acc for g in good]))
            row["train_acc"] = float(np.mean([g.train_acc for g in good]))
            row["n_features_initial"] = float(np.mean([g.n_features_initial for g in good]))
            row["n_features_final"] = float(np.mean([g.n_features_final for g in good]))
            depths = sorted({d for g in good for d in g.depths})
            row["depths"] = {
                str(d): {"repr_length": good[0].depths[d].repr_length if d in good[0].depths else None,
                         "train_mae": float(np.mean([g.depths[d].train_mae for g in good if d in g.depths])),
                         "test_mae": float(np.mean([g.depths[d].test_mae for g in good if d in g.depths])),
                         "centroids_used": float(np.mean([g.depths[d].centroids_used
                                                          for g in good if d in g.depths]))}
                for d in depths}
            row["per_seed_test_acc"] = [g.test_acc for g in good]
        rows.append(row)
    return rows


def _fmt(v, nd=3) -> str:
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return "-"
    return f"{v:.{nd}f}" if isinstance(v, float) else str(v)


def _mean_acc(rows) -> Optional[float]:
    accs = [r["test_acc"] for r in rows if "test_acc" in r]
    return float(np.mean(accs)) if accs else None


def write_benchmark(out: Path, cfg: RunConfig, records: Sequence[RunRecord], stem: str = "benchmark") -> dict:
    rows = summarize(records)
    report = {"schema": REPORT_SCHEMA, "config": cfg.to_dict(), "datasets": rows,
              "mean_test_acc": _mean_acc(rows)}
    _write_json(out / f"{stem}.json", report)
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "codebook_size", "seeds", "succeeded", "test_acc", "test_acc_std",
                    "train_acc", "n_features_initial", "n_features_final", "error"])
        for r in rows:
            w.writerow([r["dataset"], r["codebook_size"], r["seeds"], r["succeeded"],
                        *(_fmt(r.get(k), 4) for k in ("test_acc", "test_acc_std", "train_acc",
                                                       "n_features_initial", "n_features_final")),
                        r["error"]])
    lines = [f"# Benchmark ({len(rows)} datasets, {cfg.seeds} seed(s) from {cfg.seed})", "",
             "## Accuracy", "", "| dataset | test acc | std | train acc | initial features | final features |",
             "|---|---|---|---|---|---|"]
    for r in rows:
        lines.append(f"| {r['dataset']} | {_fmt(r.get('test_acc'))} | {_fmt(r.get('test_acc_std'))} | "
                     f"{_fmt(r.get('train_acc'))} | {_fmt(r.get('n_features_initial'), 1)} | "
                     f"{_fmt(r.get('n_features_final'), 1)} |")
    lines += ["", f"Mean test accuracy: {_fmt(report['mean_test_acc'])}", "",
              "## Pointwise train MAE by depth", "", "| dataset | " +
              " | ".join(f"B={d}" for d in range(1, MAX_DEPTH + 1)) + " |",
              "|---|" + "---|" * MAX_DEPTH]
    for r in rows:
        dd = r.get("depths", {})
        lines.append(f"| {r['dataset']} | " + " | ".join(
            _fmt(dd[str(d)]["train_mae"], 4) if str(d) in dd else "-" for d in range(1, MAX_DEPTH + 1)) + " |")
    failures = [r for r in rows if r["error"]]
    if failures:
        lines += ["", "## Failures", ""] + [f"- {r['dataset']}: {r['error']}" for r in failures]
    (out / f"{stem}.md").write_text("\n".join(lines) + "\n")
    _plot_benchmark(out / f"{stem}_accuracy.svg", rows)
    return report


def _plot_benchmark(path: Path, rows) -> None:
    names = [r["dataset"] for r in rows if "test_acc" in r]
    accs = [r["test_acc"] for r in rows if "test_acc" in r]
    errs = [r["test_acc_std"] for r in rows if "test_acc" in r]
    with plotting.figure() as (fig, ax):
        ax.bar(range(len(names)), accs, yerr=errs, color=plotting.SERIES_COLOR, capsize=3)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right")
        ax.set_ylim(0, 1)
        ax.set_ylabel("test accuracy")
        plotting.save(fig, path)


def _write_timings(out: Path, records: Sequence[RunRecord], stem: str) -> None:
    # wall-clock numbers vary run to run, so they live apart from the reproducible report
    _write_json(out / f"{stem}_timings.json", [
        {"dataset": r.dataset, "seed": r.seed, "codebook_size": r.codebook_size,
         "seconds": r.result.seconds if r.ok else None,
         "per_depth": {str(d): round(x.seconds, 3) for d, x in r.result.depths.items()} if r.ok else {}}
        for r in records])


DATASET_ALIASES = {"smoke": SMOKE_SUBSET, "table": TABLE_DATASETS}


def _dataset_list(names: Optional[str]) -> List[str]:
    if not names:
        raise UsageError("empty dataset list")
    out = []
    for n in (n.strip() for n in names.split(",")):
        if n:
            out.extend(DATASET_ALIASES.get(n, (n,)))
    if not out:
        raise UsageError("empty dataset list")
    return out


def cmd_benchmark(cfg: RunConfig, datasets: List[str]) -> int:
    out = _out_dir(cfg)
    records = run_grid(cfg, datasets, [cfg.model.codebook_size])
    report = write_benchmark(out, cfg, records)
    _write_timings(out, records, "benchmark")
    print(json.dumps({"mean_test_acc": report["mean_test_acc"],
                      "datasets": {r["dataset"]: r.get("test_acc") for r in report["datasets"]}},
                     sort_keys=True))
    return EXIT_OK if any(r.ok for r in records) else EXIT_NUMERIC


def write_sweep(out: Path, cfg: RunConfig, records: Sequence[RunRecord], ks: Sequence[int]) -> dict:
    rows = summarize(records)
    by_k = {}
    for K in sorted(ks):
        krows = [r for r in rows if r["codebook_size"] == K]
        used = [v["centroids_used"] for r in krows for v in r.get("depths", {}).values()]
        by_k[str(K)] = {"mean_test_acc": _mean_acc(krows),
                        "centroids_used_mean": float(np.mean(used)) if used else None,
                        "centroids_used_fraction": float(np.mean(used) / K) if used else None,
                        "datasets": krows}
    report = {"schema": SWEEP_SCHEMA, "config": cfg.to_dict(), "codebook_sizes": sorted(ks),
              "by_codebook_size": by_k}
    _write_json(out / "sweep.json", report)
    names = sorted({r["dataset"] for r in rows}, key=lambda n: [r["dataset"] for r in rows].index(n))
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["codebook_size", "dataset", "test_acc", "centroids_used_mean", "error"])
        for K in sorted(ks):
            for r in by_k[str(K)]["datasets"]:
                used = [v["centroids_used"] for v in r.get("depths", {}).values()]
                w.writerow([K, r["dataset"], _fmt(r.get("test_acc"), 4),
                            _fmt(float(np.mean(used)) if used else None, 2), r["error"]])
    lines = [f"# Codebook size sweep ({cfg.seeds} seed(s) from {cfg.seed})", "",
             "| dataset | " + " | ".join(f"K={K}" for K in sorted(ks)) + " |",
             "|---|" + "---|" * len(ks)]
    for n in names:
        cells = []
        for K in sorted(ks):
            hit = [r for r in by_k[str(K)]["datasets"] if r["dataset"] == n]
            cells.append(_fmt(hit[0].get("test_acc")) if hit else "-")
        lines.append(f"| {n} | " + " | ".join(cells) + " |")
    lines.append("| **mean** | " + " | ".join(_fmt(by_k[str(K)]["mean_test_acc"]) for K in sorted(ks)) + " |")
    lines += ["", "## Codebook usage (distinct centroids used on train, mean over depths)", "",
              "| K | mean used | fraction |", "|---|---|---|"]
    for K in sorted(ks):
        b = by_k[str(K)]
        lines.append(f"| {K} | {_fmt(b['centroids_used_mean'], 2)} | {_fmt(b['centroids_used_fraction'])} |")
    (out / "sweep.md").write_text("\n".join(lines) + "\n")
    with plotting.figure() as (fig, ax):
        xs = sorted(ks)
        ax.plot(xs, [by_k[str(K)]["mean_test_acc"] or np.nan for K in xs], marker="o",
                color=plotting.SERIES_COLOR)
        ax.set_xscale("log", base=2)
        ax.set_xticks(xs)
        ax.set_xticklabels([str(K) for K in xs])
        ax.set_xlabel("codebook size K")
        ax.set_ylabel("mean test accuracy")
        plotting.save(fig, out / "sweep_accuracy.svg")
    return report


def cmd_sweep(cfg: RunConfig, datasets: List[str], ks: Sequence[int]) -> int:
    if not ks or any(k < 2 for k in ks):
        raise UsageError("codebook sizes must be >= 2")
    out = _out_dir(cfg)
    records = run_grid(cfg, datasets, ks)
    report = write_sweep(out, cfg, records, ks)
    write_benchmark(out, cfg, records, stem="sweep_runs")
    _write_timings(out, records, "sweep")
    print(json.dumps({K: v["mean_test_acc"] for K, v in report["by_codebook_size"].items()},
                     sort_keys=True))
    return EXIT_OK if any(r.ok for r in records) else EXIT_NUMERIC


# --------------------------------------------------------------------- main
def _common(p: argparse.ArgumentParser, data: bool = True) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--depths", type=int, help="maximum depth D (capped so T' >= 4 and D <= 5)")
    p.add_argument("--codebook-size", type=int, dest="codebook_size")
    p.add_argument("--latent-dim", type=int, dest="latent_dim")
    p.add_argument("--beta", type=float)
    p.add_argument("--jobs", type=int, help="worker threads")
    p.add_argument("-v", "--verbose", action="store_true")
    if data:
        p.add_argument("--dataset", help="dataset name under the data root")
        p.add_argument("--data-root", dest="data_root")
        p.add_argument("--train", help="train split file")
        p.add_argument("--test", help="test split file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsglyph", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("train", help="train one model per depth")
    _common(p)
    p = sub.add_parser("encode", help="write symbolic representations")
    _common(p)
    p.add_argument("--models", required=True, help="directory with model_B*.json")
    p = sub.add_parser("classify", help="fit the multi-depth classifier on representations")
    _common(p, data=False)
    p.add_argument("--reprs", required=True, help="directory with repr_B*_{train,test}.csv")
    p = sub.add_parser("explain", help="global and local explanation reports")
    _common(p)
    p.add_argument("--models", required=True)
    p.add_argument("--classifier", required=True)
    p.add_argument("--instance", type=int)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--top", type=int, default=3)
    for name in ("benchmark", "sweep"):
        p = sub.add_parser(name, help="full pipeline over several datasets" if name == "benchmark"
                           else "benchmark repeated per codebook size")
        _common(p, data=False)
        p.add_argument("--datasets", default=None, help="comma-separated dataset names")
        p.add_argument("--data-root", dest="data_root")
        p.add_argument("--seeds", type=int, help="average over this many seeds")
        if name == "sweep":
            p.add_argument("--ks", default="8,16,32", help="comma-separated codebook sizes")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "encode":
            return cmd_encode(cfg, args.models)
        if args.command == "classify":
            return cmd_classify(cfg, args.reprs)
        if args.command == "explain":
            return cmd_explain(cfg, args.models, args.classifier, args.instance, args.split, args.top)
        if args.command == "benchmark":
            return cmd_benchmark(cfg, _dataset_list(args.datasets))
        if args.command == "sweep":
            try:
                ks = [int(k) for k in args.ks.split(",") if k.strip()]
            except ValueError as exc:
                raise UsageError(f"bad --ks: {exc}") from exc
            return cmd_sweep(cfg, _dataset_list(args.datasets), ks)
    except (UsageError, DatasetError, DegenerateLabelError, FoldError, DepthError,
            ModelFormatError) as exc:
        print(f"tsglyph: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingError, FloatingPointError) as exc:
        print(f"tsglyph: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
