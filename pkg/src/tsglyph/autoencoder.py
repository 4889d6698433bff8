"""Shift-equivariant convolutional autoencoder with a VQ bottleneck.

Encoder block: conv(k=3, same) -> adaptive polyphase downsample -> LeakyReLU.
Decoder block: phase-directed zero insertion -> conv(k=3, same) -> LeakyReLU,
with the activation dropped in the last block.  The encoder's first conv maps
1 -> Z channels and the decoder's last conv maps Z -> 1.

The per-instance training loss is

    mean((x - dec(E_q))**2) + mean((sg[e] - E_q)**2) + beta * mean((e - sg[E_q])**2)

with a straight-through gradient from the decoder input to the encoder
output, averaged over the batch.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import aps, receptive
from .aps import PhaseRecord
from .nn import (AdamState, ConvLayer, ShapeError, adam_step, conv1d_backward,
                 conv1d_forward, leaky_relu, leaky_relu_backward)
from .vq import Codebook, QuantizedSequence, init_codebook, nearest

log = logging.getLogger(__name__)

FORMAT_NAME = "tsglyph-model"
FORMAT_VERSION = 1
MAX_DEPTH = 5


class DepthError(ValueError):
    """Series too short for the requested number of blocks."""


class TrainingError(RuntimeError):
    """Raised when the training loss stops being finite."""

    def __init__(self, epoch: int, message: str = "loss is not finite"):
        super().__init__(f"epoch {epoch}: {message}")
        self.epoch = epoch


class ModelFormatError(ValueError):
    """Unreadable or incompatible model file."""


@dataclass
class ModelConfig:
    depth: int = 1
    latent_dim: int = 64
    codebook_size: int = 32
    beta: float = 0.25
    lr: float = 3e-3
    epochs: int = 1000
    batch_size: Optional[int] = None
    patience: int = 100
    seed: int = 0
    slope: float = 0.01
    codebook_solver: str = "adam"
    codebook_lr: Optional[float] = None
    codebook_init: str = "fitted"
    warmup_epochs: int = 0
    codebook_init_std: float = 1.5
    conv_bias: bool = True
    min_repr_length: int = 4

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.codebook_size < 2 or self.latent_dim < 1:
            raise ValueError("need codebook_size >= 2 and latent_dim >= 1")
        if self.codebook_solver not in ("sgd", "adam"):
            raise ValueError(f"unknown codebook solver {self.codebook_solver!r}")
        if self.codebook_init not in ("standard", "fitted"):
            raise ValueError(f"unknown codebook init {self.codebook_init!r}")
        if not 0 < self.slope < 1:
            raise ValueError(f"slope must lie in (0, 1), got {self.slope}")

    def effective_batch_size(self, n: int) -> int:
        if self.batch_size:
            return min(self.batch_size, n)
        return min(n, DEFAULT_BATCH_SIZE)

    def schedule(self, n: int) -> Tuple[int, int]:
        """(passes, patience in passes) for ``n`` training series.

        ``epochs`` and ``patience`` count parameter updates at full batch.  A
        pass over more series than one batch makes several updates, so the
        number of passes shrinks to keep the update budget.
        """
        per_pass = -(-n // self.effective_batch_size(n))
        return -(-self.epochs // per_pass), max(MIN_PATIENCE, -(-self.patience // per_pass))

    def effective_codebook_lr(self) -> float:
        if self.codebook_lr is not None:
            return self.codebook_lr
        if self.codebook_solver == "adam":
            return DEFAULT_ADAM_CODEBOOK_SCALE * self.lr
        return DEFAULT_SGD_CODEBOOK_SCALE * self.lr * self.latent_dim

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


# SGD on the mean-reduced codebook loss sees gradients shrunk by 1/Z; the
# default step compensates so centroids track their assigned embeddings.
DEFAULT_SGD_CODEBOOK_SCALE = 0.5 * 1000.0
# Embeddings keep drifting while the network trains; centroids need a larger
# step than the network weights to keep their assignments.
DEFAULT_ADAM_CODEBOOK_SCALE = 10.0
# larger training sets are split into batches of this size
DEFAULT_BATCH_SIZE = 128
MIN_PATIENCE = 10


def block_lengths(length: int, depth: int) -> List[int]:
    """Sequence lengths entering each block, plus the final representation length."""
    out = [int(length)]
    for _ in range(depth):
        out.append(aps.half_length(out[-1]))
    return out


def representation_length(length: int, depth: int) -> int:
    return block_lengths(length, depth)[-1]


def max_depth(length: int, min_repr_length: int = 4, cap: int = MAX_DEPTH) -> int:
    """Largest depth whose representation keeps at least ``min_repr_length`` steps."""
    d = 0
    n = length
    while d < cap:
        n = aps.half_length(n)
        if n < min_repr_length:
            break
        d += 1
    return d


@dataclass
class SymbolicRepresentation:
    indices: np.ndarray
    phases: PhaseRecord
    source_length: int
    depth: int

    def __len__(self) -> int:
        return len(self.indices)


@dataclass
class _Forward:
    x: np.ndarray
    phases: np.ndarray  # [N, B]
    lengths: List[int]
    enc_in: List[np.ndarray]  # unfolded conv inputs
    enc_down: List[np.ndarray]
    emb: np.ndarray  # [N, Z, T']
    dec_in: List[np.ndarray]  # unfolded conv inputs
    dec_pre: List[np.ndarray]
    recon: np.ndarray  # [N, 1, T]


@dataclass
class LossTerms:
    total: float
    reconstruction: float
    codebook: float
    commitment: float


class Autoencoder:
    """Trained (or freshly initialised) model for a single depth."""

    def __init__(self, config: ModelConfig, input_length: Optional[int] = None,
                 encoder: Optional[List[ConvLayer]] = None,
                 decoder: Optional[List[ConvLayer]] = None,
                 codebook: Optional[Codebook] = None,
                 loss_trace: Optional[List[float]] = None):
        self.config = config
        self.input_length = input_length
        rng = np.random.default_rng(config.seed)
        B, Z = config.depth, config.latent_dim
        if encoder is None:
            encoder = [ConvLayer.init(1 if b == 0 else Z, Z, rng, config.conv_bias)
                       for b in range(B)]
        if decoder is None:
            decoder = [ConvLayer.init(Z, 1 if j == B - 1 else Z, rng, config.conv_bias)
                       for j in range(B)]
        if codebook is None:
            codebook = init_codebook(config.codebook_size, Z, seed=config.seed + 7919,
                                     std=config.codebook_init_std)
        if len(encoder) != B or len(decoder) != B:
            raise ShapeError("encoder and decoder must both have `depth` blocks")
        self.encoder = encoder
        self.decoder = decoder
        self.codebook = codebook
        self.loss_trace: List[float] = list(loss_trace or [])
        if input_length is not None:
            self._check_length(input_length)

    # ------------------------------------------------------------------ params
    def parameters(self) -> Dict[str, np.ndarray]:
        p = {}
        for b, layer in enumerate(self.encoder):
            p[f"enc{b}.w"] = layer.weights
            p[f"enc{b}.b"] = layer.bias
        for j, layer in enumerate(self.decoder):
            p[f"dec{j}.w"] = layer.weights
            p[f"dec{j}.b"] = layer.bias
        p["codebook"] = self.codebook.centroids
        return p

    def _check_length(self, length: int) -> None:
        need = self.config.min_repr_length
        if length < 2 or representation_length(length, self.config.depth) < need:
            raise DepthError(
                f"series of length {length} is too short for depth {self.config.depth} "
                f"(representation would be shorter than {need})"
            )

    # ----------------------------------------------------------------- forward
    def _encode_batch(self, x: np.ndarray, phases: Optional[np.ndarray] = None):
        cfg = self.config
        n, _, length = x.shape
        self._check_length(length)
        lengths = block_lengths(length, cfg.depth)
        chosen = np.zeros((n, cfg.depth), dtype=np.int64)
        enc_in, enc_down = [], []
        h = x
        for b, layer in enumerate(self.encoder):
            a = conv1d_forward(layer, h, cache=enc_in)
            if phases is None:
                d, ph = aps.aps_down(a)
            else:
                ph = phases[:, b]
                d = aps.aps_down_pinned(a, ph)
            chosen[:, b] = ph
            enc_down.append(d)
            h = leaky_relu(d, cfg.slope)
        return h, chosen, lengths, enc_in, enc_down

    def _decode_batch(self, z: np.ndarray, phases: np.ndarray, lengths: Sequence[int]):
        cfg = self.config
        B = cfg.depth
        dec_in, dec_pre = [], []
        for j, layer in enumerate(self.decoder):
            b = B - 1 - j
            u = aps.aps_up(z, phases[:, b], lengths[b])
            a = conv1d_forward(layer, u, cache=dec_in)
            dec_pre.append(a)
            z = a if j == B - 1 else leaky_relu(a, cfg.slope)
        return z, dec_in, dec_pre

    def _forward(self, x, phases=None, frozen=None) -> Tuple[_Forward, dict]:
        emb, ph, lengths, enc_in, enc_down = self._encode_batch(x, phases)
        n, Z, tp = emb.shape
        e_rows = emb.transpose(0, 2, 1).reshape(-1, Z)
        if frozen is None:
            idx = nearest(self.codebook.centroids, e_rows)
            e0 = e_rows.copy()
            q0 = self.codebook.centroids[idx].copy()
        else:
            idx, e0, q0 = frozen["indices"], frozen["e0"], frozen["q0"]
        z_rows = e_rows + (q0 - e0)
        z = z_rows.reshape(n, tp, Z).transpose(0, 2, 1)
        recon, dec_in, dec_pre = self._decode_batch(z, ph, lengths)
        fw = _Forward(x, ph, lengths, enc_in, enc_down, emb, dec_in, dec_pre, recon)
        state = {"indices": idx, "e0": e0, "q0": q0, "e_rows": e_rows}
        return fw, state

    # ---------------------------------------------------------------- backward
    def _loss_and_grads(self, x: np.ndarray, phases=None, frozen=None):
        cfg = self.config
        fw, st = self._forward(x, phases, frozen)
        n, Z, tp = fw.emb.shape
        diff = fw.recon - x
        rec = float(np.mean(diff ** 2))
        C = self.codebook.centroids
        idx, e0, q0, e_rows = st["indices"], st["e0"], st["q0"], st["e_rows"]
        cb_diff = e0 - C[idx]
        cb = float(np.mean(cb_diff ** 2))
        com_diff = e_rows - q0
        com = float(np.mean(com_diff ** 2))
        total = rec + cb + cfg.beta * com

        grads: Dict[str, np.ndarray] = {}
        g = 2.0 * diff / diff.size
        B = cfg.depth
        for j in range(B - 1, -1, -1):
            layer = self.decoder[j]
            if j != B - 1:
                g = leaky_relu_backward(fw.dec_pre[j], g, cfg.slope)
            gw, gb, gu = conv1d_backward(layer, _shape_of(fw.dec_in[j], layer), g,
                                         cols=fw.dec_in[j])
            grads[f"dec{j}.w"], grads[f"dec{j}.b"] = gw, gb
            b = B - 1 - j
            g = aps.aps_up_backward(gu, fw.phases[:, b], fw.lengths[b + 1])
        # g is now d/d(decoder input); straight-through onto the embeddings
        g_rows = g.transpose(0, 2, 1).reshape(-1, Z)
        g_rows = g_rows + cfg.beta * 2.0 * com_diff / com_diff.size
        g = g_rows.reshape(n, tp, Z).transpose(0, 2, 1)
        for b in range(B - 1, -1, -1):
            layer = self.encoder[b]
            g = leaky_relu_backward(fw.enc_down[b], g, cfg.slope)
            g = aps.aps_down_backward(g, fw.phases[:, b], fw.lengths[b])
            gw, gbias, g = conv1d_backward(layer, _shape_of(fw.enc_in[b], layer), g,
                                           cols=fw.enc_in[b])
            grads[f"enc{b}.w"], grads[f"enc{b}.b"] = gw, gbias
        gc = np.zeros_like(C)
        np.add.at(gc, idx, -2.0 * cb_diff / cb_diff.size)
        grads["codebook"] = gc
        terms = LossTerms(total, rec, cb, com)
        return terms, grads, fw, st

    def loss_closure(self, x: np.ndarray):
        """Loss/gradient closure over :meth:`parameters` with phases, assignments
        and stop-gradient values frozen at the current parameters.

        At the freezing point its value equals the training loss, and its exact
        gradient equals the straight-through gradient used in training, so it
        can be fed to :func:`tsglyph.nn.grad_check`.
        """
        xb = _as_series_batch(x)
        fw, st = self._forward(xb)
        frozen = {"indices": st["indices"].copy(), "e0": st["e0"].copy(),
                  "q0": st["q0"].copy()}
        phases = fw.phases.copy()
        params = self.parameters()

        def closure(p):
            for name, arr in p.items():
                if arr is not params[name]:
                    params[name][...] = arr
            terms, grads, _, _ = self._loss_and_grads(xb, phases=phases, frozen=frozen)
            return terms.total, grads

        return closure

    def loss(self, x: np.ndarray) -> LossTerms:
        terms, _, _, _ = self._loss_and_grads(_as_series_batch(x))
        return terms

    # --------------------------------------------------------------- public API
    def encode(self, x: np.ndarray, phases: Optional[PhaseRecord] = None):
        """Embeddings ``[T', Z]`` and the phase record for one series.

        For a ``[N, T]`` batch returns ``[N, T', Z]`` and a list of records.
        """
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        xb = _as_series_batch(x)
        ph = None
        if phases is not None:
            recs = [phases] if single else list(phases)
            ph = np.array([r.phases for r in recs], dtype=np.int64)
        emb, chosen, lengths, _, _ = self._encode_batch(xb, ph)
        emb = emb.transpose(0, 2, 1)
        recs = [_record(chosen[i], lengths) for i in range(len(xb))]
        if single:
            return emb[0], recs[0]
        return emb, recs

    def represent(self, x: np.ndarray):
        """Symbolic representation(s) of one series ``[T]`` or a batch ``[N, T]``."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        xb = _as_series_batch(x)
        emb, chosen, lengths, _, _ = self._encode_batch(xb)
        n, Z, tp = emb.shape
        idx = nearest(self.codebook.centroids, emb.transpose(0, 2, 1).reshape(-1, Z))
        idx = idx.reshape(n, tp)
        np.add.at(self.codebook.usage, idx.ravel(), 1)
        reps = [SymbolicRepresentation(idx[i].copy(), _record(chosen[i], lengths),
                                       xb.shape[2], self.config.depth) for i in range(n)]
        return reps[0] if single else reps

    def quantize(self, x: np.ndarray) -> QuantizedSequence:
        emb, _ = self.encode(np.asarray(x, dtype=np.float64))
        idx = nearest(self.codebook.centroids, emb)
        return QuantizedSequence(idx, self.codebook.centroids[idx].copy(), emb)

    def _vectors(self, q) -> np.ndarray:
        if isinstance(q, QuantizedSequence):
            return np.asarray(q.vectors, dtype=np.float64)
        if isinstance(q, SymbolicRepresentation):
            q = q.indices
        q = np.asarray(q)
        if q.ndim == 1:
            if not np.issubdtype(q.dtype, np.integer):
                raise ShapeError("a 1-D decoder input must be an index sequence")
            return self.codebook.centroids[q]
        if q.ndim == 2 and q.shape[1] == self.config.latent_dim:
            return q.astype(np.float64)
        raise ShapeError(f"cannot decode input of shape {q.shape}")

    def decode(self, q, phases: PhaseRecord, target_length: Optional[int] = None) -> np.ndarray:
        """Reconstruct a series from indices, quantized vectors or a ``[T', Z]`` array."""
        vec = self._vectors(q)
        if target_length is None:
            target_length = phases.lengths[0] if phases.lengths else self.input_length
        lengths = block_lengths(target_length, self.config.depth)
        if len(phases) != self.config.depth or list(phases.lengths) != lengths[:-1]:
            raise ShapeError("phase record does not match model depth / target length")
        if vec.shape[0] != lengths[-1]:
            raise ShapeError(
                f"representation has {vec.shape[0]} steps, expected {lengths[-1]} "
                f"for target length {target_length}"
            )
        ph = np.array([phases.phases], dtype=np.int64)
        out, _, _ = self._decode_batch(vec.T[None], ph, lengths)
        return out[0, 0]

    def reconstruct(self, x: np.ndarray) -> np.ndarray:
        """Encode, quantize and decode a batch ``[N, T]`` (or one series)."""
        x = np.asarray(x, dtype=np.float64)
        xb = _as_series_batch(x)
        fw, _ = self._forward(xb)
        out = fw.recon[:, 0]
        return out[0] if x.ndim == 1 else out

    def geometry(self, phases: Optional[PhaseRecord] = None,
                 length: Optional[int] = None) -> receptive.LayerGeometry:
        if phases is not None:
            return receptive.encoder_geometry(self.config.depth, phases.lengths[0],
                                              phases.phases)
        return receptive.encoder_geometry(self.config.depth, length or self.input_length)

    def decode_partial(self, rep: SymbolicRepresentation, keep) -> Tuple[np.ndarray, receptive.PreImage]:
        """Decode only the kept positions (others set to the zero vector).

        Returns the reconstruction cropped to the output span of the kept
        positions, and that span.
        """
        positions = _keep_positions(keep, len(rep.indices))
        Z = self.config.latent_dim
        vec = np.zeros((len(rep.indices), Z))
        vec[positions] = self.codebook.centroids[np.asarray(rep.indices)[positions]]
        full = self.decode(vec, rep.phases, rep.source_length)
        span = receptive.output_span(self.geometry(rep.phases), int(positions.min()),
                                     int(positions.max()))
        return full[span.as_slice()], span

    # ----------------------------------------------------------- persistence
    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "format_version": FORMAT_VERSION,
            "config": asdict(self.config),
            "seed": self.config.seed,
            "input_length": self.input_length,
            "encoder_weights": [_layer_to_dict(l) for l in self.encoder],
            "decoder_weights": [_layer_to_dict(l) for l in self.decoder],
            "codebook": _array_to_dict(self.codebook.centroids),
            "loss_trace": [float(v) for v in self.loss_trace],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Autoencoder":
        if not isinstance(d, dict) or d.get("format") != FORMAT_NAME:
            raise ModelFormatError("not a tsglyph model file")
        if d.get("format_version") != FORMAT_VERSION:
            raise ModelFormatError(
                f"unsupported model format version {d.get('format_version')!r}"
            )
        try:
            cfg = ModelConfig.from_dict(d["config"])
            enc = [_layer_from_dict(l) for l in d["encoder_weights"]]
            dec = [_layer_from_dict(l) for l in d["decoder_weights"]]
            cb = Codebook(_array_from_dict(d["codebook"]))
            return cls(cfg, d.get("input_length"), enc, dec, cb, d.get("loss_trace", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"corrupt model file: {exc}") from exc


def _shape_of(cols: np.ndarray, layer: ConvLayer) -> np.ndarray:
    # conv1d_backward only needs the input's shape when the columns are given
    _, _, n, length = cols.shape
    return np.broadcast_to(np.zeros(()), (n, layer.in_channels, length))


def _record(phases_row, lengths) -> PhaseRecord:
    rec = PhaseRecord()
    for b, ph in enumerate(phases_row):
        rec.append(int(ph), lengths[b])
    return rec


def _as_series_batch(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, None, :]
    if x.ndim == 2:
        return x[:, None, :]
    if x.ndim == 3 and x.shape[1] == 1:
        return x
    raise ShapeError(f"expected a series [T] or batch [N, T], got shape {x.shape}")


def _keep_positions(keep, length: int) -> np.ndarray:
    if isinstance(keep, slice):
        pos = np.arange(length)[keep]
    elif isinstance(keep, (int, np.integer)):
        pos = np.array([int(keep)])
    else:
        pos = np.unique(np.asarray(list(keep), dtype=np.int64))
    if pos.size == 0:
        raise ValueError("keep selects no positions")
    if pos.min() < 0 or pos.max() >= length:
        raise ValueError(f"keep positions must lie in [0, {length})")
    return pos


def _array_to_dict(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": [float(v) for v in np.ravel(a)]}


def _array_from_dict(d: dict) -> np.ndarray:
    return np.asarray(d["data"], dtype=np.float64).reshape(d["shape"])


def _layer_to_dict(layer: ConvLayer) -> dict:
    return {"weights": _array_to_dict(layer.weights), "bias": _array_to_dict(layer.bias)}


def _layer_from_dict(d: dict) -> ConvLayer:
    return ConvLayer(_array_from_dict(d["weights"]), _array_from_dict(d["bias"]))


def save_model(model: Autoencoder, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()))


def load_model(path) -> Autoencoder:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"corrupt model file {path}: {exc}") from exc
    return Autoencoder.from_dict(d)


# ---------------------------------------------------------------- training
def _training_array(data) -> np.ndarray:
    x = data.train_values() if hasattr(data, "train_values") else np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"expected training data [N, T], got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("training data contain non-finite values")
    return x


def fitted_gaussian_centroids(model: Autoencoder, X: np.ndarray) -> np.ndarray:
    """Centroids drawn from a Gaussian matched to the mean and covariance of
    the model's current embeddings of ``X``."""
    emb, _, _, _, _ = model._encode_batch(np.asarray(X, dtype=np.float64)[:, None, :])
    rows = emb.transpose(0, 2, 1).reshape(-1, emb.shape[1])
    mean = rows.mean(axis=0)
    cov = np.cov(rows, rowvar=False) if rows.shape[0] > 1 else np.eye(rows.shape[1])
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise TrainingError(0, "embedding statistics are not finite")
    rng = np.random.default_rng(model.config.seed + 7919)
    K = model.config.codebook_size
    scale = model.config.codebook_init_std ** 2
    return rng.multivariate_normal(mean, scale * np.atleast_2d(cov), size=K, method="eigh")


def train(data, cfg: ModelConfig, callback=None) -> Autoencoder:
    """Fit one autoencoder on the training split of ``data``.

    ``data`` is a :class:`~tsglyph.dataset.TimeSeriesDataset` (only its train
    split is used) or a ``[N, T]`` array.  Parameters from the epoch with the
    lowest mean loss are kept.
    """
    X = _training_array(data)
    n, T = X.shape
    model = Autoencoder(cfg, input_length=T)
    rng = np.random.default_rng(cfg.seed + 1)
    params = model.parameters()
    net_names = [k for k in params if k != "codebook"]
    adam = AdamState(lr=cfg.lr)
    xb_all = X[:, None, :]
    for epoch in range(cfg.warmup_epochs):
        # plain autoencoder steps: the decoder sees the embeddings directly
        _, st = model._forward(xb_all)
        frozen = {"indices": st["indices"], "e0": st["e_rows"], "q0": st["e_rows"]}
        _, grads, _, _ = model._loss_and_grads(xb_all, frozen=frozen)
        adam_step(params, {k: grads[k] for k in net_names}, adam)
    if cfg.codebook_init == "fitted":
        model.codebook.centroids[...] = fitted_gaussian_centroids(model, X)
    cb_adam = AdamState(lr=cfg.effective_codebook_lr())
    cb_lr = cfg.effective_codebook_lr()
    bs = cfg.effective_batch_size(n)

    best = np.inf
    best_epoch = 0
    best_params = None
    passes, patience = cfg.schedule(n)
    # overflow on the way to divergence is caught by the finiteness checks
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(passes):
            order = np.arange(n) if bs >= n else rng.permutation(n)
            total = 0.0
            model.codebook.reset_usage()
            for start in range(0, n, bs):
                sel = order[start:start + bs]
                terms, grads, _, st = model._loss_and_grads(xb_all[sel])
                if not np.isfinite(terms.total):
                    raise TrainingError(epoch)
                np.add.at(model.codebook.usage, st["indices"], 1)
                adam_step(params, {k: grads[k] for k in net_names}, adam)
                if cfg.codebook_solver == "adam":
                    adam_step(params, {"codebook": grads["codebook"]}, cb_adam)
                else:
                    params["codebook"] -= cb_lr * grads["codebook"]
                total += terms.total * len(sel)
            epoch_loss = total / n
            if not np.isfinite(epoch_loss):
                raise TrainingError(epoch)
            model.loss_trace.append(epoch_loss)
            if callback is not None:
                callback(epoch, epoch_loss, model)
            if epoch_loss < best:
                best = epoch_loss
                best_epoch = epoch
                best_params = {k: v.copy() for k, v in params.items()}
            elif epoch - best_epoch >= patience:
                log.debug("early stop at epoch %d (best %d)", epoch, best_epoch)
                break
    if best_params is not None:
        for k, v in best_params.items():
            params[k][...] = v
    return model


def reconstruction_mae(model: Autoencoder, X: np.ndarray) -> float:
    return float(np.mean(np.abs(model.reconstruct(X) - np.asarray(X))))
