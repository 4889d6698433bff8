"""Adaptive polyphase down/upsampling by a factor of two.

``aps_down`` keeps whichever of the even (``s[0::2]``) or odd (``s[1::2]``)
polyphase components has the larger L1 norm, computed jointly over channels
and time.  ``aps_up`` puts the samples back on the recorded phase and fills
the other positions with zeros.  Both accept a single ``[C, L]`` sequence or
a ``[N, C, L]`` batch, in which case each instance gets its own phase.

Odd-length inputs are edge-padded by repeating the last sample, so the
downsampled length is ``ceil(L / 2)``; ``aps_up`` crops back to the
recorded length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple, Union

import numpy as np

from .nn import ShapeError

Phase = Union[int, np.ndarray]


@dataclass
class PhaseRecord:
    """Per-block phases of one instance, in encoder order."""

    phases: List[int] = field(default_factory=list)
    padded: List[bool] = field(default_factory=list)
    lengths: List[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.phases)

    def append(self, phase: int, length: int) -> None:
        if phase not in (0, 1):
            raise ValueError(f"phase must be 0 or 1, got {phase}")
        self.phases.append(int(phase))
        self.lengths.append(int(length))
        self.padded.append(bool(length % 2))

    def to_dict(self) -> dict:
        return {"phases": list(self.phases), "lengths": list(self.lengths)}

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseRecord":
        rec = cls()
        for ph, n in zip(d["phases"], d["lengths"]):
            rec.append(ph, n)
        return rec

    @classmethod
    def constant(cls, lengths, phase: int = 0) -> "PhaseRecord":
        rec = cls()
        for n in lengths:
            rec.append(phase, n)
        return rec


def half_length(length: int) -> int:
    return (length + 1) // 2


def _batch(s) -> Tuple[np.ndarray, bool]:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 2:
        return s[None], True
    if s.ndim == 3:
        return s, False
    raise ShapeError(f"expected [C, L] or [N, C, L] array, got shape {s.shape}")


def _phase_vector(phase: Phase, n: int) -> np.ndarray:
    ph = np.broadcast_to(np.asarray(phase, dtype=np.int64), (n,))
    if np.any((ph != 0) & (ph != 1)):
        raise ValueError(f"phases must be 0 or 1, got {phase}")
    return ph


def _edge_pad(s: np.ndarray) -> np.ndarray:
    if s.shape[2] % 2:
        return np.concatenate([s, s[:, :, -1:]], axis=2)
    return s


def select_phase(s: np.ndarray) -> Phase:
    """Index of the polyphase component with the larger L1 norm (ties -> 0)."""
    sb, single = _batch(s)
    if sb.shape[2] < 2:
        raise ShapeError(f"need at least 2 time steps to downsample, got {sb.shape[2]}")
    sp = _edge_pad(sb)
    n0 = np.abs(sp[:, :, 0::2]).sum(axis=(1, 2))
    n1 = np.abs(sp[:, :, 1::2]).sum(axis=(1, 2))
    phases = (n1 > n0).astype(np.int64)
    return int(phases[0]) if single else phases


def aps_down_pinned(s: np.ndarray, phase: Phase) -> np.ndarray:
    """Polyphase component ``phase`` of ``s`` (after edge padding odd lengths)."""
    sb, single = _batch(s)
    if sb.shape[2] < 2:
        raise ShapeError(f"need at least 2 time steps to downsample, got {sb.shape[2]}")
    ph = _phase_vector(phase, sb.shape[0])
    sp = _edge_pad(sb)
    out = np.empty(sp.shape[:2] + (sp.shape[2] // 2,))
    for p in (0, 1):
        sel = ph == p
        if sel.any():
            out[sel] = sp[sel, :, p::2]
    return out[0] if single else out


def aps_down(s: np.ndarray) -> Tuple[np.ndarray, Phase]:
    """Adaptive polyphase downsampling; returns ``(output, phase)``."""
    phase = select_phase(s)
    return aps_down_pinned(s, phase), phase


def aps_down_backward(grad_out: np.ndarray, phase: Phase, input_length: int) -> np.ndarray:
    """Route gradients back to the retained samples (pad folds onto the last one)."""
    gb, single = _batch(grad_out)
    ph = _phase_vector(phase, gb.shape[0])
    padded_len = input_length + (input_length % 2)
    if gb.shape[2] != padded_len // 2:
        raise ShapeError(f"grad length {gb.shape[2]} does not match input length {input_length}")
    gp = np.zeros(gb.shape[:2] + (padded_len,))
    for p in (0, 1):
        sel = ph == p
        if sel.any():
            gp[sel, :, p::2] = gb[sel]
    grad = gp[:, :, :input_length].copy()
    if padded_len != input_length:
        grad[:, :, -1] += gp[:, :, -1]
    return grad[0] if single else grad


def aps_up(s: np.ndarray, phase: Phase, target_length: int) -> np.ndarray:
    """Zero-insertion upsampling: ``out[2t + phase] = s[t]``, cropped to ``target_length``."""
    sb, single = _batch(s)
    length = sb.shape[2]
    if target_length not in (2 * length - 1, 2 * length):
        raise ShapeError(
            f"target length {target_length} incompatible with input length {length}"
        )
    ph = _phase_vector(phase, sb.shape[0])
    out = np.zeros(sb.shape[:2] + (2 * length,))
    for p in (0, 1):
        sel = ph == p
        if sel.any():
            out[sel, :, p::2] = sb[sel]
    out = out[:, :, :target_length]
    return out[0] if single else out


def aps_up_backward(grad_out: np.ndarray, phase: Phase, input_length: int) -> np.ndarray:
    gb, single = _batch(grad_out)
    if gb.shape[2] not in (2 * input_length - 1, 2 * input_length):
        raise ShapeError(
            f"grad length {gb.shape[2]} incompatible with input length {input_length}"
        )
    ph = _phase_vector(phase, gb.shape[0])
    full = np.zeros(gb.shape[:2] + (2 * input_length,))
    full[:, :, :gb.shape[2]] = gb
    grad = np.empty(gb.shape[:2] + (input_length,))
    for p in (0, 1):
        sel = ph == p
        if sel.any():
            grad[sel] = full[sel, :, p::2]
    return grad[0] if single else grad
