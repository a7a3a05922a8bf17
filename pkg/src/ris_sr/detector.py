"""Two-step detection: nearest composite point, then label splitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .composite import CompositeConstellation


@dataclass(frozen=True)
class Decision:
    index: int
    s_bits: str
    c_bits: str

    @property
    def bits(self) -> str:
        return self.s_bits + self.c_bits


def detect_many(y: np.ndarray, points: np.ndarray, pt: float) -> np.ndarray:
    """Nearest-point indices for samples ``y`` against ``sqrt(pt) * points``.

    ``points`` is either one constellation ``(M,)`` shared by all samples or
    one per sample ``(K, M)``. Ties resolve to the lowest index.
    """
    y = np.asarray(y, dtype=complex)
    ref = math.sqrt(pt) * np.asarray(points, dtype=complex)
    if ref.ndim == 1:
        d = np.abs(y[..., None] - ref) ** 2
    else:
        d = np.abs(y[:, None] - ref) ** 2
    return np.argmin(d, axis=-1)


def detect(y: complex, composite: CompositeConstellation, pt: float) -> Decision:
    m = int(detect_many(np.array([y]), composite.points, pt)[0])
    label = composite.labels[m]
    k = composite.s_bits
    return Decision(m, label[:k], label[k:])
