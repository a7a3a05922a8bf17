"""Composite constellation ``x = (h_d + sum(phi1 f1) + sum(phi2 f2) c) s``.

Points are enumerated with the secondary index outermost, so for QPSK x BPSK
``x_1..x_4`` carry ``(s_1..s_4, c_1)`` and ``x_5..x_8`` carry ``(s_1..s_4, c_2)``.
Labels are the primary bits followed by the secondary bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modulation import Constellation, make_psk

UNIT_MODULUS_TOL = 1e-9


@dataclass(frozen=True)
class CompositeConstellation:
    points: np.ndarray
    s_index: np.ndarray
    c_index: np.ndarray
    labels: tuple[str, ...]
    s_const: Constellation
    c_const: Constellation
    h_e: complex
    h_b: complex

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def s_bits(self) -> int:
        return self.s_const.bits_per_symbol

    @property
    def c_bits(self) -> int:
        return self.c_const.bits_per_symbol

    def scaled(self, alpha: complex) -> CompositeConstellation:
        return composite_from_gains(self.h_e * alpha, self.h_b * alpha, self.s_const, self.c_const)


def composite_from_gains(
    h_e: complex, h_b: complex, s_const: Constellation, c_const: Constellation
) -> CompositeConstellation:
    """Composite set from the effective gains ``h_e`` (assisting) and ``h_b`` (modulated)."""
    ms, mc = s_const.order, c_const.order
    s_idx = np.tile(np.arange(ms), mc)
    c_idx = np.repeat(np.arange(mc), ms)
    s = s_const.points[s_idx]
    c = c_const.points[c_idx]
    points = (h_e + h_b * c) * s
    labels = tuple(s_const.labels[i] + c_const.labels[j] for i, j in zip(s_idx, c_idx))
    return CompositeConstellation(points, s_idx, c_idx, labels, s_const, c_const, complex(h_e), complex(h_b))


def _unit_modulus(phi: np.ndarray, name: str) -> None:
    if phi.size and np.max(np.abs(np.abs(phi) - 1.0)) > UNIT_MODULUS_TOL:
        raise ValueError(f"{name} entries must have unit modulus")


def build_composite(
    h_d: complex,
    f1: np.ndarray,
    f2: np.ndarray,
    phi1: np.ndarray,
    phi2: np.ndarray,
    s_const: Constellation,
    c_const: Constellation,
) -> CompositeConstellation:
    f1, f2 = np.asarray(f1, dtype=complex), np.asarray(f2, dtype=complex)
    phi1, phi2 = np.asarray(phi1, dtype=complex), np.asarray(phi2, dtype=complex)
    if f1.shape != phi1.shape or f2.shape != phi2.shape:
        raise ValueError("phase vectors must match the cascade lengths")
    _unit_modulus(phi1, "phi1")
    _unit_modulus(phi2, "phi2")
    h_e = h_d + np.sum(phi1 * f1)
    h_b = np.sum(phi2 * f2)
    return composite_from_gains(h_e, h_b, s_const, c_const)


@dataclass(frozen=True)
class DistanceProfile:
    """Pairwise distances and, when available, the named distance classes.

    ``d_intra``, ``d_adjacent`` and ``d_nonadjacent`` are the intra-cluster,
    inter-adjacent-cluster and inter-non-adjacent-cluster distances of the
    QPSK x BPSK layout; ``nonadjacent_branch`` is 1 when the non-adjacent
    minimum is ``2|h_d + h_r1|`` and 2 when it is ``2|h_d + h_r1 - h_r2|``.
    """

    matrix: np.ndarray
    d_min: float
    d_intra: float | None = None
    d_adjacent: float | None = None
    d_nonadjacent: float | None = None
    nonadjacent_branch: int | None = None

    @property
    def classified_min(self) -> float | None:
        if self.d_intra is None:
            return None
        return min(self.d_intra, self.d_adjacent, self.d_nonadjacent)

    def limiting_class(self) -> str | None:
        """Name of the class attaining the minimum (``"intra"``, ``"adjacent"``, ``"nonadjacent"``)."""
        if self.d_intra is None:
            return None
        vals = {"nonadjacent": self.d_nonadjacent, "adjacent": self.d_adjacent, "intra": self.d_intra}
        return min(vals, key=vals.get)


def distance_matrix(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points)
    return np.abs(points[:, None] - points[None, :])


def pairwise_distances(composite: CompositeConstellation) -> DistanceProfile:
    d = distance_matrix(composite.points)
    off = ~np.eye(len(d), dtype=bool)
    return DistanceProfile(d, float(d[off].min()) if off.any() else math.inf)


def primary_min_distance(composite: CompositeConstellation) -> float:
    """Minimum distance over pairs carrying different primary symbols."""
    d = distance_matrix(composite.points)
    mask = composite.s_index[:, None] != composite.s_index[None, :]
    return float(d[mask].min())


def classify_qpsk_bpsk(h_d: complex, h_r1: complex, h_r2: complex) -> DistanceProfile:
    """Closed-form distance classes for QPSK x BPSK under aligned phases.

    ``h_r1`` is the sub-surface I sum aligned with ``h_d``; ``h_r2`` is the
    sub-surface II sum carrying an extra +pi/4 relative to ``h_d``.
    """
    h = h_d + h_r1
    d_intra = 2 * abs(h_r2)
    d_adjacent = math.sqrt(2) * abs(h + h_r2 * 1j)
    if abs(h_r2) ** 2 >= 2 * (h * np.conj(h_r2)).real:
        d_nonadjacent, branch = 2 * abs(h), 1
    else:
        d_nonadjacent, branch = 2 * abs(h - h_r2), 2
    comp = composite_from_gains(h, h_r2, make_psk(4), make_psk(2))
    brute = pairwise_distances(comp)
    return DistanceProfile(
        brute.matrix,
        min(d_intra, d_adjacent, d_nonadjacent),
        d_intra,
        d_adjacent,
        d_nonadjacent,
        branch,
    )


@dataclass(frozen=True)
class GeneralDistanceClasses:
    """Squared distances grouped into the three structural classes.

    Class 1: same primary symbol, different secondary symbol.
    Class 2: ``s_m c_m == s_k c_k`` with ``s_m != s_k``.
    Class 3: everything else.
    ``d1``, ``d2``, ``d3`` are the per-class minima (``inf`` if a class is empty).
    """

    tags: np.ndarray
    squared: np.ndarray
    d1: float
    d2: float
    d3: float

    @property
    def minimum(self) -> float:
        return min(self.d1, self.d2, self.d3)


def classify_general(
    h_d: complex,
    reflect1: complex,
    reflect2: complex,
    s_const: Constellation,
    c_const: Constellation,
    atol: float = 1e-12,
) -> GeneralDistanceClasses:
    """Tag each ordered pair with its class and evaluate the squared distance.

    ``reflect1`` and ``reflect2`` are the sub-surface sums ``sum(phi1 f1)``
    and ``sum(phi2 f2)``. Classes 1 and 2 use their factorised forms; class 3
    uses ``|x_m - x_k|^2`` directly since its factorised form is singular
    when ``s_m == s_k``.
    """
    h_e = h_d + reflect1
    comp = composite_from_gains(h_e, reflect2, s_const, c_const)
    s = s_const.points[comp.s_index]
    c = c_const.points[comp.c_index]
    same_s = np.abs(s[:, None] - s[None, :]) <= atol
    same_c = np.abs(c[:, None] - c[None, :]) <= atol
    same_sc = np.abs((s * c)[:, None] - (s * c)[None, :]) <= atol
    off = ~np.eye(comp.order, dtype=bool)

    tags = np.full((comp.order, comp.order), 3, dtype=np.int8)
    tags[same_s & ~same_c] = 1
    tags[same_sc & ~same_s] = 2
    tags[~off] = 0

    sq = np.abs(comp.points[:, None] - comp.points[None, :]) ** 2
    c1 = abs(reflect2) ** 2 * np.abs(s[:, None]) ** 2 * np.abs(c[:, None] - c[None, :]) ** 2
    c2 = abs(h_e) ** 2 * np.abs(s[:, None] - s[None, :]) ** 2
    sq = np.where(tags == 1, c1, np.where(tags == 2, c2, sq))
    sq[~off] = 0.0

    def _min(k: int) -> float:
        sel = tags == k
        return float(sq[sel].min()) if sel.any() else math.inf

    return GeneralDistanceClasses(tags, sq, _min(1), _min(2), _min(3))


def _wrap(angle: float) -> float:
    return (angle + math.pi) % (2 * math.pi) - math.pi


def phase_rotation_feasible(
    h_e: complex, h_b: complex, c_const: Constellation, tol: float = 1e-9
) -> bool:
    """Whether every secondary symbol rotates ``h_e`` by at most pi/4.

    For BPSK this is the pair of rotation constraints with ``c = +1`` and
    ``c = -1``. ``angle(0)`` is taken as 0.
    """
    ref = math.atan2(h_e.imag, h_e.real) if h_e != 0 else 0.0
    for c in c_const.points:
        z = h_e + h_b * c
        ang = math.atan2(z.imag, z.real) if z != 0 else 0.0
        if abs(_wrap(ang - ref)) > math.pi / 4 + tol:
            return False
    return True


def composite_to_dict(composite: CompositeConstellation, profile: DistanceProfile | None = None) -> dict:
    """JSON-friendly dump of points, labels and distances."""
    profile = profile or pairwise_distances(composite)
    out = {
        "h_e": [composite.h_e.real, composite.h_e.imag],
        "h_b": [composite.h_b.real, composite.h_b.imag],
        "points": [
            {
                "index": m,
                "re": float(p.real),
                "im": float(p.imag),
                "label": composite.labels[m],
                "s_index": int(composite.s_index[m]),
                "c_index": int(composite.c_index[m]),
            }
            for m, p in enumerate(composite.points)
        ],
        "d_min": profile.d_min,
        "distances": profile.matrix.tolist(),
    }
    if profile.d_intra is not None:
        out.update(
            d_intra=profile.d_intra,
            d_adjacent=profile.d_adjacent,
            d_nonadjacent=profile.d_nonadjacent,
            nonadjacent_branch=profile.nonadjacent_branch,
        )
    return out
