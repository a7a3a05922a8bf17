"""Gray-labelled constellations for the primary and secondary signals."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InvalidOrderError(ValueError):
    """Raised when a constellation order is not supported."""


@dataclass(frozen=True)
class Constellation:
    """A labelled, unit-average-power symbol set.

    ``points[i]`` carries the bit string ``labels[i]``.
    """

    name: str
    points: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=complex)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if len(pts) != len(self.labels):
            raise ValueError("points and labels differ in length")

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def bits_per_symbol(self) -> int:
        return int(np.log2(self.order))

    @property
    def bit_matrix(self) -> np.ndarray:
        """``(order, bits_per_symbol)`` array of label bits."""
        return np.array([[int(b) for b in lab] for lab in self.labels], dtype=np.int8)

    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(d[~np.eye(self.order, dtype=bool)].min())


def _check_power_of_two(m: int) -> int:
    if not isinstance(m, (int, np.integer)) or m < 2 or (m & (m - 1)) != 0:
        raise InvalidOrderError(f"constellation order must be a power of two >= 2, got {m!r}")
    return int(m).bit_length() - 1


def _gray(k: int) -> int:
    return k ^ (k >> 1)


def _bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


def make_psk(m: int) -> Constellation:
    """Gray-labelled M-PSK on the unit circle.

    BPSK is ``{+1 -> "1", -1 -> "0"}``. For M >= 4 the first point sits at
    angle pi/M, so QPSK is ``(+-1 +- j)/sqrt(2)`` with labels 00, 01, 11, 10
    counter-clockwise from the first quadrant.
    """
    k = _check_power_of_two(m)
    if m == 2:
        return Constellation("bpsk", np.array([1.0 + 0j, -1.0 + 0j]), ("1", "0"))
    idx = np.arange(m)
    points = np.exp(1j * (2 * np.pi * idx / m + np.pi / m))
    labels = tuple(_bits(_gray(i), k) for i in range(m))
    name = "qpsk" if m == 4 else f"{m}psk"
    return Constellation(name, points, labels)


def _axis_levels(n: int) -> np.ndarray:
    # descending so the largest level gets Gray index 0
    return np.arange(n - 1, -n, -2, dtype=float)


def make_qam(m: int) -> Constellation:
    """Gray-labelled square QAM, plus the rectangular 2x4 grid for M = 8.

    Labels are the quadrature-axis Gray bits followed by the in-phase-axis
    Gray bits, which makes 4-QAM label-identical to :func:`make_psk` (4).
    """
    k = _check_power_of_two(m)
    if k % 2 == 0:
        ki = kq = k // 2
    elif m == 8:
        ki, kq = 2, 1
    else:
        raise InvalidOrderError(f"only square QAM and 8-QAM are supported, got M={m}")
    ni, nq = 1 << ki, 1 << kq
    li, lq = _axis_levels(ni), _axis_levels(nq)
    points, labels = [], []
    for q in range(nq):
        for i in range(ni):
            points.append(li[i] + 1j * lq[q])
            labels.append(_bits(_gray(q), kq) + _bits(_gray(i), ki))
    pts = np.array(points)
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    return Constellation(f"{m}qam", pts, tuple(labels))


_BY_NAME = {
    "bpsk": lambda: make_psk(2),
    "qpsk": lambda: make_psk(4),
    "4psk": lambda: make_psk(4),
    "8psk": lambda: make_psk(8),
    "16psk": lambda: make_psk(16),
    "4qam": lambda: make_qam(4),
    "8qam": lambda: make_qam(8),
    "16qam": lambda: make_qam(16),
    "64qam": lambda: make_qam(64),
}


def constellation_by_name(name: str) -> Constellation:
    """Look up a constellation by its CLI name (``"qpsk"``, ``"16qam"``, ...)."""
    try:
        return _BY_NAME[name.strip().lower()]()
    except KeyError:
        raise InvalidOrderError(
            f"unknown constellation {name!r}; choose from {', '.join(sorted(_BY_NAME))}"
        ) from None


def hamming(a: str, b: str) -> int:
    """Number of positions at which two equal-length bit strings differ."""
    if len(a) != len(b):
        raise ValueError(f"bit strings differ in length: {len(a)} vs {len(b)}")
    return sum(x != y for x, y in zip(a, b))
