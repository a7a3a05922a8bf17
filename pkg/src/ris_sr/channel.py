"""Channel synthesis: path loss, LoS/Rician fading, cascades and LS estimation.

Conventions
-----------
``g`` is the PTx->RIS channel and ``h`` the RIS->CRx channel, both length N.
The per-element cascade is ``f_n = conj(h_n) * g_n`` so that the reflected
term through a diagonal RIS with coefficients ``phi`` is ``sum(phi * f)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

REFERENCE_GAIN = 1e-3


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt) + 30.0


def path_loss(d: float, exponent: float) -> float:
    """Linear large-scale gain ``1e-3 * d**-exponent`` (``d`` in metres)."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return REFERENCE_GAIN * d ** (-exponent)


def _apex(d1: float, d2: float, d3: float) -> tuple[float, float]:
    x = (d1**2 + d2**2 - d3**2) / (2 * d1)
    y2 = d2**2 - x**2
    if y2 < -1e-9:
        raise ValueError(f"distances {d1}, {d2}, {d3} violate the triangle inequality")
    return x, math.sqrt(max(y2, 0.0))


@dataclass(frozen=True)
class Geometry:
    """Node positions on a plane and the per-link path-loss exponents.

    ``direct_link=False`` models a blocked PTx-CRx link (``rho1 = 0``).
    """

    ptx: tuple[float, float] = (0.0, 0.0)
    ris: tuple[float, float] = _apex(80.0, 75.0, 10.0)
    crx: tuple[float, float] = (80.0, 0.0)
    xi1: float = 3.5
    xi2: float = 2.2
    xi3: float = 2.8
    direct_link: bool = True

    def __post_init__(self) -> None:
        for name in ("xi1", "xi2", "xi3"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for d in (self.d1, self.d2, self.d3):
            if d <= 0:
                raise ValueError("nodes must not coincide")

    @classmethod
    def from_distances(cls, d1: float = 80.0, d2: float = 75.0, d3: float = 10.0, **kw) -> Geometry:
        """Place PTx at the origin, CRx on the x-axis and the RIS above it."""
        if min(d1, d2, d3) <= 0:
            raise ValueError("distances must be positive")
        return cls(ptx=(0.0, 0.0), ris=_apex(d1, d2, d3), crx=(d1, 0.0), **kw)

    @staticmethod
    def _dist(a, b) -> float:
        return math.hypot(a[0] - b[0], a[1] - b[1])

    @property
    def d1(self) -> float:
        return self._dist(self.ptx, self.crx)

    @property
    def d2(self) -> float:
        return self._dist(self.ptx, self.ris)

    @property
    def d3(self) -> float:
        return self._dist(self.ris, self.crx)

    @property
    def rho1(self) -> float:
        return path_loss(self.d1, self.xi1) if self.direct_link else 0.0

    @property
    def rho2(self) -> float:
        return path_loss(self.d2, self.xi2)

    @property
    def rho3(self) -> float:
        return path_loss(self.d3, self.xi3)

    def strength_ratio(self, n: int) -> float:
        return channel_strength_ratio(self.rho1, self.rho2, self.rho3, n)


@dataclass(frozen=True)
class FadingConfig:
    """Rician factors (linear; ``math.inf`` means pure LoS) and ULA spacing."""

    kappa_g: float = 10.0
    kappa_h: float = 8.0
    kappa_hd: float = 12.0
    spacing: float = 0.5

    def __post_init__(self) -> None:
        if min(self.kappa_g, self.kappa_h, self.kappa_hd) < 0:
            raise ValueError("Rician factors must be non-negative")


LOS_ONLY = FadingConfig(math.inf, math.inf, math.inf)


@dataclass(frozen=True)
class ChannelRealization:
    h_d: complex
    g: np.ndarray
    h: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.g, dtype=complex)
        h = np.asarray(self.h, dtype=complex)
        if g.shape != h.shape or g.ndim != 1:
            raise ValueError("g and h must be 1-D and of equal length")
        object.__setattr__(self, "h_d", complex(self.h_d))
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return len(self.g)

    @property
    def f(self) -> np.ndarray:
        """Per-element cascades ``conj(h) * g``."""
        return np.conj(self.h) * self.g

    @classmethod
    def from_cascade(cls, h_d: complex, f: np.ndarray) -> ChannelRealization:
        """Wrap already-cascaded coefficients (``h`` set to ones)."""
        f = np.asarray(f, dtype=complex)
        return cls(h_d, f, np.ones_like(f))


@dataclass(frozen=True)
class LinkBudget:
    """Transmit and noise power in watts."""

    pt: float
    noise: float = 1e-13

    def __post_init__(self) -> None:
        if self.pt <= 0 or self.noise <= 0:
            raise ValueError("powers must be positive")

    @classmethod
    def from_dbm(cls, pt_dbm: float, noise_dbm: float = -100.0) -> LinkBudget:
        return cls(dbm_to_watt(pt_dbm), dbm_to_watt(noise_dbm))

    @property
    def mu(self) -> float:
        return math.sqrt(self.pt / (2 * self.noise))

    def gamma_b(self, rho2: float, rho3: float) -> float:
        """Reflected-link SNR ``pt * rho2 * rho3 / noise``."""
        return self.pt * rho2 * rho3 / self.noise

    def gamma_d(self, h_d: complex) -> float:
        """Direct-link SNR ``pt * |h_d|**2 / noise``."""
        return self.pt * abs(h_d) ** 2 / self.noise


def steering_vector(n: int, cos_angle: float, spacing: float = 0.5) -> np.ndarray:
    """ULA response ``exp(j 2 pi spacing k cos_angle)``, k = 0..n-1."""
    return np.exp(2j * np.pi * spacing * np.arange(n) * cos_angle)


def _cos_to_axis(src, dst) -> float:
    dx, dy = dst[0] - src[0], dst[1] - src[1]
    return dx / math.hypot(dx, dy)


def los_components(geometry: Geometry, n: int, spacing: float = 0.5):
    """Unit-modulus LoS parts ``(h_d, g, h)`` from the array geometry.

    The RIS is a ULA along the x-axis; ``g`` uses the PTx->RIS arrival angle,
    ``h`` the RIS->CRx departure angle.
    """
    g = steering_vector(n, _cos_to_axis(geometry.ptx, geometry.ris), spacing)
    h = steering_vector(n, _cos_to_axis(geometry.ris, geometry.crx), spacing)
    return 1.0 + 0j, g, h


def los_realization(geometry: Geometry, n: int, spacing: float = 0.5) -> ChannelRealization:
    if n < 1:
        raise ValueError("N must be at least 1")
    hd, g, h = los_components(geometry, n, spacing)
    return ChannelRealization(
        math.sqrt(geometry.rho1) * hd,
        math.sqrt(geometry.rho2) * g,
        math.sqrt(geometry.rho3) * h,
    )


def _rician(los, kappa: float, shape, rng: np.random.Generator) -> np.ndarray:
    nlos = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    if math.isinf(kappa):
        return np.broadcast_to(los, shape).astype(complex)
    return math.sqrt(kappa / (kappa + 1)) * los + math.sqrt(1 / (kappa + 1)) * nlos


def sample_rician_batch(
    geometry: Geometry,
    fading: FadingConfig,
    n: int,
    size: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw ``size`` independent realizations as arrays ``(h_d, g, h)``.

    Shapes are ``(size,)``, ``(size, n)`` and ``(size, n)``. The NLoS draws
    are consumed even for infinite Rician factors so that the stream position
    does not depend on the fading configuration.
    """
    hd_los, g_los, h_los = los_components(geometry, n, fading.spacing)
    hd = _rician(hd_los, fading.kappa_hd, (size,), rng)
    g = _rician(g_los, fading.kappa_g, (size, n), rng)
    h = _rician(h_los, fading.kappa_h, (size, n), rng)
    return (
        math.sqrt(geometry.rho1) * hd,
        math.sqrt(geometry.rho2) * g,
        math.sqrt(geometry.rho3) * h,
    )


def sample_rician(
    geometry: Geometry, fading: FadingConfig, n: int, rng: np.random.Generator
) -> ChannelRealization:
    if n < 1:
        raise ValueError("N must be at least 1")
    hd, g, h = sample_rician_batch(geometry, fading, n, 1, rng)
    return ChannelRealization(hd[0], g[0], h[0])


def cascade(realization: ChannelRealization, n1: int) -> tuple[np.ndarray, np.ndarray]:
    """Split the cascades into the first ``n1`` elements and the rest."""
    if not 0 <= n1 <= realization.n:
        raise ValueError(f"split index {n1} outside 0..{realization.n}")
    f = realization.f
    return f[:n1], f[n1:]


def channel_strength_ratio(rho1: float, rho2: float, rho3: float, n: int) -> float:
    """``t = sqrt(rho1 / (rho2 rho3 N^2))``: direct vs fully aligned reflected link."""
    if rho2 <= 0 or rho3 <= 0 or n < 1:
        raise ValueError("rho2, rho3 must be positive and N >= 1")
    return math.sqrt(rho1 / (rho2 * rho3 * n * n))


def ls_estimate_batch(
    h_d: np.ndarray,
    f: np.ndarray,
    reps: int,
    budget: LinkBudget,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares estimates of ``h_d`` and the cascades for a batch.

    Training protocol, repeated ``reps`` times with pilot ``s = 1``: one slot
    with the RIS switched off, then N slots whose reflection patterns are the
    rows ``exp(-2j pi t n / N)`` of the DFT matrix. The off slot isolates
    ``h_d``; the DFT slots are inverted with an inverse FFT.
    """
    h_d = np.atleast_1d(np.asarray(h_d, dtype=complex))
    f = np.atleast_2d(np.asarray(f, dtype=complex))
    b, n = f.shape
    sp = math.sqrt(budget.pt)
    shape = (b, reps, n + 1)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(budget.noise / 2)
    clean = np.empty((b, n + 1), dtype=complex)
    clean[:, 0] = h_d
    clean[:, 1:] = h_d[:, None] + np.fft.fft(f, axis=1)
    y = sp * clean[:, None, :] + z
    y_bar = y.mean(axis=1) / sp
    hd_hat = y_bar[:, 0]
    f_hat = np.fft.ifft(y_bar[:, 1:] - hd_hat[:, None], axis=1)
    return hd_hat, f_hat


def ls_estimate(
    truth: ChannelRealization,
    training_length: int,
    budget: LinkBudget,
    rng: np.random.Generator,
) -> ChannelRealization:
    """LS estimate of the direct link and cascades from ``training_length`` pilots.

    ``training_length`` must be a positive multiple of ``N + 1``. The
    returned realization carries the estimated cascades in ``g`` with
    ``h`` set to ones.
    """
    n = truth.n
    if training_length <= 0 or training_length % (n + 1):
        raise ValueError(f"training length must be a positive multiple of N+1={n + 1}, got {training_length}")
    hd_hat, f_hat = ls_estimate_batch(
        np.array([truth.h_d]), truth.f[None, :], training_length // (n + 1), budget, rng
    )
    return ChannelRealization.from_cascade(hd_hat[0], f_hat[0])
