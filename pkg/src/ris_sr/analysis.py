"""Analytical BER tools: union bounds, dominant-term approximations and gains."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .composite import CompositeConstellation, DistanceProfile, distance_matrix

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)


def q_function(u):
    """Gaussian tail probability ``P(Z > u)``; accepts scalars or arrays."""
    out = 0.5 * erfc(np.asarray(u, dtype=float) / SQRT2)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GainConstants:
    zeta1: float = (SQRT3 + 1 - SQRT2) / 2
    zeta2: float = (SQRT2 + 1 - SQRT3) / 2

    @property
    def alpha1(self) -> float:
        return self.zeta1**2 + self.zeta2**2 - SQRT2 * self.zeta1 * self.zeta2

    @property
    def alpha2(self) -> float:
        return self.zeta2**2


GAIN_CONSTANTS = GainConstants()


@dataclass(frozen=True)
class BerReport:
    px: float
    ps: float
    pc: float
    method: str
    clipped: bool = False
    warning: str | None = None

    def as_dict(self) -> dict:
        return {"Px": self.px, "Ps": self.ps, "Pc": self.pc, "method": self.method, "clipped": self.clipped}


def _label_hamming(labels: tuple[str, ...], start: int, stop: int | None) -> np.ndarray:
    bits = np.array([[int(b) for b in lab[start:stop]] for lab in labels], dtype=np.int16)
    if bits.shape[1] == 0:
        return np.zeros((len(labels), len(labels)))
    return np.abs(bits[:, None, :] - bits[None, :, :]).sum(axis=2).astype(float)


def union_bound_bers(composite: CompositeConstellation, mu: float) -> BerReport:
    """Pairwise-error union bound on the composite, primary and secondary BERs.

    Symbols are equiprobable and ``mu = sqrt(pt / (2 sigma^2))``.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    m = composite.order
    q = q_function(mu * distance_matrix(composite.points))
    np.fill_diagonal(q, 0.0)
    ks = composite.s_bits
    e_s = _label_hamming(composite.labels, 0, ks)
    e_c = _label_hamming(composite.labels, ks, None)
    e_x = e_s + e_c
    kx = ks + composite.c_bits
    px = float((q * e_x).sum()) / (m * kx)
    ps = float((q * e_s).sum()) / (m * ks) if ks else 0.0
    pc = float((q * e_c).sum()) / (m * composite.c_bits) if composite.c_bits else 0.0
    raw = (px, ps, pc)
    vals = [min(max(v, 0.0), 1.0) for v in raw]
    return BerReport(*vals, method="union-bound", clipped=any(v != r for v, r in zip(vals, raw)))


_REGION_CLASS = {"I": "nonadjacent", "II": "adjacent", "III": "intra"}


def region_approximation(profile: DistanceProfile, mu: float, region: str) -> BerReport:
    """Dominant-term BER approximations for the three QPSK x BPSK regions.

    Region I: both limited by the non-adjacent-cluster distance.
    Region II: both limited by the adjacent-cluster distance.
    Region III: primary by the adjacent-cluster distance, secondary by the
    intra-cluster distance.
    """
    if profile.d_intra is None:
        raise ValueError("profile carries no distance classes")
    region = region.upper()
    if region not in _REGION_CLASS:
        raise ValueError(f"region must be one of I, II, III, got {region!r}")
    if region == "I":
        ps = pc = q_function(mu * profile.d_nonadjacent)
    elif region == "II":
        ps = pc = q_function(mu * profile.d_adjacent)
    else:
        ps = q_function(mu * profile.d_adjacent)
        pc = q_function(mu * profile.d_intra)
    warning = None
    if profile.limiting_class() != _REGION_CLASS[region]:
        warning = f"region {region} but the minimum distance is {profile.limiting_class()}"
    return BerReport((2 * ps + pc) / 3, ps, pc, method="dominant-term", warning=warning)


def region_of(n1: int, n: int) -> str:
    """Region index of a split when the direct link is blocked."""
    lo = math.ceil(GAIN_CONSTANTS.zeta2 * n - 1e-9)
    hi = math.ceil(GAIN_CONSTANTS.zeta1 * n - 1e-9)
    if n1 < lo:
        return "I"
    if n1 <= hi:
        return "II"
    return "III"


@dataclass(frozen=True)
class GainReport:
    ps_gain: float
    pc_gain: float
    ps_bound: float
    pc_bound: float


def performance_gain(gamma_b: float, n: int, constants: GainConstants = GAIN_CONSTANTS) -> GainReport:
    """BER reduction over the pure-transmission design with a blocked direct link."""
    if gamma_b < 0 or n < 1:
        raise ValueError("gamma_b must be >= 0 and N >= 1")
    snr = gamma_b * n * n
    a1, a2 = constants.alpha1, constants.alpha2
    q1 = q_function(math.sqrt(a1 * snr))
    q2 = q_function(math.sqrt(2 * a2 * snr))
    e1 = 0.5 * math.exp(-a1 * snr / 2)
    e2 = 0.5 * math.exp(-a2 * snr)
    return GainReport(0.5 - q1, 0.5 - q1 - q2, 0.5 - e1, 0.5 - e1 - e2)


@dataclass(frozen=True)
class CommutativeReport:
    amplitudes_match: bool
    phase_sum: float
    phase_sum_is_pi: bool
    degenerate: bool


def _wrap(x: float) -> float:
    """Wrap to (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y == -math.pi else y


def commutative_check(a: float, b: float, theta_a: float, theta_b: float, tol: float = 1e-12) -> CommutativeReport:
    """Compare the composite gains before and after swapping ``|a|`` and ``|b|``."""
    if a < 0 or b < 0:
        raise ValueError("magnitudes must be non-negative")
    ea, eb = complex(math.cos(theta_a), math.sin(theta_a)), complex(math.cos(theta_b), math.sin(theta_b))

    def f1(c):
        return a * ea + c * b * eb

    def f2(c):
        return b * ea + c * a * eb

    scale = max(a + b, 1.0)
    amp = all(abs(abs(f1(c)) - abs(f2(c))) <= tol * scale for c in (1, -1))
    vals = [f1(1), f1(-1), f2(1), f2(-1)]
    degenerate = any(abs(v) <= tol * scale for v in vals) or (a == b and _wrap(theta_a - theta_b) == 0)
    ang = [math.atan2(v.imag, v.real) for v in vals]
    total = _wrap(_wrap(ang[0] - ang[1]) + _wrap(ang[2] - ang[3]))
    is_pi = (not degenerate) and abs(complex(math.cos(total), math.sin(total)) + 1) <= 1e-9
    return CommutativeReport(amp, total, is_pi, degenerate)


def error_floor(gamma_d: float) -> float:
    """BER limit of the pure-transmission design as N grows."""
    if gamma_d < 0:
        raise ValueError("gamma_d must be non-negative")
    return q_function(math.sqrt(2 * gamma_d))


def min_elements_for_benefit(rho1: float, rho2: float, rho3: float) -> int:
    """Smallest N for which the assisted primary link beats the direct link alone."""
    if rho2 <= 0 or rho3 <= 0 or rho1 < 0:
        raise ValueError("rho2, rho3 must be positive and rho1 non-negative")
    k = (SQRT3 - 1) / (SQRT2 + 1 - SQRT3)
    return math.ceil(k * math.sqrt(rho1 / (rho2 * rho3)) - 1e-9)
