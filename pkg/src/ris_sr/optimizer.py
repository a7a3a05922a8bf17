"""Phase-shift design and surface partitioning.

The RIS is split by index prefix: the first ``n1`` elements (sub-surface I)
assist the primary link, the remaining ``n2 = N - n1`` (sub-surface II) are
modulated by the secondary symbol. Phase vectors hold the diagonal reflection
coefficients, so the reflected term of a sub-surface is ``sum(phi * f)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import Geometry, los_realization
from .composite import build_composite, pairwise_distances, primary_min_distance
from .modulation import Constellation

SQRT2 = math.sqrt(2.0)
SQRT3 = math.sqrt(3.0)
# case thresholds on the strength ratio t
T_CASE2_LO = SQRT3 - SQRT2
T_CASE2_HI = SQRT3 * (SQRT2 - 1.0)
T_CASE4 = (SQRT2 + math.sqrt(6.0)) / 2.0
ZETA1 = (SQRT3 + 1.0 - SQRT2) / 2.0
ZETA2 = (SQRT2 + 1.0 - SQRT3) / 2.0

_REL_TOL = 1e-9


class InfeasiblePartitionError(RuntimeError):
    """No split satisfies the requested constraints."""


def reference_angle(h_d: complex) -> float:
    """Phase of the direct link, taken as 0 when the link is blocked."""
    return math.atan2(h_d.imag, h_d.real) if h_d != 0 else 0.0


def optimal_phases(
    h_d: complex, f1: np.ndarray, f2: np.ndarray, common_phase: float | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Co-phase sub-surface I with ``h_d`` and sub-surface II with ``common_phase``.

    ``common_phase`` defaults to ``angle(h_d) + pi/4``.
    """
    ref = reference_angle(complex(h_d))
    if common_phase is None:
        common_phase = ref + math.pi / 4
    phi1 = np.exp(1j * (ref - np.angle(np.asarray(f1, dtype=complex))))
    phi2 = np.exp(1j * (common_phase - np.angle(np.asarray(f2, dtype=complex))))
    return phi1, phi2


def _dmin_batch(h_e: np.ndarray, h_b: np.ndarray, s_const: Constellation, c_const: Constellation):
    """Minimum and primary-minimum distances for a batch of gain pairs."""
    ms, mc = s_const.order, c_const.order
    s = np.tile(s_const.points, mc)
    c = np.repeat(c_const.points, ms)
    pts = (h_e[:, None] + h_b[:, None] * c[None, :]) * s[None, :]
    d = np.abs(pts[:, :, None] - pts[:, None, :])
    m = ms * mc
    eye = np.eye(m, dtype=bool)
    s_idx = np.tile(np.arange(ms), mc)
    diff_s = s_idx[:, None] != s_idx[None, :]
    d_all = np.where(eye, np.inf, d).min(axis=(1, 2))
    d_s = np.where(diff_s, d, np.inf).min(axis=(1, 2))
    return d_all, d_s


def common_phase_candidates(h_d: complex) -> tuple[float, float]:
    ref = reference_angle(complex(h_d))
    return ref + math.pi / 4, ref + 3 * math.pi / 4


def select_common_phase(
    h_d: complex,
    r1: float,
    r2: float,
    s_const: Constellation,
    c_const: Constellation,
) -> float:
    """Pick the common phase of sub-surface II among ``angle(h_d) + {pi/4, 3pi/4}``.

    ``r1`` and ``r2`` are the aligned magnitudes ``sum |f_1n|`` and
    ``sum |f_2n|``. Ties go to ``angle(h_d) + pi/4``.
    """
    h_d = complex(h_d)
    ref = reference_angle(h_d)
    cands = common_phase_candidates(h_d)
    h_e = np.full(2, h_d + r1 * np.exp(1j * ref))
    h_b = r2 * np.exp(1j * np.array(cands))
    d, _ = _dmin_batch(h_e, h_b, s_const, c_const)
    if d[1] > d[0] * (1 + _REL_TOL):
        return cands[1]
    return cands[0]


def feasibility_threshold(t: float, n: int) -> float:
    """Continuous lower bound on ``n1`` from the LoS phase-rotation condition."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t >= SQRT2:
        return 0.0
    return (2.0 - math.sqrt(t * t + 2.0)) * n


def partition_case(t: float) -> int:
    """Which of the four LoS partitioning regimes ``t`` falls in (1..4)."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t <= T_CASE2_LO:
        return 1
    if t <= T_CASE2_HI:
        return 2
    if t < T_CASE4:
        return 3
    return 4


def _ceil(x: float) -> int:
    return math.ceil(x - 1e-9)


def partition_closed_form(t: float, n: int) -> tuple[int, int]:
    """Closed-form LoS split ``(n1, n2)`` with ``n1 + n2 = n``."""
    if n < 1:
        raise ValueError("N must be at least 1")
    case = partition_case(t)
    if case == 4:
        n1 = 0
    elif case == 2:
        n1 = _ceil((2.0 - math.sqrt(t * t + 2.0)) * n)
    else:
        n1 = _ceil(((SQRT3 + 1 - SQRT2) - (SQRT2 + 1 - SQRT3) * t) / 2.0 * n)
    n1 = min(max(n1, 0), n)
    return n1, n - n1


def los_distance_functions(t: float, n: float, n1: float) -> tuple[float, float, float]:
    """Squared LoS distances (per ``rho2 rho3``) as functions of a continuous ``n1``.

    Returns the inter-adjacent-cluster term, the direct-plus-assist term
    ``(2(tN + n1))^2`` and the intra-cluster term ``(2(N - n1))^2``.
    """
    if not 0 <= n1 <= n:
        raise ValueError("n1 must lie in [0, N]")
    k = 2.0 + SQRT2
    f1 = 2.0 * (k * n1 * n1 - k * (1.0 - t) * n * n1 + n * n * (1.0 - SQRT2 * t + t * t))
    f2 = (2.0 * (t * n + n1)) ** 2
    f3 = (2.0 * (n - n1)) ** 2
    return f1, f2, f3


def c1_prime(h_d_abs: float, r1: float, r2: float) -> bool:
    """``|h_d| + sum|f_1n| >= sqrt(2) sum|f_2n|`` with a relative tolerance."""
    lhs, rhs = h_d_abs + r1, SQRT2 * r2
    return lhs >= rhs - _REL_TOL * max(lhs, rhs)


@dataclass
class PartitionSolution:
    n1: int
    n2: int
    phi1: np.ndarray
    phi2: np.ndarray
    common_phase: float
    d_min: float
    d_primary: float
    feasible: bool
    method: str = "split"
    case: int | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "N1": self.n1,
            "N2": self.n2,
            "common_phase": self.common_phase,
            "D_min": self.d_min,
            "D_primary": self.d_primary,
            "feasible": self.feasible,
            "method": self.method,
            "case": self.case,
        }
        out.update(self.extras)
        return out


def solve_split(
    h_d: complex,
    f: np.ndarray,
    n1: int,
    s_const: Constellation,
    c_const: Constellation,
    method: str = "split",
) -> PartitionSolution:
    """Apply the co-phasing design to a fixed split and evaluate it."""
    f = np.asarray(f, dtype=complex)
    n = len(f)
    if not 0 <= n1 <= n:
        raise ValueError(f"n1={n1} outside 0..{n}")
    h_d = complex(h_d)
    f1, f2 = f[:n1], f[n1:]
    r1, r2 = float(np.abs(f1).sum()), float(np.abs(f2).sum())
    phase = select_common_phase(h_d, r1, r2, s_const, c_const)
    phi1, phi2 = optimal_phases(h_d, f1, f2, phase)
    comp = build_composite(h_d, f1, f2, phi1, phi2, s_const, c_const)
    return PartitionSolution(
        n1=n1,
        n2=n - n1,
        phi1=phi1,
        phi2=phi2,
        common_phase=phase,
        d_min=pairwise_distances(comp).d_min,
        d_primary=primary_min_distance(comp),
        feasible=c1_prime(abs(h_d), r1, r2),
        method=method,
    )


def scan_splits(h_d: complex, f: np.ndarray, s_const: Constellation, c_const: Constellation):
    """Vectorised scan over every split ``n1 = 0..N``.

    Returns ``(d_min, d_primary, feasible, common_phase)`` arrays of length N+1.
    """
    h_d = complex(h_d)
    mag = np.abs(np.asarray(f, dtype=complex))
    r1 = np.concatenate([[0.0], np.cumsum(mag)])
    r2 = mag.sum() - r1
    r2 = np.where(r2 < 0, 0.0, r2)
    ref = reference_angle(h_d)
    h_e = h_d + r1 * np.exp(1j * ref)
    cand = common_phase_candidates(h_d)
    d_a, ds_a = _dmin_batch(h_e, r2 * np.exp(1j * cand[0]), s_const, c_const)
    d_b, ds_b = _dmin_batch(h_e, r2 * np.exp(1j * cand[1]), s_const, c_const)
    use_b = d_b > d_a * (1 + _REL_TOL)
    d_min = np.where(use_b, d_b, d_a)
    d_s = np.where(use_b, ds_b, ds_a)
    phase = np.where(use_b, cand[1], cand[0])
    lhs, rhs = abs(h_d) + r1, SQRT2 * r2
    feasible = lhs >= rhs - _REL_TOL * np.maximum(lhs, rhs)
    return d_min, d_s, feasible, phase


def _argmax_prefer_larger(values: np.ndarray, allowed: np.ndarray) -> int:
    best, best_val = -1, -math.inf
    for n1 in range(len(values)):
        if not allowed[n1]:
            continue
        v = values[n1]
        if best < 0 or v >= best_val - _REL_TOL * abs(best_val):
            if v > best_val:
                best_val = v
            best = n1
    return best


def partition_oracle(
    h_d: complex,
    f: np.ndarray,
    s_const: Constellation,
    c_const: Constellation,
    feasibility: bool = True,
) -> PartitionSolution:
    """Exhaustive search over ``n1`` for the largest minimum distance.

    With ``feasibility`` on, only splits meeting the phase-rotation
    condition are considered. Near-ties go to the larger ``n1``.
    """
    d_min, _, feas, _ = scan_splits(h_d, f, s_const, c_const)
    allowed = feas if feasibility else np.ones_like(feas)
    if not allowed.any():
        raise InfeasiblePartitionError("no split satisfies the phase-rotation condition")
    n1 = _argmax_prefer_larger(d_min, allowed)
    return solve_split(h_d, f, n1, s_const, c_const, method="oracle")


def partition_with_priority(
    h_d: complex,
    f: np.ndarray,
    s_const: Constellation,
    c_const: Constellation,
    eta: float,
    feasibility: bool = True,
) -> PartitionSolution:
    """Exhaustive search subject to a primary-distance floor ``eta * D_s,max``.

    ``D_s,max`` is the primary minimum distance with every element assisting.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    f = np.asarray(f, dtype=complex)
    d_min, d_s, feas, _ = scan_splits(h_d, f, s_const, c_const)
    d_s_max = d_s[-1]
    target = eta * d_s_max
    ok = d_s >= target - _REL_TOL * d_s_max
    if feasibility:
        ok &= feas
    if not ok.any():
        raise InfeasiblePartitionError(f"no split reaches the primary distance {target:.4g}")
    n1 = _argmax_prefer_larger(d_min, ok)
    sol = solve_split(h_d, f, n1, s_const, c_const, method="priority")
    sol.extras.update(eta=eta, D_s_max=float(d_s_max), D_s_target=float(target))
    return sol


def is_qpsk_bpsk(s_const: Constellation, c_const: Constellation) -> bool:
    return s_const.order == 4 and c_const.order == 2 and s_const.name in ("qpsk", "4qam")


def design_split(
    geometry: Geometry,
    n: int,
    s_const: Constellation,
    c_const: Constellation,
    eta: float | None = None,
    spacing: float = 0.5,
) -> int:
    """Element split chosen from large-scale (LoS) knowledge only.

    QPSK x BPSK uses the closed form; other constellation pairs and the
    priority variant use the exhaustive search on the LoS channel.
    """
    if eta is None and is_qpsk_bpsk(s_const, c_const):
        return partition_closed_form(geometry.strength_ratio(n), n)[0]
    los = los_realization(geometry, n, spacing)
    if eta is not None:
        return partition_with_priority(los.h_d, los.f, s_const, c_const, eta, is_qpsk_bpsk(s_const, c_const)).n1
    return partition_oracle(los.h_d, los.f, s_const, c_const, feasibility=False).n1
