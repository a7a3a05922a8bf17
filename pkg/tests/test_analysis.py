import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ris_sr.analysis import (
    GAIN_CONSTANTS,
    commutative_check,
    error_floor,
    min_elements_for_benefit,
    performance_gain,
    q_function,
    region_approximation,
    region_of,
    union_bound_bers,
)
from ris_sr.channel import Geometry, los_realization
from ris_sr.composite import classify_qpsk_bpsk, composite_from_gains, pairwise_distances
from ris_sr.detector import detect_many
from ris_sr.modulation import make_psk, make_qam
from ris_sr.optimizer import solve_split

QPSK, BPSK = make_psk(4), make_psk(2)
R2, R3 = math.sqrt(2), math.sqrt(3)


def q_quad(u):
    val, _ = quad(lambda x: math.exp(-x * x / 2) / math.sqrt(2 * math.pi), u, math.inf, epsabs=1e-14)
    return val


# -- Q function ---------------------------------------------------------------


def test_q_at_zero():
    assert q_function(0.0) == 0.5


@pytest.mark.parametrize("u", [0.3, 1.0, 1.2816, 2.5, 4.0, 6.0])
def test_q_matches_numerical_integration(u):
    assert q_function(u) == pytest.approx(q_quad(u), abs=1e-12)


def test_q_tenth_percentile():
    assert q_function(1.2816) == pytest.approx(0.1, abs=1e-4)


@pytest.mark.parametrize("u", [0.5, 1.0, 2.0])
def test_q_reflection(u):
    assert q_function(-u) == pytest.approx(1 - q_function(u), abs=1e-12)


def test_q_vectorised():
    u = np.array([0.0, 1.0, 2.0])
    out = q_function(u)
    assert out.shape == (3,)
    assert out[1] == pytest.approx(q_function(1.0))


# -- union bound --------------------------------------------------------------


@pytest.mark.parametrize("d", [0.5, 1.0, 2.0])
def test_bpsk_pair_bound(d):
    # one-bit alphabet over a single link
    from ris_sr.modulation import Constellation

    one = Constellation("unit", np.array([1.0 + 0j]), ("",))
    comp = composite_from_gains(d / 2, 0.0, BPSK, one)
    mu = 1.7
    rep = union_bound_bers(comp, mu)
    assert rep.px == pytest.approx(q_function(mu * d), rel=1e-12)
    assert rep.ps == pytest.approx(q_function(mu * d), rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 20.0),
)
def test_bit_additivity_union_bound(a, b, c, d, mu):
    comp = composite_from_gains(complex(a, b), complex(c, d), QPSK, BPSK)
    if pairwise_distances(comp).d_min == 0:
        return
    rep = union_bound_bers(comp, mu)
    if not rep.clipped:
        assert 3 * rep.px == pytest.approx(2 * rep.ps + rep.pc, abs=1e-14)


def test_union_bound_rejects_bad_mu():
    comp = composite_from_gains(1.0, 0.5, QPSK, BPSK)
    with pytest.raises(ValueError):
        union_bound_bers(comp, 0.0)


def test_union_bound_clips_at_low_snr():
    comp = composite_from_gains(1.0, 0.5, make_qam(16), make_psk(8))
    rep = union_bound_bers(comp, 1e-3)
    assert 0 <= rep.px <= 1 and 0 <= rep.ps <= 1 and 0 <= rep.pc <= 1


def _mc_bits(comp, mu, trials, seed):
    """Monte Carlo composite and primary bit error rates at unit power and complex noise variance 1/(2 mu^2)."""
    rng = np.random.default_rng(seed)
    sigma = 1 / (2 * mu)  # per real dimension
    ks = comp.s_bits
    bits = np.array([[int(x) for x in lab] for lab in comp.labels])
    s_err = x_err = 0
    tx_total = 0
    for _ in range(trials // 200_000):
        tx = rng.integers(comp.order, size=200_000)
        y = comp.points[tx] + sigma * (rng.standard_normal(tx.size) + 1j * rng.standard_normal(tx.size))
        det = detect_many(y, comp.points, 1.0)
        diff = bits[tx] != bits[det]
        s_err += diff[:, :ks].sum()
        x_err += diff.sum()
        tx_total += tx.size
    return x_err / (tx_total * bits.shape[1]), s_err / (tx_total * ks)


def blocked_split(n1, n=200):
    g = Geometry(direct_link=False)
    los = los_realization(g, n)
    sol = solve_split(los.h_d, los.f, n1, QPSK, BPSK, method="fixed")
    h_e = los.h_d + np.sum(sol.phi1 * los.f[:n1])
    h_b = np.sum(sol.phi2 * los.f[n1:])
    # normalise so that mu scales the whole constellation
    scale = abs(h_e) + abs(h_b)
    return h_e / scale, h_b / scale


@pytest.mark.slow
def test_union_bound_within_factor_two_of_monte_carlo():
    h_e, h_b = blocked_split(132)
    comp = composite_from_gains(h_e, h_b, QPSK, BPSK)
    mu = 4.2 / pairwise_distances(comp).d_min
    ub = union_bound_bers(comp, mu)
    px_mc, _ = _mc_bits(comp, mu, 1_000_000, 3)
    assert ub.px / 2 <= px_mc <= ub.px * 2


# -- region approximations ----------------------------------------------------


def test_region_boundaries():
    n = 200
    lo = math.ceil(GAIN_CONSTANTS.zeta2 * n)
    hi = math.ceil(GAIN_CONSTANTS.zeta1 * n)
    assert region_of(lo - 1, n) == "I"
    assert region_of(lo, n) == "II"
    assert region_of(hi, n) == "II"
    assert region_of(hi + 1, n) == "III"
    assert region_of(132, n) == "II"


def test_region_three_secondary_is_bottleneck():
    h_e, h_b = blocked_split(180)
    prof = classify_qpsk_bpsk(0.0, h_e, h_b)
    assert prof.d_intra < prof.d_adjacent
    rep = region_approximation(prof, 5.0, "III")
    assert rep.warning is None
    assert rep.pc / rep.ps > 1


def test_region_one_without_assistance_is_half():
    prof = classify_qpsk_bpsk(0.0, 0.0, 1.0)
    rep = region_approximation(prof, 3.0, "I")
    assert rep.ps == pytest.approx(0.5)
    assert rep.pc == pytest.approx(0.5)


def test_region_mismatch_warns():
    h_e, h_b = blocked_split(180)
    prof = classify_qpsk_bpsk(0.0, h_e, h_b)
    assert region_approximation(prof, 5.0, "I").warning is not None


def test_region_requires_classes():
    comp = composite_from_gains(1.0, 0.5, QPSK, BPSK)
    with pytest.raises(ValueError):
        region_approximation(pairwise_distances(comp), 1.0, "I")
    prof = classify_qpsk_bpsk(0.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        region_approximation(prof, 1.0, "IV")


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 199), st.floats(0.5, 30.0))
def test_dominant_term_bounded_by_union_bound(n1, mu):
    h_e, h_b = blocked_split(n1)
    prof = classify_qpsk_bpsk(0.0, h_e, h_b)
    region = {"nonadjacent": "I", "adjacent": "II", "intra": "III"}[prof.limiting_class()]
    dom = region_approximation(prof, mu, region)
    comp = composite_from_gains(h_e, h_b, QPSK, BPSK)
    ub = union_bound_bers(comp, mu)
    d = pairwise_distances(comp)
    off = ~np.eye(8, dtype=bool)
    ties = int(np.count_nonzero(np.isclose(d.matrix[off], d.d_min, rtol=1e-9)))
    slack = ties * q_function(mu * d.d_min)
    assert dom.ps <= ub.ps + slack + 1e-15
    assert dom.pc <= ub.pc + slack + 1e-15


@pytest.mark.slow
def test_region_two_matches_monte_carlo():
    h_e, h_b = blocked_split(100)
    prof = classify_qpsk_bpsk(0.0, h_e, h_b)
    assert prof.limiting_class() == "adjacent"
    comp = composite_from_gains(h_e, h_b, QPSK, BPSK)
    mu = 4.0 / prof.d_min
    dom = region_approximation(prof, mu, "II")
    _, ps_mc = _mc_bits(comp, mu, 1_000_000, 5)
    assert dom.ps / 2 <= ps_mc <= dom.ps * 2


# -- gains --------------------------------------------------------------------


def test_gain_constants():
    c = GAIN_CONSTANTS
    assert c.zeta1 + c.zeta2 == pytest.approx(1.0, abs=1e-12)
    z1, z2 = (R3 + 1 - R2) / 2, (R2 + 1 - R3) / 2
    assert c.alpha1 == pytest.approx(z1**2 + z2**2 - R2 * z1 * z2, abs=1e-15)
    assert c.alpha2 == pytest.approx(0.116337, abs=1e-6)
    assert c.alpha1 == pytest.approx(0.232673, abs=1e-6)


def test_gain_zero_snr():
    # the secondary expression subtracts two tail terms, so it reads -0.5 at zero SNR
    g = performance_gain(0.0, 200)
    assert g.ps_gain == 0.0
    assert g.pc_gain == pytest.approx(-0.5)
    assert g.ps_bound == 0.0


def test_gain_bound_at_snr_100():
    g = performance_gain(100 / 200**2, 200)
    expect = 0.5 - 0.5 * math.exp(-GAIN_CONSTANTS.alpha1 * 100 / 2)
    assert g.ps_bound == pytest.approx(expect, rel=1e-12)
    assert g.ps_bound == pytest.approx(0.499996, abs=1e-6)
    assert g.ps_gain >= g.ps_bound


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e3), st.integers(1, 500))
def test_exact_gain_above_bound(gamma_b, n):
    g = performance_gain(gamma_b / n**2, n)
    assert g.ps_gain >= g.ps_bound - 1e-15
    assert g.pc_gain >= g.pc_bound - 1e-15


def test_gain_rejects_bad_input():
    with pytest.raises(ValueError):
        performance_gain(-1.0, 10)
    with pytest.raises(ValueError):
        performance_gain(1.0, 0)


# -- commutativity ------------------------------------------------------------


def test_commutative_example():
    rep = commutative_check(1.0, 2.0, 0.0, math.pi / 4)
    f1 = 1 + 2 * complex(math.cos(math.pi / 4), math.sin(math.pi / 4))
    assert abs(f1) == pytest.approx(math.sqrt(5 + 2 * R2), abs=1e-12)
    assert abs(f1) == pytest.approx(2.7979, abs=1e-4)
    assert rep.amplitudes_match
    assert rep.phase_sum_is_pi
    assert abs(abs(rep.phase_sum) - math.pi) <= 1e-9


def test_commutative_equal_magnitudes():
    rep = commutative_check(1.5, 1.5, 0.3, 1.1)
    assert rep.amplitudes_match


def test_commutative_degenerate():
    rep = commutative_check(1.0, 1.0, 0.4, 0.4)
    assert rep.degenerate
    assert not rep.phase_sum_is_pi


def test_commutative_rejects_negative():
    with pytest.raises(ValueError):
        commutative_check(-1.0, 1.0, 0, 0)


def test_commutative_random_draws():
    rng = np.random.default_rng(21)
    for _ in range(10_000):
        a, b = rng.uniform(0, 5, size=2)
        ta, tb = rng.uniform(-math.pi, math.pi, size=2)
        rep = commutative_check(a, b, ta, tb)
        assert rep.amplitudes_match
        if not rep.degenerate and abs(a - b) > 1e-6 and abs(math.remainder(ta - tb, math.pi)) > 1e-6:
            assert abs(abs(rep.phase_sum) - math.pi) <= 1e-9


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 5), st.floats(0.01, 5), st.floats(-math.pi, math.pi))
def test_swapped_magnitudes_share_distance_multiset(a, b, ref):
    def multiset(x, y):
        h_e = x * complex(math.cos(ref), math.sin(ref))
        h_b = y * complex(math.cos(ref + math.pi / 4), math.sin(ref + math.pi / 4))
        d = pairwise_distances(composite_from_gains(h_e, h_b, QPSK, BPSK)).matrix
        return np.sort(d[np.triu_indices(8, 1)])

    assert np.allclose(multiset(a, b), multiset(b, a), atol=1e-9, rtol=0)


# -- floor and minimum size ---------------------------------------------------


def test_error_floor():
    assert error_floor(0.0) == 0.5
    assert error_floor(4.0) == pytest.approx(q_quad(math.sqrt(8)), abs=1e-12)
    assert error_floor(4.0) == pytest.approx(0.00234, abs=1e-5)
    with pytest.raises(ValueError):
        error_floor(-1.0)


def test_min_elements_for_benefit():
    k = (R3 - 1) / (R2 + 1 - R3)
    assert k == pytest.approx(1.0731, abs=1e-4)
    assert min_elements_for_benefit(0.01, 0.1, 0.1) == 2
    assert min_elements_for_benefit(0.0, 1.0, 1.0) == 0
    g = Geometry()
    assert math.sqrt(g.rho1 / (g.rho2 * g.rho3)) == pytest.approx(42.88, abs=0.01)
    assert min_elements_for_benefit(g.rho1, g.rho2, g.rho3) == 47
    with pytest.raises(ValueError):
        min_elements_for_benefit(1.0, 0.0, 1.0)
