import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
import pytest

from ris_sr.channel import LOS_ONLY, Geometry
from ris_sr.simulator import (
    BerEstimate,
    FrameConfig,
    SimConfig,
    analytic_companion,
    config_at,
    location_geometry,
    make_manifest,
    resolve_split,
    rows_to_csv,
    run_point,
    run_sweep,
)

BLOCKED = Geometry(direct_link=False)


def test_noiseless_proposed_has_no_errors():
    for fading in (LOS_ONLY, SimConfig().fading):
        cfg = SimConfig(trials=10_000, noise_dbm=-160.0, pt_dbm=30.0, fading=fading, seed=1)
        est = run_point(cfg)
        assert est.symbols == 10_000
        assert est.x_bit_errors == 0 and est.x_symbol_errors == 0


def test_pure_transmission_without_direct_link_is_ambiguous():
    cfg = SimConfig(trials=100_000, scheme="benchmark3", geometry=BLOCKED, fading=LOS_ONLY, seed=2)
    est = run_point(cfg)
    assert est.ps == pytest.approx(0.5, abs=0.01)
    assert est.pc == pytest.approx(0.5, abs=0.01)


@pytest.mark.parametrize("scheme", ["benchmark1", "benchmark2"])
def test_non_transmitting_benchmarks_give_half_secondary_ber(scheme):
    cfg = SimConfig(trials=20_000, scheme=scheme, fading=LOS_ONLY, seed=3)
    est = run_point(cfg)
    assert est.pc == pytest.approx(0.5, abs=0.02)
    assert est.ps < 0.5


def test_worker_count_does_not_change_counts():
    cfg = SimConfig(trials=16_000, chunk_size=1_000, pt_dbm=-5.0, seed=9)
    one = run_point(cfg)
    many = run_point(replace(cfg, workers=8))
    assert one == many
    assert one.x_bit_errors > 0


def test_shared_executor_matches_serial():
    cfg = SimConfig(trials=6_000, chunk_size=1_000, pt_dbm=-5.0, seed=4)
    with ProcessPoolExecutor(max_workers=3) as ex:
        assert run_point(cfg, executor=ex) == run_point(cfg)


def test_seed_and_point_key_streams():
    cfg = SimConfig(trials=5_000, pt_dbm=-5.0, seed=5)
    assert run_point(cfg) == run_point(cfg)
    assert run_point(cfg, point=0) != run_point(cfg, point=1)
    assert run_point(cfg) != run_point(replace(cfg, seed=6))


@pytest.mark.parametrize(
    "primary,secondary,scheme",
    [("qpsk", "bpsk", "proposed"), ("16qam", "8psk", "proposed"), ("qpsk", "bpsk", "benchmark3")],
)
def test_bit_count_identity(primary, secondary, scheme):
    cfg = SimConfig(trials=8_000, pt_dbm=-8.0, primary=primary, secondary=secondary, scheme=scheme, seed=8)
    est = run_point(cfg)
    assert est.x_bit_errors == est.s_bit_errors + est.c_bit_errors
    assert est.x_bits == est.s_bits + est.c_bits


def test_wilson_interval_shrinks_with_trials():
    base = SimConfig(pt_dbm=-5.0, seed=10, fading=LOS_ONLY, geometry=BLOCKED, n1=100)
    small = run_point(replace(base, trials=1_000))
    large = run_point(replace(base, trials=100_000))
    w_small = np.subtract(*small.interval("x")[::-1])
    w_large = np.subtract(*large.interval("x")[::-1])
    assert 5 < w_small / w_large < 20
    lo, hi = large.interval("x")
    assert lo <= large.px <= hi


def test_high_snr_agreement_with_union_bound():
    cfg = SimConfig(trials=1, fading=LOS_ONLY, geometry=BLOCKED, n1=100, seed=11)
    d_min = analytic_companion(cfg)["D_min"]
    noise = cfg.budget.noise
    pt = 2 * noise * (4.0 / d_min) ** 2
    cfg = replace(cfg, pt_dbm=10 * math.log10(pt * 1e3))
    ub = analytic_companion(cfg)["ub_Px"]
    trials = int(math.ceil(100 / ub / 20_000)) * 20_000
    est = run_point(replace(cfg, trials=trials))
    assert ub / 2 <= est.px <= ub * 2


def test_error_counts_bounded():
    est = run_point(SimConfig(trials=3_000, pt_dbm=-15.0, seed=12))
    for which in ("x", "s", "c", "ser"):
        lo, hi = est.interval(which)
        assert 0 <= lo <= hi <= 1
    assert est.x_bit_errors <= est.x_bits
    assert est.x_symbol_errors <= est.symbols


def test_estimate_addition():
    a = BerEstimate(10, 1, 2, 1, 1, 30, 20, 10)
    b = BerEstimate(5, 0, 1, 0, 1, 15, 10, 5)
    assert a + b == BerEstimate(15, 1, 3, 1, 2, 45, 30, 15)
    assert math.isnan(BerEstimate().px)


# -- configuration ------------------------------------------------------------


@pytest.mark.parametrize(
    "kw",
    [
        {"trials": 0},
        {"n": 0},
        {"scheme": "nope"},
        {"scheme": "priority"},
        {"eta": 1.5},
        {"n1": 300},
        {"primary": "7psk"},
        {"training_reps": -1},
        {"chunk_size": 0},
    ],
)
def test_invalid_config_rejected(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_frame_accounting():
    assert FrameConfig().symbols_per_block == 12_500
    assert FrameConfig(training=201).symbols_per_block == 12_299
    with pytest.raises(ValueError):
        FrameConfig(t_a=1e-6, t_b=2e-6)
    with pytest.raises(ValueError):
        FrameConfig(training=20_000)


def test_frame_mode_reuses_channels_within_block():
    frame = FrameConfig(t_a=1e-5, t_b=1e-6)
    cfg = SimConfig(trials=2_000, frame=frame, pt_dbm=-5.0, seed=13)
    est = run_point(cfg)
    assert est.symbols == 2_000
    assert run_point(cfg) == est


def test_training_reduces_error_with_estimation():
    base = SimConfig(trials=20_000, pt_dbm=-5.0, seed=14)
    perfect = run_point(base)
    noisy = run_point(replace(base, training_reps=1))
    assert noisy.px > perfect.px


def test_resolve_split_by_scheme():
    base = SimConfig(fading=LOS_ONLY, geometry=BLOCKED)
    assert resolve_split(replace(base, scheme="benchmark1")) == 200
    assert resolve_split(replace(base, scheme="benchmark2")) == 200
    assert resolve_split(replace(base, scheme="benchmark3")) == 0
    assert resolve_split(base) == 132
    assert resolve_split(replace(base, n1=40)) == 40
    assert resolve_split(replace(base, scheme="priority", eta=1.0)) == 200


def test_config_at_axes():
    base = SimConfig(n1=10)
    assert config_at(base, "n1", 20).n1 == 20
    assert config_at(base, "pt_dbm", 3).pt_dbm == 3.0
    moved = config_at(base, "n", 100)
    assert moved.n == 100 and moved.n1 is None
    assert config_at(base, "training", 2).training_reps == 2
    g = config_at(base, "ris_x", 50).geometry
    assert g.ris == (50.0, 15.0)
    with pytest.raises(ValueError):
        config_at(base, "bogus", 1)


def test_location_geometry_distances():
    g = location_geometry(50.0, Geometry())
    assert g.d1 == pytest.approx(100.0)
    assert g.d2 == pytest.approx(math.hypot(50, 15))
    assert g.d3 == pytest.approx(math.hypot(50, 15))


def test_sweep_rows_and_csv_are_reproducible():
    cfg = SimConfig(trials=2_000, pt_dbm=-5.0, seed=15)
    rows = run_sweep(cfg, "pt_dbm", [-5, 0])
    assert [r["pt_dbm"] for r in rows] == [-5, 0]
    for r in rows:
        assert r["Px_lo"] <= r["Px"] <= r["Px_hi"]
        assert {"ub_Px", "ub_Ps", "ub_Pc", "N1", "D_min", "SER"} <= set(r)
    assert rows_to_csv(rows) == rows_to_csv(run_sweep(cfg, "pt_dbm", [-5, 0]))
    assert rows_to_csv(rows).splitlines()[0].startswith("pt_dbm,Px,Px_lo,Px_hi")


def test_manifest_records_seed_and_version():
    cfg = SimConfig(seed=99)
    m = make_manifest("sweep-power", cfg, ["a.csv"], 0.0)
    assert m["seed"] == 99
    assert m["config"]["fading"]["kappa_g"] == 10.0
    assert m["version"]
    los = make_manifest("x", replace(cfg, fading=LOS_ONLY), [], 0.0)
    assert los["config"]["fading"]["kappa_g"] == "inf"
