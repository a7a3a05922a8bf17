"""Seeded Monte Carlo BER engine.

Trials are split into fixed-size chunks. Each chunk draws from its own
``SeedSequence`` keyed by ``(seed, point, chunk)`` and chunk results are
summed in chunk order, so the worker count never changes the output.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from . import __version__
from .analysis import union_bound_bers
from .channel import FadingConfig, Geometry, LinkBudget, los_realization, ls_estimate_batch, sample_rician_batch
from .composite import composite_from_gains, pairwise_distances
from .modulation import constellation_by_name
from .optimizer import _dmin_batch, design_split

SCHEMES = ("proposed", "benchmark1", "benchmark2", "benchmark3", "priority")
SWEEP_AXES = ("n1", "pt_dbm", "n", "ris_x", "training")


@dataclass(frozen=True)
class FrameConfig:
    """Coherence-block bookkeeping: times in seconds, ``training`` in symbols."""

    t_a: float = 2.5e-3
    t_b: float = 0.2e-6
    r_b: float = 10e6
    training: int = 0

    def __post_init__(self) -> None:
        if self.t_b <= 0 or self.t_b > self.t_a:
            raise ValueError("need 0 < T_b <= T_a")
        if self.training < 0 or self.training * self.t_b > self.t_a:
            raise ValueError("training does not fit in the coherence time")

    @property
    def symbols_per_block(self) -> int:
        return max(int(math.floor((self.t_a - self.training * self.t_b) / self.t_b + 1e-9)), 1)


@dataclass(frozen=True)
class SimConfig:
    trials: int = 100_000
    seed: int = 0
    n: int = 200
    scheme: str = "proposed"
    eta: float | None = None
    primary: str = "qpsk"
    secondary: str = "bpsk"
    pt_dbm: float = 30.0
    noise_dbm: float = -100.0
    geometry: Geometry = field(default_factory=Geometry)
    fading: FadingConfig = field(default_factory=FadingConfig)
    training_reps: int = 0
    frame: FrameConfig | None = None
    n1: int | None = None
    chunk_size: int = 20_000
    workers: int = 1

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.n < 1:
            raise ValueError("N must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if self.scheme == "priority" and self.eta is None:
            raise ValueError("the priority scheme needs eta")
        if self.eta is not None and not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.training_reps < 0:
            raise ValueError("training_reps must be >= 0")
        if self.n1 is not None and not 0 <= self.n1 <= self.n:
            raise ValueError(f"n1 must lie in 0..{self.n}")
        if self.chunk_size < 1 or self.workers < 1:
            raise ValueError("chunk_size and workers must be >= 1")
        constellation_by_name(self.primary)
        constellation_by_name(self.secondary)

    @property
    def budget(self) -> LinkBudget:
        return LinkBudget.from_dbm(self.pt_dbm, self.noise_dbm)

    @property
    def is_los(self) -> bool:
        f = self.fading
        return math.isinf(f.kappa_g) and math.isinf(f.kappa_h) and math.isinf(f.kappa_hd)

    @property
    def training_length(self) -> int:
        return self.training_reps * (self.n + 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fading"] = {k: (str(v) if isinstance(v, float) and math.isinf(v) else v) for k, v in d["fading"].items()}
        return d


@dataclass
class BerEstimate:
    symbols: int = 0
    x_symbol_errors: int = 0
    x_bit_errors: int = 0
    s_bit_errors: int = 0
    c_bit_errors: int = 0
    x_bits: int = 0
    s_bits: int = 0
    c_bits: int = 0

    def __add__(self, other: BerEstimate) -> BerEstimate:
        return BerEstimate(*(a + b for a, b in zip(astuple_counts(self), astuple_counts(other))))

    @staticmethod
    def _rate(err: int, total: int) -> float:
        return err / total if total else float("nan")

    @property
    def px(self) -> float:
        return self._rate(self.x_bit_errors, self.x_bits)

    @property
    def ps(self) -> float:
        return self._rate(self.s_bit_errors, self.s_bits)

    @property
    def pc(self) -> float:
        return self._rate(self.c_bit_errors, self.c_bits)

    @property
    def ser(self) -> float:
        return self._rate(self.x_symbol_errors, self.symbols)

    def interval(self, which: str, alpha: float = 0.05) -> tuple[float, float]:
        """Wilson score interval for ``which`` in {x, s, c, ser}."""
        err, tot = {
            "x": (self.x_bit_errors, self.x_bits),
            "s": (self.s_bit_errors, self.s_bits),
            "c": (self.c_bit_errors, self.c_bits),
            "ser": (self.x_symbol_errors, self.symbols),
        }[which]
        lo, hi = proportion_confint(err, tot, alpha=alpha, method="wilson")
        return float(lo), float(hi)

    def std_error(self, which: str) -> float:
        p = {"x": self.px, "s": self.ps, "c": self.pc, "ser": self.ser}[which]
        tot = {"x": self.x_bits, "s": self.s_bits, "c": self.c_bits, "ser": self.symbols}[which]
        return math.sqrt(max(p * (1 - p), 0.0) / tot)


def astuple_counts(e: BerEstimate) -> tuple[int, ...]:
    return (e.symbols, e.x_symbol_errors, e.x_bit_errors, e.s_bit_errors, e.c_bit_errors, e.x_bits, e.s_bits, e.c_bits)


def _hamming_table(labels) -> np.ndarray:
    bits = np.array([[int(b) for b in lab] for lab in labels], dtype=np.int16)
    return np.abs(bits[:, None, :] - bits[None, :, :]).sum(axis=2)


def resolve_split(config: SimConfig) -> int:
    """Number of assisting elements used by the configured scheme."""
    if config.scheme in ("benchmark1", "benchmark2"):
        return config.n
    if config.scheme == "benchmark3":
        return 0
    if config.n1 is not None:
        return config.n1
    s, c = constellation_by_name(config.primary), constellation_by_name(config.secondary)
    eta = config.eta if config.scheme == "priority" else None
    return design_split(config.geometry, config.n, s, c, eta=eta, spacing=config.fading.spacing)


def _common_phases(h_d: np.ndarray, r1: np.ndarray, r2: np.ndarray, s_const, c_const) -> np.ndarray:
    """Vectorised common-phase choice for a batch of aligned magnitudes."""
    ref = np.where(h_d != 0, np.angle(h_d), 0.0)
    out = ref + math.pi / 4
    if s_const.order == 4 and c_const.order == 2:
        # both candidates give the same distances for this pair
        return out
    h_e = h_d + r1 * np.exp(1j * ref)
    step = max(1, 2_000_000 // (s_const.order * c_const.order) ** 2)
    for i in range(0, len(h_d), step):
        sl = slice(i, i + step)
        d_a, _ = _dmin_batch(h_e[sl], r2[sl] * np.exp(1j * (ref[sl] + math.pi / 4)), s_const, c_const)
        d_b, _ = _dmin_batch(h_e[sl], r2[sl] * np.exp(1j * (ref[sl] + 3 * math.pi / 4)), s_const, c_const)
        out[sl] = np.where(d_b > d_a * (1 + 1e-9), ref[sl] + 3 * math.pi / 4, out[sl])
    return out


def _configure(h_d_est, f_est, h_d_true, f_true, n1, scheme, s_const, c_const):
    """Effective gains ``(h_e, h_b)`` seen by the receiver and by the channel.

    Phases are designed on the estimated channels and applied to the true ones.
    """
    if scheme == "benchmark1":
        zeros = np.zeros_like(h_d_true)
        return h_d_est, zeros, h_d_true, zeros
    ref = np.where(h_d_est != 0, np.angle(h_d_est), 0.0)
    f1e, f2e = f_est[:, :n1], f_est[:, n1:]
    r1, r2 = np.abs(f1e).sum(axis=1), np.abs(f2e).sum(axis=1)
    phase = _common_phases(h_d_est, r1, r2, s_const, c_const)
    phi1 = np.exp(1j * (ref[:, None] - np.angle(f1e)))
    phi2 = np.exp(1j * (phase[:, None] - np.angle(f2e)))
    h_e_rx = h_d_est + (phi1 * f1e).sum(axis=1)
    h_b_rx = (phi2 * f2e).sum(axis=1)
    h_e_tx = h_d_true + (phi1 * f_true[:, :n1]).sum(axis=1)
    h_b_tx = (phi2 * f_true[:, n1:]).sum(axis=1)
    return h_e_rx, h_b_rx, h_e_tx, h_b_tx


def _draw_channels(config: SimConfig, blocks: int, rng: np.random.Generator):
    if config.is_los:
        los = los_realization(config.geometry, config.n, config.fading.spacing)
        return np.full(blocks, los.h_d), np.broadcast_to(los.f, (blocks, config.n))
    hd, g, h = sample_rician_batch(config.geometry, config.fading, config.n, blocks, rng)
    return hd, np.conj(h) * g


def _run_chunk(config: SimConfig, n1: int, count: int, seq: np.random.SeedSequence) -> BerEstimate:
    rng = np.random.default_rng(seq)
    s_const = constellation_by_name(config.primary)
    c_const = constellation_by_name(config.secondary)
    budget = config.budget
    per_block = config.frame.symbols_per_block if config.frame else 1
    blocks = -(-count // per_block)
    block_of = np.arange(count) // per_block

    h_d, f = _draw_channels(config, blocks, rng)
    if config.training_reps > 0:
        h_d_est, f_est = ls_estimate_batch(h_d, f, config.training_reps, budget, rng)
    else:
        h_d_est, f_est = h_d, f
    if config.is_los and config.training_reps == 0:
        # one deterministic channel: configure once
        gains = _configure(h_d[:1], f[:1], h_d[:1], f[:1], n1, config.scheme, s_const, c_const)
        h_e_rx, h_b_rx, h_e_tx, h_b_tx = (np.broadcast_to(g, (blocks,)) for g in gains)
    else:
        h_e_rx, h_b_rx, h_e_tx, h_b_tx = _configure(h_d_est, f_est, h_d, f, n1, config.scheme, s_const, c_const)

    ms, mc = s_const.order, c_const.order
    s_idx = rng.integers(ms, size=count)
    c_idx = rng.integers(mc, size=count)
    s = s_const.points[s_idx]
    c = c_const.points[c_idx]
    sp = math.sqrt(budget.pt)
    noise = (rng.standard_normal(count) + 1j * rng.standard_normal(count)) * math.sqrt(budget.noise / 2)
    y = sp * (h_e_tx[block_of] + h_b_tx[block_of] * c) * s + noise

    s_all = np.tile(s_const.points, mc)
    c_all = np.repeat(c_const.points, ms)
    if config.is_los and config.training_reps == 0:
        ref = sp * (h_e_rx[0] + h_b_rx[0] * c_all) * s_all
        det = np.argmin(np.abs(y[:, None] - ref[None, :]) ** 2, axis=1)
    else:
        det = np.empty(count, dtype=np.intp)
        step = max(1, 4_000_000 // (ms * mc))
        for i in range(0, count, step):
            sl = slice(i, i + step)
            b = block_of[sl]
            ref = sp * (h_e_rx[b][:, None] + h_b_rx[b][:, None] * c_all[None, :]) * s_all[None, :]
            det[sl] = np.argmin(np.abs(y[sl, None] - ref) ** 2, axis=1)

    s_hat, c_hat = det % ms, det // ms
    s_err = int(_hamming_table(s_const.labels)[s_idx, s_hat].sum())
    c_err = int(_hamming_table(c_const.labels)[c_idx, c_hat].sum())
    ks, kc = s_const.bits_per_symbol, c_const.bits_per_symbol
    sym_err = int(np.count_nonzero((s_hat != s_idx) | (c_hat != c_idx)))
    return BerEstimate(count, sym_err, s_err + c_err, s_err, c_err, count * (ks + kc), count * ks, count * kc)


def _chunk_plan(config: SimConfig) -> list[int]:
    full, rest = divmod(config.trials, config.chunk_size)
    return [config.chunk_size] * full + ([rest] if rest else [])


def run_point(config: SimConfig, point: int = 0, executor=None) -> BerEstimate:
    """Monte Carlo estimate for one configuration.

    ``point`` keys the random streams so that every sweep coordinate gets
    independent draws while staying reproducible.
    """
    n1 = resolve_split(config)
    plan = _chunk_plan(config)
    seqs = [np.random.SeedSequence(config.seed, spawn_key=(point, k)) for k in range(len(plan))]
    if executor is not None:
        parts = list(executor.map(_run_chunk, [config] * len(plan), [n1] * len(plan), plan, seqs))
    elif config.workers > 1 and len(plan) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            parts = list(ex.map(_run_chunk, [config] * len(plan), [n1] * len(plan), plan, seqs))
    else:
        parts = [_run_chunk(config, n1, cnt, sq) for cnt, sq in zip(plan, seqs)]
    total = BerEstimate()
    for p in parts:
        total = total + p
    return total


def location_geometry(ris_x: float, base: Geometry, y: float = 15.0, span: float = 100.0) -> Geometry:
    """PTx at the origin, CRx at ``(span, 0)``, RIS at ``(ris_x, y)``."""
    return Geometry(
        ptx=(0.0, 0.0), ris=(float(ris_x), y), crx=(span, 0.0),
        xi1=base.xi1, xi2=base.xi2, xi3=base.xi3, direct_link=base.direct_link,
    )


def config_at(config: SimConfig, axis: str, value) -> SimConfig:
    """The configuration for one coordinate of a sweep along ``axis``."""
    if axis == "n1":
        return replace(config, n1=int(value))
    if axis == "pt_dbm":
        return replace(config, pt_dbm=float(value))
    if axis == "n":
        return replace(config, n=int(value), n1=None)
    if axis == "ris_x":
        return replace(config, geometry=location_geometry(value, config.geometry))
    if axis == "training":
        reps = int(value)
        frame = replace(config.frame, training=reps * (config.n + 1)) if config.frame else None
        return replace(config, training_reps=reps, frame=frame)
    raise ValueError(f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")


def analytic_companion(config: SimConfig) -> dict:
    """Union bound on the LoS channel under the scheme's configuration."""
    s_const = constellation_by_name(config.primary)
    c_const = constellation_by_name(config.secondary)
    los = los_realization(config.geometry, config.n, config.fading.spacing)
    n1 = resolve_split(config)
    h_e, h_b, _, _ = _configure(
        np.array([los.h_d]), los.f[None, :], np.array([los.h_d]), los.f[None, :], n1, config.scheme, s_const, c_const
    )
    comp = composite_from_gains(h_e[0], h_b[0], s_const, c_const)
    rep = union_bound_bers(comp, config.budget.mu)
    return {
        "N1": n1,
        "D_min": pairwise_distances(comp).d_min,
        "ub_Px": rep.px,
        "ub_Ps": rep.ps,
        "ub_Pc": rep.pc,
    }


def run_sweep(config: SimConfig, axis: str, values) -> list[dict]:
    """One row per coordinate with Monte Carlo rates, Wilson bounds and the union bound."""
    rows = []
    executor = ProcessPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        for i, v in enumerate(values):
            cfg = config_at(config, axis, v)
            est = run_point(cfg, point=i, executor=executor)
            row = {axis: v}
            for key, name in (("Px", "x"), ("Ps", "s"), ("Pc", "c"), ("SER", "ser")):
                lo, hi = est.interval(name)
                row[key] = {"x": est.px, "s": est.ps, "c": est.pc, "ser": est.ser}[name]
                row[f"{key}_lo"], row[f"{key}_hi"] = lo, hi
            row.update(
                symbols=est.symbols,
                x_bit_errors=est.x_bit_errors,
                s_bit_errors=est.s_bit_errors,
                c_bit_errors=est.c_bit_errors,
            )
            row.update(analytic_companion(cfg))
            rows.append(row)
    finally:
        if executor is not None:
            executor.shutdown()
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def write_results(rows: list[dict], path, manifest: dict) -> None:
    """Write ``rows`` as CSV and the manifest as a ``.json`` sidecar."""
    from pathlib import Path

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(rows_to_csv(rows))
    side = path.with_suffix(".json")
    side.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def make_manifest(command: str, config: SimConfig | dict, outputs: list[str], started: float, **extra) -> dict:
    cfg = config.to_dict() if isinstance(config, SimConfig) else config
    return {
        "command": command,
        "config": cfg,
        "seed": cfg.get("seed"),
        "version": __version__,
        "outputs": outputs,
        "wall_time_s": round(time.time() - started, 3),
        **extra,
    }

