"""``ris-sr`` command-line front end.

Exit codes: 0 success, 2 usage error, 3 configuration error, 4 runtime error.
Results go to ``--out``, else ``$RISSR_OUT``, else ``./results``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    error_floor,
    min_elements_for_benefit,
    performance_gain,
    region_approximation,
    union_bound_bers,
)
from .channel import los_realization
from .composite import classify_qpsk_bpsk, composite_from_gains, composite_to_dict, pairwise_distances
from .config import ConfigError, build_sim_config, load_file, parse_grid, parse_text
from .modulation import constellation_by_name
from .optimizer import (
    InfeasiblePartitionError,
    is_qpsk_bpsk,
    partition_closed_form,
    partition_oracle,
    partition_with_priority,
    solve_split,
    partition_case,
)
from .simulator import _configure, make_manifest, resolve_split, run_sweep, write_results

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3, 4
OUT_ENV = "RISSR_OUT"

SWEEPS = {
    "sweep-partition": ("n1", "0:200:10"),
    "sweep-power": ("pt_dbm", "-20:20:5"),
    "sweep-elements": ("n", "50,100,200,400"),
    "sweep-location": ("ris_x", "5:95:10"),
    "sweep-training": ("training", "1,2,4,8"),
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", type=int, help="master seed (non-negative integer)")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    p.add_argument("--scheme", choices=("proposed", "benchmark1", "benchmark2", "benchmark3", "priority"))
    p.add_argument("--eta", type=float, help="primary-distance fraction for the priority scheme")
    p.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    p.add_argument("--grid", help="sweep grid: a,b,c or start:stop:step")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ris-sr", description="Partitioned-RIS symbiotic radio toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "optimize": "closed-form and exhaustive partitioning on the LoS channel (JSON)",
        "analyze": "analytical BER curves versus transmit power (CSV)",
        "constellation-dump": "composite constellation points, labels and distances (JSON)",
        "sweep-partition": "Monte Carlo BER versus the number of assisting elements",
        "sweep-power": "Monte Carlo BER versus transmit power (dBm)",
        "sweep-elements": "Monte Carlo BER versus the total number of elements",
        "sweep-location": "Monte Carlo BER versus the RIS x-coordinate",
        "sweep-training": "Monte Carlo BER versus LS training repetitions (0 = perfect CSI)",
    }
    for name, text in helps.items():
        _common(sub.add_parser(name, help=text, description=text))
    return parser


def _resolve(args) -> tuple[dict, object]:
    values = load_file(args.config) if args.config else {}
    for item in args.set:
        values.update(parse_text(item, "--set"))
    for key in ("seed", "trials", "scheme", "eta", "workers", "grid"):
        val = getattr(args, key)
        if val is not None:
            values[key] = val
    if values.get("seed", 0) < 0:
        raise ConfigError("seed must be non-negative")
    if values.get("eta") is not None and values.get("scheme") is None:
        values["scheme"] = "priority"
    return values, build_sim_config(values)


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "results")


def _optimize(values, cfg) -> dict:
    s, c = constellation_by_name(cfg.primary), constellation_by_name(cfg.secondary)
    los = los_realization(cfg.geometry, cfg.n, cfg.fading.spacing)
    t = cfg.geometry.strength_ratio(cfg.n)
    g = cfg.geometry
    out = {
        "N": cfg.n,
        "t": t,
        "primary": cfg.primary,
        "secondary": cfg.secondary,
        "min_elements_for_benefit": min_elements_for_benefit(g.rho1, g.rho2, g.rho3),
    }
    if cfg.scheme == "priority":
        sol = partition_with_priority(los.h_d, los.f, s, c, cfg.eta, is_qpsk_bpsk(s, c))
    elif is_qpsk_bpsk(s, c):
        n1, _ = partition_closed_form(t, cfg.n)
        sol = solve_split(los.h_d, los.f, n1, s, c, method="closed-form")
        sol.case = partition_case(t)
        out["oracle"] = partition_oracle(los.h_d, los.f, s, c).to_dict()
    else:
        sol = partition_oracle(los.h_d, los.f, s, c, feasibility=False)
    out.update(sol.to_dict())
    return out


def _los_gains(cfg):
    """Scheme gains on the LoS channel of ``cfg``."""
    s, c = constellation_by_name(cfg.primary), constellation_by_name(cfg.secondary)
    los = los_realization(cfg.geometry, cfg.n, cfg.fading.spacing)
    n1 = resolve_split(cfg)
    hd = np.array([los.h_d])
    h_e, h_b, _, _ = _configure(hd, los.f[None, :], hd, los.f[None, :], n1, cfg.scheme, s, c)
    return n1, h_e, h_b, s, c, los


def _analyze(values, cfg) -> list[dict]:
    n1, h_e, h_b, s, c, los = _los_gains(cfg)
    comp = composite_from_gains(h_e[0], h_b[0], s, c)
    profile = pairwise_distances(comp)
    qb = is_qpsk_bpsk(s, c)
    if qb:
        ref = math.atan2(h_e[0].imag, h_e[0].real) if h_e[0] != 0 else 0.0
        rot = complex(math.cos(-ref), math.sin(-ref))
        classes = classify_qpsk_bpsk(0.0, h_e[0] * rot, h_b[0] * rot)
        region = {"nonadjacent": "I", "adjacent": "II", "intra": "III"}[classes.limiting_class()]
    rows = []
    for pt in parse_grid(values.get("grid", "-20:20:2")):
        point = build_sim_config({**values, "pt_dbm": float(pt)})
        b = point.budget
        ub = union_bound_bers(comp, b.mu)
        row = {"pt_dbm": pt, "N1": n1, "D_min": profile.d_min, "Px": ub.px, "Ps": ub.ps, "Pc": ub.pc}
        if qb:
            dom = region_approximation(classes, b.mu, region)
            row.update(region=region, dom_Ps=dom.ps, dom_Pc=dom.pc)
        row["floor"] = error_floor(b.gamma_d(los.h_d))
        gain = performance_gain(b.gamma_b(cfg.geometry.rho2, cfg.geometry.rho3), cfg.n)
        row.update(gain_Ps=gain.ps_gain, gain_Pc=gain.pc_gain, gain_Ps_bound=gain.ps_bound, gain_Pc_bound=gain.pc_bound)
        rows.append(row)
    return rows


def _dump(values, cfg) -> dict:
    n1, h_e, h_b, s, c, _ = _los_gains(cfg)
    comp = composite_from_gains(h_e[0], h_b[0], s, c)
    out = {"N": cfg.n, "N1": n1, "scheme": cfg.scheme}
    out.update(composite_to_dict(comp))
    return out


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    started = time.time()
    try:
        values, cfg = _resolve(args)
    except ConfigError as exc:
        print(f"ris-sr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = _out_dir(args)
    name = args.command
    try:
        if name == "optimize":
            payload = _optimize(values, cfg)
            print(json.dumps(payload, indent=2, sort_keys=True, default=str))
            if args.out:
                _write_json(out_dir / "optimize.json", payload)
            return EXIT_OK
        if name == "constellation-dump":
            payload = _dump(values, cfg)
            path = out_dir / "constellation.json"
            _write_json(path, payload)
            print(path)
            return EXIT_OK
        if name == "analyze":
            rows = _analyze(values, cfg)
            path = out_dir / "analyze.csv"
        else:
            axis, default_grid = SWEEPS[name]
            grid = parse_grid(values.get("grid", default_grid))
            rows = run_sweep(cfg, axis, grid)
            path = out_dir / f"{name}.csv"
        write_results(rows, path, make_manifest(name, values | {"resolved": cfg.to_dict()}, [str(path)], started))
        print(path)
        return EXIT_OK
    except ConfigError as exc:
        print(f"ris-sr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, InfeasiblePartitionError, OSError) as exc:
        print(f"ris-sr: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

