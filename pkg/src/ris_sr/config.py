"""Flat ``key = value`` configuration files.

One assignment per line; ``#`` starts a comment. Unknown keys are rejected.
"""

from __future__ import annotations

import math
from pathlib import Path

from .channel import FadingConfig, Geometry
from .simulator import FrameConfig, SimConfig


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


_BOOL = {"true": True, "yes": True, "1": True, "on": True, "false": False, "no": False, "0": False, "off": False}

# key -> parser
_KEYS = {
    "trials": int,
    "seed": int,
    "n": int,
    "n1": int,
    "scheme": str,
    "eta": float,
    "primary": str,
    "secondary": str,
    "pt_dbm": float,
    "noise_dbm": float,
    "d1": float,
    "d2": float,
    "d3": float,
    "xi1": float,
    "xi2": float,
    "xi3": float,
    "direct_link": "bool",
    "channel": str,
    "kappa_g": float,
    "kappa_h": float,
    "kappa_hd": float,
    "spacing": float,
    "training_reps": int,
    "frame": "bool",
    "t_a": float,
    "t_b": float,
    "chunk_size": int,
    "workers": int,
    "grid": str,
}


def parse_text(text: str, source: str = "<config>") -> dict:
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.lower()
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = _convert(key, value, f"{source}:{lineno}")
    return out


def _convert(key: str, value: str, where: str):
    kind = _KEYS[key]
    try:
        if kind == "bool":
            return _BOOL[value.lower()]
        return kind(value)
    except (KeyError, ValueError):
        raise ConfigError(f"{where}: bad value {value!r} for {key}") from None


def load_file(path: str | Path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
    return parse_text(text, str(p))


def parse_grid(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:step`` (stop inclusive)."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ConfigError("grid step must be positive")
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            vals = [start + i * step for i in range(count)]
        else:
            vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad grid {text!r}") from None
    if not vals:
        raise ConfigError("grid is empty")
    return [int(v) if float(v).is_integer() else v for v in vals]


def build_sim_config(values: dict) -> SimConfig:
    """Assemble a :class:`SimConfig`; missing keys take the reference defaults."""
    v = dict(values)
    try:
        geo_kw = {k: v[k] for k in ("xi1", "xi2", "xi3", "direct_link") if k in v}
        geometry = Geometry.from_distances(v.get("d1", 80.0), v.get("d2", 75.0), v.get("d3", 10.0), **geo_kw)
        channel = v.get("channel", "rician").lower()
        if channel == "los":
            fading = FadingConfig(math.inf, math.inf, math.inf, v.get("spacing", 0.5))
        elif channel == "rician":
            fading = FadingConfig(
                v.get("kappa_g", 10.0), v.get("kappa_h", 8.0), v.get("kappa_hd", 12.0), v.get("spacing", 0.5)
            )
        else:
            raise ConfigError(f"channel must be 'los' or 'rician', got {channel!r}")
        n = v.get("n", 200)
        reps = v.get("training_reps", 0)
        frame = None
        if v.get("frame", False):
            frame = FrameConfig(t_a=v.get("t_a", 2.5e-3), t_b=v.get("t_b", 0.2e-6), training=reps * (n + 1))
        kw = {
            k: v[k]
            for k in ("trials", "seed", "scheme", "eta", "primary", "secondary", "pt_dbm", "noise_dbm", "n1", "chunk_size", "workers")
            if k in v and v[k] is not None
        }
        return SimConfig(n=n, geometry=geometry, fading=fading, training_reps=reps, frame=frame, **kw)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
