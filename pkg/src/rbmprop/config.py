"""Line-oriented ``section.key = value`` configuration.

Blank lines and ``#`` comments are ignored.  Every key has a documented
default; unknown keys and unparseable values raise ConfigError naming the key.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    t = s.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _pos_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise ValueError("must be >= 1")
    return v


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise ValueError("must be >= 0")
    return v


def _pos_float(s: str) -> float:
    v = float(s)
    if not v > 0:
        raise ValueError("must be > 0")
    return v


def _unit_open(s: str) -> float:
    v = float(s)
    if not 0 < v < 1:
        raise ValueError("must lie strictly between 0 and 1")
    return v


def _opt(parse: Callable) -> Callable:
    def inner(s: str):
        return None if s.strip().lower() in ("", "auto", "none") else parse(s)
    return inner


def _choice(*options: str) -> Callable:
    def inner(s: str) -> str:
        t = s.strip().lower()
        if t not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return t
    return inner


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.replace(",", " ").split())


def _words(s: str) -> tuple:
    return tuple(x.strip().lower() for x in s.split(",") if x.strip())


def _shapes(s: str) -> tuple:
    out = []
    for tok in _words(s):
        a, _, b = tok.partition("x")
        out.append((_pos_int(a), _pos_int(b)))
    if not out:
        raise ValueError("need at least one shape like 2x3")
    return tuple(out)


def _eps0(s: str) -> float:
    v = float(s)
    if not 0 <= v < 0.5:
        raise ValueError("must lie in [0, 0.5)")
    return v


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: str
    doc: str


KEYS: dict[str, Key] = {
    "model.n_visible": Key(_pos_int, "4", "number of visible nodes"),
    "model.n_hidden": Key(_pos_int, "4", "number of hidden nodes"),
    "model.coding": Key(_choice("pm1", "01"), "pm1", "node coding, pm1 or 01"),
    "model.max_nodes": Key(_pos_int, "20", "enumeration cap on nV + nH"),
    "theta.source": Key(_choice("zeros", "table1", "explicit", "file", "grid", "none"),
                        "table1", "where theta comes from"),
    "theta.values": Key(_floats, "", "explicit theta, canonical order"),
    "theta.file": Key(str, "", "text file, one theta per line"),
    "theta.g_main": Key(float, "1.0", "grid source: average main magnitude"),
    "theta.g_interaction": Key(float, "1.0", "grid source: average interaction magnitude"),
    "theta.seed": Key(_opt(int), "auto", "grid source seed (auto: master seed)"),
    "data.n": Key(_pos_int, "5000", "number of simulated observations"),
    "data.seed": Key(_opt(int), "auto", "simulation seed (auto: master seed)"),
    "data.file": Key(str, "", "existing dataset CSV (obs_id,v1..vN) for fit"),
    "fit.methods": Key(_words, "bwtplv,bwtnlv,bwtnml", "fitters to run"),
    "fit.iterations": Key(_pos_int, "1050", "total MCMC iterations"),
    "fit.burn_in": Key(_nonneg_int, "50", "discarded leading iterations"),
    "fit.target_acceptance": Key(_unit_open, "0.234", "adaptive MH target"),
    "fit.adaptation_decay": Key(_pos_float, "0.6", "Robbins-Monro step exponent"),
    "fit.initial_theta": Key(_choice("zeros", "prior", "map"), "zeros",
                             "chain start for the truncated-normal methods"),
    "fit.initial_scale": Key(_opt(_pos_float), "auto",
                             "initial proposal sd (auto: 2.38/sqrt(m n))"),
    "fit.block_scales": Key(_bool, "false", "scale proposals by prior sd per block"),
    "fit.seed": Key(_opt(int), "auto", "fitter seed (auto: from master seed)"),
    "prior.sigma_main_sq": Key(_opt(_pos_float), "auto", "auto: 1/(nV+nH)"),
    "prior.sigma_int_sq": Key(_opt(_pos_float), "auto", "auto: min(1/(nV nH), sigma_main_sq)"),
    "prior.trunc_mult": Key(_pos_float, "3", "truncation in prior sds"),
    "prior.trick_c": Key(_opt(_pos_float), "auto", "trick prior C (auto: tuned)"),
    "diagnostics.directions": Key(_pos_int, "1024", "random hull directions"),
    "diagnostics.axis": Key(_bool, "true", "add +/- axis hull directions"),
    "diagnostics.refine": Key(_nonneg_int, "3", "hull directions to polish locally"),
    "diagnostics.hull_seed": Key(int, "0", "hull direction seed"),
    "diagnostics.eps_modal": Key(_unit_open, "0.1", "modal set epsilon"),
    "diagnostics.eps0": Key(_eps0, "0.05", "near-degeneracy epsilon for 1x1"),
    "diagnostics.block_len": Key(_opt(_pos_int), "auto", "ESS block length (auto: floor sqrt M)"),
    "diagnostics.max_lag": Key(_pos_int, "40", "largest ACF lag"),
    "grid.shapes": Key(_shapes, "1x1,1x2,1x3,1x4,2x1,2x2,2x3,2x4,3x1,3x2,3x3,3x4,4x1,4x2,4x3,4x4",
                       "model shapes, comma separated NVxNH"),
    "grid.min": Key(_pos_float, "0.001", "smallest average magnitude"),
    "grid.max": Key(_pos_float, "3", "largest average magnitude"),
    "grid.breaks": Key(int, "24", "grid points per axis"),
    "grid.replicates": Key(_pos_int, "100", "thetas per grid point"),
    "grid.spacing": Key(_choice("linear", "geometric"), "linear", "grid spacing"),
    "grid.workers": Key(_pos_int, "1", "worker processes"),
    "run.seed": Key(int, "0", "master seed"),
}

PRESETS: dict[str, dict[str, str]] = {
    "table1": {"model.n_visible": "4", "model.n_hidden": "4",
               "model.coding": "pm1", "theta.source": "table1"},
    "zero": {"theta.source": "zeros"},
    "desk": {"grid.shapes": "1x1,2x2,4x4", "grid.breaks": "8",
             "grid.replicates": "25"},
    "paper": {"grid.shapes": KEYS["grid.shapes"].default, "grid.breaks": "24",
              "grid.replicates": "100"},
    "table1-fit": {"model.n_visible": "4", "model.n_hidden": "4",
                   "model.coding": "pm1", "theta.source": "table1",
                   "data.n": "5000", "fit.iterations": "1050",
                   "fit.burn_in": "50", "fit.initial_theta": "map"},
}


def parse_text(text: str, origin: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{origin}:{lineno}: expected 'section.key = value'")
        if key not in KEYS:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


class Config:
    """Resolved configuration: defaults < preset < file < overrides."""

    def __init__(self, raw: dict[str, str] | None = None, preset: str | None = None):
        merged = {k: v.default for k, v in KEYS.items()}
        if preset:
            if preset not in PRESETS:
                raise ConfigError(
                    f"unknown preset {preset!r}; valid: {', '.join(PRESETS)}")
            merged.update(PRESETS[preset])
        for k, v in (raw or {}).items():
            if k not in KEYS:
                raise ConfigError(f"unknown key {k!r}")
            merged[k] = v
        self.raw = merged
        self.values = {}
        for k, v in merged.items():
            try:
                self.values[k] = KEYS[k].parse(v)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {k} = {v!r}: {exc}") from None
        if self.values["grid.breaks"] < 2:
            raise ConfigError("bad value for grid.breaks: must be >= 2")
        if self.values["fit.burn_in"] >= self.values["fit.iterations"]:
            raise ConfigError("bad value for fit.burn_in: must be < fit.iterations")
        if self.values["grid.max"] < self.values["grid.min"]:
            raise ConfigError("bad value for grid.max: must be >= grid.min")

    @classmethod
    def load(cls, path=None, preset=None, overrides=None) -> "Config":
        raw = {}
        if path:
            p = Path(path)
            try:
                text = p.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config {p}: {exc}") from None
            raw.update(parse_text(text, str(p)))
        for k, v in (overrides or {}).items():
            if k not in KEYS:
                raise ConfigError(f"unknown key {k!r}")
            raw[k] = v
        return cls(raw, preset)

    def __getitem__(self, key):
        return self.values[key]

    def resolved(self) -> dict:
        return dict(sorted(self.raw.items()))


def describe_keys() -> str:
    return "\n".join(f"{k} = {v.default}    # {v.doc}" for k, v in KEYS.items())
