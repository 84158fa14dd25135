"""Experiment configuration: a YAML file with ``model``, ``noise``, ``lyapunov`` and ``run`` blocks.

Every key has a default, unknown keys are rejected, and validation errors
name the offending dotted key (e.g. ``noise.alpha``).
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import yaml

from .lyapunov import LyapunovParams, make_gamma_sequence
from .noise import NoiseSpec
from .potential import FiniteChain, birth_death_chain, random_chain, two_state_chain
from .spectral import SpectralModel, constant_spectrum, dirichlet_spectrum, spectrum_from_csv

DEFAULTS: dict = {
    "model": {"spectrum": "dirichlet", "d": 1, "N": 64, "value": -1.0, "path": None},
    "noise": {"family": "diagonal", "alpha": 1.0, "gamma1": -1.0, "gamma2": -1.5,
              "sigma1": None, "sigma2": None},
    "lyapunov": {"a": 0.1, "p": 2.3, "q": 1.0, "gamma": 0.4, "theta": 1.0, "beta": None},
    "run": {
        "seed": 20240607,
        "t": 0.5,
        "n_samples": 100000,
        "frequencies": None,
        "m2": {"cases": 100, "t_max": 5.0},
        "simulate": {"T": 1.0, "steps": 20, "refine": 16, "x0": None, "window": 5},
        "dichotomy": {"alpha": 0.5, "gamma2": [-3.0, -2.0, -1.0],
                      "N": [16, 32, 64, 128, 256, 512, 1024], "T": 1.0, "steps": 200,
                      "n_paths": 200, "drift": "constant"},
        "nest": {"levels": [10.0, 100.0, 1000.0, 10000.0], "T": 1.0, "dt": 0.05,
                 "n_paths": 200, "n_V": 1000},
        "lyapunov_eval": {"radii": [1.0, 5.0, 25.0], "n": 20000, "states": 10,
                          "h": [0.01, 0.1], "ceiling": 1.0e12},
        "hsigma": {"a_range": [1.0e-3, 10.0], "p_range": [2.001, 20.0], "grid": 50},
        "hs": {"t": 1.0},
        "potlab": {
            "chain": {"kind": "two_state", "path": None, "rate": 1.0, "n_max": 50,
                      "birth": 0.2, "death": 1.0, "n": 6, "sparsity": 0.0},
            "alpha": 1.0, "A": [1], "u": None, "v": None, "n_paths": 10000,
            "horizon": None, "F": None,
        },
    },
}

class ConfigError(ValueError):
    """Invalid configuration; ``key`` is the dotted path of the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


def _merge(base: dict, over: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    if not isinstance(over, dict):
        raise ConfigError(prefix.rstrip(".") or "<root>", "expected a mapping")
    for k, v in over.items():
        key = f"{prefix}{k}"
        if k not in base:
            raise ConfigError(key, "unknown key")
        if isinstance(base[k], dict):
            out[k] = _merge(base[k], v if v is not None else {}, key + ".")
        else:
            out[k] = v
    return out


def _set_path(cfg: dict, dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node = cfg
    for i, part in enumerate(parts[:-1]):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(".".join(parts[: i + 1]), "unknown key")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ConfigError(dotted, "unknown key")
    node[parts[-1]] = value


def parse_override(text: str) -> tuple[str, Any]:
    """``a.b=value`` with the value read as YAML (numbers, lists, null)."""
    if "=" not in text:
        raise ConfigError(text, "override must look like key=value")
    key, raw = text.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


def load_config(path: Union[str, Path, None] = None, overrides: Sequence = ()) -> dict:
    """Defaults, then the YAML file, then ``key=value`` overrides."""
    user: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                user = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError("<config>", f"cannot read {path}: {exc.strerror}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError("<config>", f"not valid YAML: {exc}") from exc
    cfg = _merge(DEFAULTS, user)
    for item in overrides:
        key, value = parse_override(item) if isinstance(item, str) else item
        _set_path(cfg, key, value)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()


# ---------------------------------------------------------------------------
# typed access with key-aware errors

def _get(cfg: dict, key: str):
    node = cfg
    for part in key.split("."):
        node = node[part]
    return node


def get_float(cfg, key, *, positive=False, nonneg=False, optional=False, lo=None, hi=None,
              lo_open=True, hi_open=True) -> Optional[float]:
    raw = _get(cfg, key)
    if raw is None:
        if optional:
            return None
        raise ConfigError(key, "a number is required")
    if isinstance(raw, bool):
        raise ConfigError(key, "expected a number")
    try:
        x = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {raw!r}") from None
    if not math.isfinite(x):
        raise ConfigError(key, "must be finite")
    if positive and not x > 0:
        raise ConfigError(key, f"must be positive, got {x}")
    if nonneg and x < 0:
        raise ConfigError(key, f"must be non-negative, got {x}")
    if lo is not None and (x <= lo if lo_open else x < lo):
        raise ConfigError(key, f"must be {'>' if lo_open else '>='} {lo}, got {x}")
    if hi is not None and (x >= hi if hi_open else x > hi):
        raise ConfigError(key, f"must be {'<' if hi_open else '<='} {hi}, got {x}")
    return x


def get_int(cfg, key, *, minimum=None) -> int:
    raw = _get(cfg, key)
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or int(raw) != raw:
        raise ConfigError(key, f"expected an integer, got {raw!r}")
    n = int(raw)
    if minimum is not None and n < minimum:
        raise ConfigError(key, f"must be at least {minimum}, got {n}")
    return n


def get_float_list(cfg, key, *, optional=False, min_len=1) -> Optional[list]:
    raw = _get(cfg, key)
    if raw is None and optional:
        return None
    if not isinstance(raw, (list, tuple)) or len(raw) < min_len:
        raise ConfigError(key, f"expected a list of at least {min_len} numbers")
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, bool):
            raise ConfigError(f"{key}[{i}]", "expected a number")
        try:
            x = float(v)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}[{i}]", f"expected a number, got {v!r}") from None
        if not math.isfinite(x):
            raise ConfigError(f"{key}[{i}]", "must be finite")
        out.append(x)
    return out


def get_choice(cfg, key, choices) -> str:
    raw = _get(cfg, key)
    if raw not in choices:
        raise ConfigError(key, f"must be one of {sorted(choices)}, got {raw!r}")
    return raw


# ---------------------------------------------------------------------------
# builders

def _read_column(path: str, key: str) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        # a header row is allowed
        try:
            data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, skiprows=1)
        except (OSError, ValueError):
            raise ConfigError(key, f"cannot read scales from {path}: {exc}") from exc
    return data[:, -1]


def build_model(cfg: dict) -> SpectralModel:
    kind = get_choice(cfg, "model.spectrum", {"dirichlet", "constant", "csv"})
    d = get_int(cfg, "model.d", minimum=1)
    if kind == "csv":
        path = _get(cfg, "model.path")
        if not path:
            raise ConfigError("model.path", "required when model.spectrum is csv")
        try:
            return spectrum_from_csv(path, d)
        except (OSError, ValueError) as exc:
            raise ConfigError("model.path", str(exc)) from exc
    N = get_int(cfg, "model.N", minimum=1)
    if kind == "constant":
        return constant_spectrum(N, get_float(cfg, "model.value", hi=0.0), d)
    return dirichlet_spectrum(d, N)


def build_noise(cfg: dict, N: int) -> NoiseSpec:
    family = get_choice(cfg, "noise.family", {"diagonal", "elliptical"})
    alpha = get_float(cfg, "noise.alpha", lo=0.0, hi=2.0)
    scales = []
    for i in (1, 2):
        path = _get(cfg, f"noise.sigma{i}")
        g = get_float(cfg, f"noise.gamma{i}", optional=True)
        if path is not None:
            s = _read_column(path, f"noise.sigma{i}")
            if s.size != N:
                raise ConfigError(f"noise.sigma{i}", f"has {s.size} scales, model has {N} modes")
            if np.any(s < 0) or not np.all(np.isfinite(s)):
                raise ConfigError(f"noise.sigma{i}", "scales must be finite and non-negative")
            scales.append((s, None))
        elif g is not None:
            with np.errstate(over="ignore"):
                s = np.arange(1, N + 1, dtype=float) ** g
            if not np.all(np.isfinite(s)):
                raise ConfigError(f"noise.gamma{i}", f"k^{g} overflows for k <= {N}")
            scales.append((s, g))
        else:
            scales.append((np.zeros(N), None))
    (s1, g1), (s2, g2) = scales
    return NoiseSpec(alpha, family, s1, s2, g1, g2)


def build_params(cfg: dict, model: SpectralModel, noise: NoiseSpec) -> LyapunovParams:
    a = get_float(cfg, "lyapunov.a", positive=True)
    p = get_float(cfg, "lyapunov.p", lo=2.0, lo_open=False)
    q = get_float(cfg, "lyapunov.q", positive=True)
    gamma = get_float(cfg, "lyapunov.gamma", lo=0.0, hi=1.0, hi_open=False)
    theta = get_float(cfg, "lyapunov.theta", positive=True)
    if not theta > (2 - gamma) / 2:
        raise ConfigError("lyapunov.theta", f"must exceed (2 - gamma)/2 = {(2 - gamma) / 2}")
    gs = make_gamma_sequence(gamma, q, noise, model, theta)
    return LyapunovParams(a, p, q, gamma, gs.values)


def get_beta(cfg: dict, alpha: float) -> Optional[float]:
    return get_float(cfg, "lyapunov.beta", optional=True, lo=0.0, hi=alpha)


def build_chain(cfg: dict) -> FiniteChain:
    base = "run.potlab.chain"
    kind = get_choice(cfg, f"{base}.kind", {"two_state", "birth_death", "random", "csv"})
    if kind == "two_state":
        return two_state_chain(get_float(cfg, f"{base}.rate", positive=True))
    if kind == "birth_death":
        return birth_death_chain(get_int(cfg, f"{base}.n_max", minimum=1),
                                 get_float(cfg, f"{base}.birth", nonneg=True),
                                 get_float(cfg, f"{base}.death", nonneg=True))
    if kind == "random":
        return random_chain(get_int(cfg, f"{base}.n", minimum=1),
                            get_int(cfg, "run.seed", minimum=0),
                            get_float(cfg, f"{base}.sparsity", lo=0.0, hi=1.0, lo_open=False))
    path = _get(cfg, f"{base}.path")
    if not path:
        raise ConfigError(f"{base}.path", "required when the chain kind is csv")
    try:
        return FiniteChain.from_csv(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{base}.path", str(exc)) from exc


def get_states(cfg: dict, key: str, n: int) -> list[int]:
    raw = _get(cfg, key)
    if not isinstance(raw, (list, tuple)):
        raise ConfigError(key, "expected a list of state indices")
    out = []
    for i, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < n:
            raise ConfigError(f"{key}[{i}]", f"expected a state index in 0..{n - 1}, got {v!r}")
        out.append(v)
    return out


def get_vector(cfg: dict, key: str, n: int, default: Optional[np.ndarray] = None,
               nonneg: bool = False) -> np.ndarray:
    raw = _get(cfg, key)
    if raw is None:
        if default is None:
            raise ConfigError(key, "a vector is required")
        return default
    vals = np.array(get_float_list(cfg, key))
    if vals.size != n:
        raise ConfigError(key, f"expected {n} entries, got {vals.size}")
    if nonneg and np.any(vals < 0):
        raise ConfigError(key, "entries must be non-negative")
    return vals


@dataclass(frozen=True)
class Resolved:
    """Validated objects built from a configuration."""

    model: SpectralModel
    noise: NoiseSpec
    params: Optional[LyapunovParams]
    seed: int


def resolve(cfg: dict, need_params: bool = False) -> Resolved:
    model = build_model(cfg)
    noise = build_noise(cfg, model.truncation_N)
    params = build_params(cfg, model, noise) if need_params else None
    seed = get_int(cfg, "run.seed", minimum=0)
    if seed >= 2**64:
        raise ConfigError("run.seed", "must fit in 64 bits")
    return Resolved(model, noise, params, seed)
