"""Command line entry point: ``mehlerlab COMMAND [--config FILE] [--set key=value ...]``.

Exit status is 0 on success, 1 for invalid configuration and 2 for numerical
failure; failures print a JSON error record naming the offending key.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .config import (ConfigError, build_chain, config_hash, get_beta, get_choice, get_float,
                     get_float_list, get_int, get_states, get_vector, load_config, resolve, _get)
from .experiments import cf_test, excessivity_suite, lyapunov_ray, m2_test
from .lyapunov import _jsonable, check_H_A_mu, check_H_Sigma, check_hs_embedding
from .paths import dichotomy_experiment, nest_exit_probe, regularity_stats, simulate_path
from .potential import (certify_minimality, hitting_balayage, is_excessive, mc_balayage,
                        nest_check, polar_null_set, reduced_lp, resolvent)
from .rng import SeedSpec
from .spectral import spectrum_to_csv, verify_weyl

OUTPUT_ENV = "MEHLERLAB_OUTPUT_DIR"
DEFAULT_OUTPUT = "mehlerlab-out"


class Output:
    """Writes result files, each starting with a provenance header."""

    def __init__(self, out_dir: Path, command: str, cfg_hash: str, seed: int, timestamp: bool):
        self.dir = out_dir
        self.meta = {"command": command, "config_sha256": cfg_hash, "seed": seed,
                     "version": __version__}
        if timestamp:
            self.meta["generated"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
        self.written: list[Path] = []

    def _path(self, name: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        return self.dir / name

    def csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k}={v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])
        return self._write(name, buf.getvalue())

    def json(self, name: str, payload) -> Path:
        text = json.dumps({"meta": self.meta, "result": _jsonable(payload)}, indent=2,
                          sort_keys=True, allow_nan=False)
        return self._write(name, text + "\n")

    def text(self, name: str, body: str) -> Path:
        head = "".join(f"# {k}={v}\n" for k, v in self.meta.items())
        return self._write(name, head + body)

    def _write(self, name, text) -> Path:
        path = self._path(name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.written.append(path)
        return path


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


# ---------------------------------------------------------------------------
# commands

def cmd_spectrum(cfg, out: Output, workers: int):
    r = resolve(cfg)
    rep = verify_weyl(r.model)
    out.text("spectrum.csv", spectrum_to_csv(r.model))
    out.json("weyl.json", {"feasible_C": rep.feasible_C, "raw_C": rep.raw_C,
                           "trend_exponent": rep.trend_exponent, "worst_k": rep.worst_k,
                           "N": r.model.truncation_N, "d": r.model.dim_d})
    return {"N": r.model.truncation_N, "weyl_C": rep.feasible_C}


def cmd_cf_test(cfg, out, workers):
    r = resolve(cfg)
    t = get_float(cfg, "run.t", positive=True)
    n = get_int(cfg, "run.n_samples", minimum=2)
    freqs = _get(cfg, "run.frequencies")
    if freqs is not None:
        freqs = np.atleast_2d(np.array(freqs, dtype=float))
        if freqs.shape[1] != r.model.truncation_N:
            raise ConfigError("run.frequencies", f"each frequency needs {r.model.truncation_N} entries")
    rows = cf_test(r.model, r.noise, t, n, SeedSpec(r.seed, ("cf-test",)), freqs)
    out.csv("cf_test.csv", ["t", "xi_id", "analytic", "empirical", "stderr"],
            [(x.t, x.xi_id, x.analytic, x.empirical, x.stderr) for x in rows])
    return {"max_z": max(x.z_score for x in rows)}


def cmd_m2_test(cfg, out, workers):
    r = resolve(cfg)
    rows = m2_test(r.model, r.noise, get_int(cfg, "run.m2.cases", minimum=1),
                   get_float(cfg, "run.m2.t_max", positive=True), SeedSpec(r.seed, ("m2-test",)))
    out.csv("m2_test.csv", ["t", "s", "xi_id", "residual"], rows)
    return {"max_residual": max(x[3] for x in rows)}


def cmd_simulate(cfg, out, workers):
    r = resolve(cfg)
    T = get_float(cfg, "run.simulate.T", positive=True)
    steps = get_int(cfg, "run.simulate.steps", minimum=1)
    window = get_int(cfg, "run.simulate.window", minimum=1)
    if steps % window:
        raise ConfigError("run.simulate.window", f"must divide run.simulate.steps = {steps}")
    x0 = get_vector(cfg, "run.simulate.x0", r.model.truncation_N, np.zeros(r.model.truncation_N))
    path = simulate_path(r.model, r.noise, x0, np.linspace(0, T, steps + 1),
                         SeedSpec(r.seed, ("simulate",)),
                         refine=get_int(cfg, "run.simulate.refine", minimum=1))
    stats = regularity_stats(path, window)
    out.text("path.csv", path.to_csv())
    out.json("regularity.json", {"max_jump": stats.max_jump, "oscillation": stats.oscillation,
                                 "per_N": {str(k): {"max_jump": v[0], "oscillation": v[1]}
                                           for k, v in stats.per_N.items()},
                                 "meta": path.meta})
    return {"max_jump": stats.max_jump}


def cmd_dichotomy(cfg, out, workers):
    seed = get_int(cfg, "run.seed", minimum=0)
    b = "run.dichotomy"
    alpha = get_float(cfg, f"{b}.alpha", lo=0.0, hi=2.0)
    g2 = get_float_list(cfg, f"{b}.gamma2")
    Ns = [int(x) for x in get_float_list(cfg, f"{b}.N", min_len=2)]
    if any(n < 1 for n in Ns) or len(set(Ns)) != len(Ns):
        raise ConfigError(f"{b}.N", "truncation levels must be distinct positive integers")
    drift = get_choice(cfg, f"{b}.drift", {"constant", "model"})
    model = None
    if drift == "model":
        model = resolve(cfg).model
        if model.truncation_N < max(Ns):
            raise ConfigError("model.N", f"must be at least max({b}.N) = {max(Ns)}")
    res = dichotomy_experiment(alpha, g2, Ns, get_float(cfg, f"{b}.T", positive=True),
                               get_int(cfg, f"{b}.steps", minimum=1),
                               get_int(cfg, f"{b}.n_paths", minimum=1), SeedSpec(seed),
                               model=model, workers=workers)
    out.text("dichotomy.csv", res.to_csv())
    return {"slopes": res.slopes, "regimes": res.regimes}


def cmd_nest_probe(cfg, out, workers):
    r = resolve(cfg, need_params=True)
    b = "run.nest"
    rows = nest_exit_probe(r.model, r.noise, r.params, get_float_list(cfg, f"{b}.levels"),
                           get_float(cfg, f"{b}.T", positive=True),
                           get_int(cfg, f"{b}.n_paths", minimum=1), SeedSpec(r.seed),
                           dt=get_float(cfg, f"{b}.dt", positive=True),
                           n_V=get_int(cfg, f"{b}.n_V", minimum=1))
    out.csv("nest_probe.csv", ["level", "exceedance", "stderr"],
            [(x.level, x.exceedance, x.stderr) for x in rows])
    return {"exceedance": [x.exceedance for x in rows]}


def cmd_lyapunov_eval(cfg, out, workers):
    r = resolve(cfg, need_params=True)
    b = "run.lyapunov_eval"
    n = get_int(cfg, f"{b}.n", minimum=2)
    ceiling = get_float(cfg, f"{b}.ceiling", positive=True)
    radii = get_float_list(cfg, f"{b}.radii")
    n_states = get_int(cfg, f"{b}.states", minimum=0)
    hs = get_float_list(cfg, f"{b}.h")
    for i, h in enumerate(hs):
        if not h > 0:
            raise ConfigError(f"{b}.h[{i}]", f"must be positive, got {h}")
    ray = lyapunov_ray(r.model, r.noise, r.params, radii, n,
                       SeedSpec(r.seed, ("lyapunov-eval", "ray")), ceiling)
    out.csv("lyapunov_ray.csv", ["r", "v", "V", "stderr", "diverging"], ray)
    exc = excessivity_suite(r.model, r.noise, r.params, n_states, hs, n,
                            SeedSpec(r.seed, ("lyapunov-eval", "excessivity")), ceiling)
    out.csv("excessivity.csv", ["state", "h", "discounted", "discounted_se", "reference",
                                "reference_se", "passed"], exc)
    return {"V": [x[2] for x in ray], "excessivity_passed": all(x[6] for x in exc)}


def cmd_check_hsigma(cfg, out, workers):
    d = get_int(cfg, "model.d", minimum=1)
    alpha = get_float(cfg, "noise.alpha", lo=0.0, hi=2.0)
    g1 = get_float(cfg, "noise.gamma1", optional=True)
    g2 = get_float(cfg, "noise.gamma2", optional=True)
    b = "run.hsigma"
    a_range = get_float_list(cfg, f"{b}.a_range", min_len=2)
    p_range = get_float_list(cfg, f"{b}.p_range", min_len=2)
    if not 0 < a_range[0] < a_range[1]:
        raise ConfigError(f"{b}.a_range", "need 0 < low < high")
    if not 2 < p_range[0] < p_range[1]:
        raise ConfigError(f"{b}.p_range", "need 2 < low < high")
    rep = check_H_Sigma(d, alpha, g1, g2, a_range[:2], p_range[:2],
                        get_int(cfg, f"{b}.grid", minimum=2))
    out.json("hsigma.json", {"inputs": {"d": d, "alpha": alpha, "gamma1": g1, "gamma2": g2},
                             **rep.to_dict()})
    return {"feasible": rep.feasible, "witness": rep.witness}


def cmd_check_hamu(cfg, out, workers):
    r = resolve(cfg, need_params=True)
    rep = check_H_A_mu(r.model, r.noise, r.params, beta=get_beta(cfg, r.noise.alpha))
    out.json("hamu.json", rep.to_dict())
    return {"status": rep.status, "witness": rep.witness}


def cmd_check_hs(cfg, out, workers):
    r = resolve(cfg)
    rep = check_hs_embedding(r.model, r.noise, get_float(cfg, "run.hs.t", positive=True))
    out.json("hs.json", rep.to_dict())
    return {"N1_finite": rep.N1_finite, "N2_finite": rep.N2_finite}


# potlab

def _pot_common(cfg):
    chain = build_chain(cfg)
    alpha = get_float(cfg, "run.potlab.alpha", positive=True)
    return chain, alpha


def pot_resolvent(cfg, out, workers):
    chain, alpha = _pot_common(cfg)
    U = resolvent(chain, alpha)
    mass = alpha * U.sum(axis=1)
    out.json("potlab_resolvent.json", {"alpha": alpha, "U": U.tolist(),
                                       "max_mass_defect": float(np.abs(mass - 1).max())})
    return {"max_mass_defect": float(np.abs(mass - 1).max())}


def pot_excessive(cfg, out, workers):
    chain, alpha = _pot_common(cfg)
    v = get_vector(cfg, "run.potlab.v", chain.n_states, np.ones(chain.n_states))
    rep = is_excessive(chain, alpha, v)
    out.json("potlab_excessive.json", {"alpha": alpha, "v": v.tolist(), "excessive": rep.excessive,
                                       "witness": rep.witness,
                                       "resolvent_consistent": rep.resolvent_consistent})
    return {"excessive": rep.excessive, "witness": rep.witness}


def pot_balayage(cfg, out, workers):
    chain, alpha = _pot_common(cfg)
    n = chain.n_states
    A = get_states(cfg, "run.potlab.A", n)
    u = get_vector(cfg, "run.potlab.u", n, np.ones(n), nonneg=True)
    lp = reduced_lp(chain, alpha, A, u)
    hit = hitting_balayage(chain, alpha, A, u)
    horizon = get_float(cfg, "run.potlab.horizon", positive=True, optional=True)
    mc = mc_balayage(chain, alpha, A, u, get_int(cfg, "run.potlab.n_paths", minimum=1),
                     SeedSpec(get_int(cfg, "run.seed", minimum=0), ("potlab", "balayage")), horizon)
    payload = {"alpha": alpha, "A": A, "u": u.tolist(), "lp": lp.to_dict(),
               "hitting": hit.to_dict(), "monte_carlo": mc.to_dict(),
               "max_lp_hitting_difference": float(np.abs(lp.values - hit.values).max()),
               "u_excessive": is_excessive(chain, alpha, u).excessive}
    if n <= 8:
        ok, gap = certify_minimality(chain, alpha, A, u, lp)
        payload["minimality"] = {"certified": ok, "max_gap": gap}
    out.json("potlab_balayage.json", payload)
    return {"lp": lp.values.tolist(), "hitting": hit.values.tolist()}


def pot_polar(cfg, out, workers):
    chain, _ = _pot_common(cfg)
    A = get_states(cfg, "run.potlab.A", chain.n_states)
    null = polar_null_set(chain, A)
    out.json("potlab_polar.json", {"A": A, "null_set": null})
    return {"null_set": null}


def _nest_family(cfg, n):
    raw = _get(cfg, "run.potlab.F")
    key = "run.potlab.F"
    if raw is None:
        if n > 40:
            return [list(range(k + 1)) for k in range(10, 41, 2)]
        return [list(range(k + 1)) for k in range(n)]
    if not isinstance(raw, list) or not raw:
        raise ConfigError(key, "expected a non-empty list")
    fam = []
    for i, item in enumerate(raw):
        if isinstance(item, int) and not isinstance(item, bool):
            if not 0 <= item < n:
                raise ConfigError(f"{key}[{i}]", f"level must lie in 0..{n - 1}")
            fam.append(list(range(item + 1)))
        else:
            fam.append(get_states({"x": item}, "x", n) if isinstance(item, list) else None)
            if fam[-1] is None:
                raise ConfigError(f"{key}[{i}]", "expected a level or a list of states")
    for i, (a, b) in enumerate(zip(fam, fam[1:])):
        if not set(a) <= set(b):
            raise ConfigError(f"{key}[{i + 1}]", "sets must be increasing")
    return fam


def pot_nest(cfg, out, workers):
    chain, alpha = _pot_common(cfg)
    fam = _nest_family(cfg, chain.n_states)
    horizon = get_float(cfg, "run.potlab.horizon", positive=True, optional=True)
    rep = nest_check(chain, alpha, fam, get_int(cfg, "run.potlab.n_paths", minimum=1),
                     SeedSpec(get_int(cfg, "run.seed", minimum=0), ("potlab", "nest")),
                     horizon=horizon)
    out.json("potlab_nest.json", {
        "alpha": alpha, "levels": [max(f) if f else -1 for f in fam],
        "balayage_max": rep.balayage_max, "exit_quantiles": rep.exit_quantiles,
        "exit_fraction": rep.exit_fraction, "analytic_verdict": rep.analytic_verdict,
        "mc_verdict": rep.mc_verdict, "agree": rep.agree, "probe": rep.probe,
        "start": rep.start, "horizon": rep.horizon})
    return {"analytic": rep.analytic_verdict, "monte_carlo": rep.mc_verdict}


COMMANDS: dict[str, Callable] = {
    "spectrum": cmd_spectrum, "cf-test": cmd_cf_test, "m2-test": cmd_m2_test,
    "simulate": cmd_simulate, "dichotomy": cmd_dichotomy, "nest-probe": cmd_nest_probe,
    "lyapunov-eval": cmd_lyapunov_eval, "check-hsigma": cmd_check_hsigma,
    "check-hamu": cmd_check_hamu, "check-hs": cmd_check_hs,
}
POTLAB: dict[str, Callable] = {
    "resolvent": pot_resolvent, "excessive": pot_excessive, "balayage": pot_balayage,
    "polar": pot_polar, "nest": pot_nest,
}
# config block blamed for numerical failures of each command
_BLOCK = {"cf-test": "noise", "m2-test": "noise", "check-hamu": "lyapunov", "nest-probe": "run.nest",
          "lyapunov-eval": "run.lyapunov_eval", "dichotomy": "run.dichotomy",
          "simulate": "run.simulate", "potlab": "run.potlab", "check-hsigma": "run.hsigma"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment configuration")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a dotted config key (repeatable)")
    common.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the generation time from output headers")
    common.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    parser = argparse.ArgumentParser(prog="mehlerlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    pot = sub.add_parser("potlab", help="finite-chain potential theory")
    pot_sub = pot.add_subparsers(dest="pot_command", required=True)
    for name in POTLAB:
        pot_sub.add_parser(name, parents=[common])
    return parser


def _emit_error(kind: str, key: Optional[str], message: str, out_dir: Optional[Path]) -> None:
    record = {"error": kind, "key": key, "message": message}
    text = json.dumps(record, sort_keys=True)
    print(text, file=sys.stderr)
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "error.json").write_text(text + "\n")
        except OSError:
            pass


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    name = args.command if args.command != "potlab" else f"potlab {args.pot_command}"
    handler = COMMANDS.get(args.command) or POTLAB[args.pot_command]
    out_dir = args.out or Path(os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT))
    if args.workers < 1:
        _emit_error("validation", "--workers", "must be at least 1", None)
        return 1
    try:
        cfg = load_config(args.config, args.overrides)
        seed = get_int(cfg, "run.seed", minimum=0)
        out = Output(out_dir, name, config_hash(cfg), seed, not args.no_timestamp)
        summary = handler(cfg, out, args.workers)
    except ConfigError as exc:
        _emit_error("validation", exc.key, exc.message, out_dir)
        return 1
    except ArithmeticError as exc:
        _emit_error("numerical", _BLOCK.get(args.command), str(exc), out_dir)
        return 2
    except ValueError as exc:
        # a module precondition the config checks did not anticipate
        _emit_error("validation", _BLOCK.get(args.command), str(exc), out_dir)
        return 1
    stale = out_dir / "error.json"
    if stale.exists():
        stale.unlink()
    print(json.dumps({"command": name, "files": [str(p) for p in out.written],
                      "summary": _jsonable(summary)}, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
