"""Command-line interface.

Subcommands:
  run      one method, one target, one seed -> CSV (+ final-Gaussian JSON)
  bench2d  targets A-D sweep, both methods, multi-seed
  bench10d random-mixture study in d=10 (desk scale by default, --full for
           the complete protocol)
  sweep    sigma / particle-count / rebase-frequency sensitivity
  validate run the built-in invariant suites

Flags override values from an optional flat key=value config file
(--config FILE, '#' comments).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import GaussCboError, ConfigError
from .harness import (
    RunConfig,
    RandomGmmSpec,
    final_to_dict,
    load_target,
    parse_kv_text,
    run_experiment,
    run_random_gmm_study,
    run_single,
    run_sweep,
    write_csv,
)
from . import validate as validate_mod

_CONFIG_KEYS = {
    "target": str, "method": str, "seed": int, "seeds": int, "dt": float,
    "sigma": float, "lambda": float, "alpha": float, "particles": int,
    "steps": int, "horizon": float, "rebase_every": float, "out": str,
    "workers": int, "init": str,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="flat key=value config file")
    p.add_argument("--target", type=str, default=None)
    p.add_argument("--method", type=str, default=None, choices=["cbo", "gf", "both"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--seeds", type=int, default=None, help="number of seeds")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--particles", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--rebase-every", dest="rebase_every", type=float, default=None)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--workers", type=int, default=None)


def _merged(args: argparse.Namespace) -> dict:
    """Config-file values, overridden by any explicitly given flags."""
    vals: dict = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        for k, v in parse_kv_text(path.read_text()).items():
            if k not in _CONFIG_KEYS:
                raise ConfigError(f"unknown config key {k!r}")
            vals[k] = _CONFIG_KEYS[k](v)
    for k in ("target", "method", "seed", "seeds", "dt", "sigma", "alpha",
              "particles", "steps", "horizon", "rebase_every", "out", "workers"):
        v = getattr(args, k, None)
        if v is not None:
            vals[k] = v
    if getattr(args, "lam", None) is not None:
        vals["lambda"] = args.lam
    return vals


def _get(vals: dict, key: str, default):
    return vals.get(key, default)


def cmd_run(args) -> int:
    vals = _merged(args)
    method = _get(vals, "method", "cbo")
    if method == "both":
        raise ConfigError("run takes a single method (cbo or gf)")
    target_name = _get(vals, "target", "A")
    target = load_target(target_name)
    dt = _get(vals, "dt", 0.1)
    steps = _get(vals, "steps", None)
    if steps is None:
        steps = int(round(_get(vals, "horizon", 10.0) / dt))
    seed = _get(vals, "seed", 0)
    rows, final = run_single(
        method, target, seed, dt=dt, steps=steps,
        sigma=_get(vals, "sigma", 5.0), lam=_get(vals, "lambda", 1.0),
        alpha=_get(vals, "alpha", 1e4), particles=_get(vals, "particles", 20),
        rebase_every=_get(vals, "rebase_every", 0.0))
    out = Path(_get(vals, "out", f"{target_name}_{method}_seed{seed}.csv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(rows, out, method)
    final_path = out.with_suffix(".final.json")
    final_path.write_text(json.dumps(
        final_to_dict(final, method=method, target=target_name, seed=seed,
                      kl=rows[-1]["kl_consensus" if method == "cbo" else "kl"]),
        sort_keys=True, indent=2) + "\n")
    print(f"wrote {out} and {final_path}")
    return 0


def cmd_bench2d(args) -> int:
    vals = _merged(args)
    out_dir = _get(vals, "out", "results_2d")
    for name in ["A", "B", "C", "D"]:
        cfg = RunConfig(
            method=_get(vals, "method", "both"), target=name,
            dt=vals.get("dt"), horizon=_get(vals, "horizon", 10.0),
            sigma=_get(vals, "sigma", 5.0), lam=_get(vals, "lambda", 1.0),
            alpha=_get(vals, "alpha", 1e4), particles=_get(vals, "particles", 20),
            rebase_every=_get(vals, "rebase_every", 0.0),
            seed0=_get(vals, "seed", 0), n_seeds=_get(vals, "seeds", 20),
            out_dir=out_dir, workers=_get(vals, "workers", 1))
        summary = run_experiment(cfg)
        for m, agg in summary["methods"].items():
            print(f"target {name} {m}: final median KL {agg['median'][-1]:.4f}")
    return 0


def cmd_bench10d(args) -> int:
    vals = _merged(args)
    full = getattr(args, "full", False)
    spec = RandomGmmSpec()
    summary = run_random_gmm_study(
        spec,
        n_instances=_get(vals, "seeds", 20 if full else 5),
        seed0=_get(vals, "seed", 0),
        dt=_get(vals, "dt", 0.1),
        horizon=_get(vals, "horizon", 75.0 if full else 30.0),
        sigma=_get(vals, "sigma", 2.5), lam=_get(vals, "lambda", 1.0),
        alpha=_get(vals, "alpha", 1e4), particles=_get(vals, "particles", 100),
        out_dir=_get(vals, "out", "results_d10"),
        workers=_get(vals, "workers", 1))
    for m, agg in summary["methods"].items():
        print(f"{m}: final median RelKL {agg['median'][-1]:.4f}")
    return 0


def cmd_sweep(args) -> int:
    vals = _merged(args)
    param = args.param
    defaults = {
        "sigma": [1.0, 3.0, 5.0, 7.0],
        "particles": [5, 10, 20, 40],
        "rebase_every": [0.1, 0.4, 1.6, 12.8],
    }
    values = defaults[param]
    if args.values:
        cast = int if param == "particles" else float
        values = [cast(v) for v in args.values.split(",")]
    base_cfg = RunConfig(
        method="cbo", target=_get(vals, "target", "A"), dt=vals.get("dt"),
        horizon=_get(vals, "horizon", 10.0), sigma=_get(vals, "sigma", 5.0),
        lam=_get(vals, "lambda", 1.0), alpha=_get(vals, "alpha", 1e4),
        particles=_get(vals, "particles", 20),
        rebase_every=_get(vals, "rebase_every", 0.0),
        seed0=_get(vals, "seed", 0), n_seeds=_get(vals, "seeds", 10),
        out_dir=_get(vals, "out", "results_sweep"),
        workers=_get(vals, "workers", 1))
    summary = run_sweep(param, values, base_cfg)
    for v in summary["values"]:
        med = summary["panels"][str(v)]["median"][-1]
        print(f"{param}={v}: final median KL {med:.4f}")
    return 0


def cmd_validate(args) -> int:
    return 0 if validate_mod.run_all() else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gausscbo",
        description="Gradient-free optimization over Gaussian measures")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single run -> CSV")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_b2 = sub.add_parser("bench2d", help="targets A-D benchmark")
    _add_common(p_b2)
    p_b2.set_defaults(func=cmd_bench2d)

    p_b10 = sub.add_parser("bench10d", help="random-mixture d=10 study")
    _add_common(p_b10)
    p_b10.add_argument("--full", action="store_true",
                       help="full-scale protocol (20 instances, horizon 75)")
    p_b10.set_defaults(func=cmd_bench10d)

    p_sw = sub.add_parser("sweep", help="parameter sensitivity sweep")
    _add_common(p_sw)
    p_sw.add_argument("param", choices=["sigma", "particles", "rebase_every"])
    p_sw.add_argument("--values", type=str, default=None,
                      help="comma-separated sweep values")
    p_sw.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="run built-in invariant suites")
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return args.func(args)
    except GaussCboError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
